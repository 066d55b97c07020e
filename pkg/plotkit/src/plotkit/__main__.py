"""Module entry point: python -m plotkit ..."""

from .cli import entrypoint

entrypoint()
