"""Module entry point: python -m fraginv ..."""

from .cli import entrypoint

entrypoint()
