"""Exception hierarchy shared by all fraginv modules."""

from __future__ import annotations


class FragInvError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(FragInvError, ValueError):
    """A scalar input is out of range or non-finite."""


class InvalidRangeError(FragInvError, ValueError):
    """An integration interval or index range is inconsistent."""


class DimensionMismatchError(FragInvError, ValueError):
    """Array arguments do not share the expected shape."""


class DegenerateGridError(FragInvError):
    """A per-cell weight denominator vanished; the grid cannot support the
    weighted scheme."""


class NumericalBlowupError(FragInvError):
    """NaN or Inf appeared during time stepping.

    ``step`` holds the offending step number; ``iteration`` is set when the
    blowup occurred inside a descent loop.
    """

    def __init__(self, message: str, step: int | None = None,
                 iteration: int | None = None):
        super().__init__(message)
        self.step = step
        self.iteration = iteration


class ConfigError(FragInvError):
    """One or more configuration entries failed validation.

    ``problems`` lists every violation found, each prefixed with the key path
    (e.g. ``time.steps: required key is missing``).
    """

    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = list(problems)
