"""Fragmentation kernels: selection rate and daughter distribution.

The daughter distribution is exposed through its partial integrals rather
than pointwise values because both discretizations consume exact cell
integrals of ``b``.  For the power-law binary kernel ``b(x, y) = 2 / y``
the integrals have elementary closed forms; the mixed integral over the
parent size additionally offers a fixed-order Gauss-Legendre fallback for
selection exponents without one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, InvalidRangeError

__all__ = [
    "SelectionFunction",
    "DaughterDistribution",
    "weighted_selection_daughter_integral",
]

# Nodes/weights for the quadrature fallback, fixed order 8 on [-1, 1].
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class SelectionFunction:
    """Power-law breakage rate ``S(x) = coefficient * x**exponent``."""

    coefficient: float = 1.0
    exponent: float = 1.0
    kind: str = "power"

    def __post_init__(self):
        if self.kind != "power":
            raise InvalidParameterError(f"unknown selection kind {self.kind!r}")
        c = float(self.coefficient)
        e = float(self.exponent)
        if not (math.isfinite(c) and c >= 0.0):
            raise InvalidParameterError(f"coefficient must be finite and >= 0, got {c!r}")
        if not (math.isfinite(e) and e >= 0.0):
            raise InvalidParameterError(f"exponent must be finite and >= 0, got {e!r}")
        object.__setattr__(self, "coefficient", c)
        object.__setattr__(self, "exponent", e)

    def at(self, x):
        """Evaluate the rate at one size or an array of sizes (all >= 0)."""
        arr = np.asarray(x, dtype=float)
        if np.any(arr < 0.0):
            raise InvalidParameterError("particle sizes must be nonnegative")
        out = self.coefficient * arr ** self.exponent
        return out if arr.ndim else float(out)

    def __call__(self, x):
        return self.at(x)


@dataclass(frozen=True)
class DaughterDistribution:
    """Binary power-law daughter distribution ``b(x, y) = 2 / y`` on x < y.

    Satisfies the number condition (two fragments per event) and the
    per-event mass condition exactly, which the partial integrals below
    preserve to machine precision.
    """

    kind: str = "power_law_binary"

    def __post_init__(self):
        if self.kind != "power_law_binary":
            raise InvalidParameterError(f"unknown daughter kind {self.kind!r}")

    def nu(self, y) -> float:
        """Mean number of fragments per breakage of a parent of size y."""
        arr = np.asarray(y, dtype=float)
        return np.full(arr.shape, 2.0) if arr.ndim else 2.0

    def _check_interval(self, a: float, c: float, y: float) -> None:
        if not (math.isfinite(a) and math.isfinite(c) and math.isfinite(y)):
            raise InvalidParameterError("integration bounds must be finite")
        if a < 0.0 or a > c:
            raise InvalidRangeError(f"need 0 <= a <= c, got a={a}, c={c}")
        if c > y:
            raise InvalidRangeError(f"upper bound c={c} exceeds parent size y={y}")

    def number_integral(self, a: float, c: float, y: float) -> float:
        """Integral of b(x, y) over daughter sizes x in [a, c] (c <= y)."""
        a, c, y = float(a), float(c), float(y)
        self._check_interval(a, c, y)
        if y <= 0.0:
            raise InvalidParameterError(f"parent size y must be positive, got {y}")
        return 2.0 * (c - a) / y

    def mass_integral(self, a: float, c: float, y: float) -> float:
        """Integral of x * b(x, y) over x in [a, c] (c <= y)."""
        a, c, y = float(a), float(c), float(y)
        self._check_interval(a, c, y)
        if a == c:
            return 0.0
        return (c * c - a * a) / y

    def density(self, x, y):
        """Pointwise b(x, y); only the quadrature fallback needs this."""
        x = np.asarray(x, dtype=float)
        return np.where(x < y, 2.0 / y, 0.0)


def weighted_selection_daughter_integral(selection: SelectionFunction,
                                         daughter: DaughterDistribution,
                                         x0: float, a: float, c: float,
                                         method: str = "auto") -> float:
    """Integral of ``S(x) * b(x0, x)`` over parent sizes x in [a, c].

    The daughter size ``x0`` is fixed and must not exceed the interval,
    i.e. ``x0 <= a <= c``.  ``method`` selects the evaluation route:
    ``"auto"`` uses a closed form when one exists, ``"quadrature"`` forces
    the fixed-order Gauss-Legendre rule.
    """
    x0, a, c = float(x0), float(a), float(c)
    if not (math.isfinite(x0) and math.isfinite(a) and math.isfinite(c)):
        raise InvalidParameterError("integration bounds must be finite")
    if x0 < 0.0:
        raise InvalidParameterError(f"daughter size must be nonnegative, got {x0}")
    if a > c:
        raise InvalidRangeError(f"need a <= c, got a={a}, c={c}")
    if x0 > a:
        raise InvalidRangeError(f"daughter size x0={x0} exceeds lower bound a={a}")
    if method not in ("auto", "quadrature"):
        raise InvalidParameterError(f"unknown method {method!r}")
    if a == c or selection.coefficient == 0.0:
        return 0.0

    alpha = selection.exponent
    if method == "auto" and alpha > 0.0:
        # S(x) * b(x0, x) = 2 * S0 * x**(alpha - 1) integrates in closed form.
        return (2.0 * selection.coefficient / alpha) * (c ** alpha - a ** alpha)

    mid = 0.5 * (a + c)
    half = 0.5 * (c - a)
    xs = mid + half * _GL_NODES
    values = selection.at(xs) * daughter.density(x0, xs)
    return float(half * np.dot(_GL_WEIGHTS, values))
