"""Geometric size grids and uniform time grids.

The size domain (0, R] is partitioned into I cells whose interior edges
follow a geometric recurrence: the first interior edge sits at
``R / ratio**(I - 1)`` and every later edge multiplies the previous one by
``ratio``, so the last edge lands on R.  The left boundary edge is pinned at
zero, which a pure geometric sequence cannot reach.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError

__all__ = ["Grid", "TimeGrid", "build_geometric_grid", "build_time_grid"]


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise InvalidParameterError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class Grid:
    """Cell partition of (0, R] with edges, midpoints and widths.

    Immutable after construction; the arrays are marked read-only so a grid
    can be shared freely between concurrent solver runs.
    """

    edges: np.ndarray      # (I + 1,), edges[0] == 0, strictly increasing
    centers: np.ndarray    # (I,), midpoints of consecutive edges
    widths: np.ndarray     # (I,), positive cell widths

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=float)
        centers = np.asarray(self.centers, dtype=float)
        widths = np.asarray(self.widths, dtype=float)
        if edges.ndim != 1 or edges.size < 2:
            raise InvalidParameterError("edges must be a 1-D array of at least two values")
        if edges[0] != 0.0:
            raise InvalidParameterError("the left boundary edge must be exactly 0")
        if not np.all(np.isfinite(edges)):
            raise InvalidParameterError("edges must be finite")
        if np.any(np.diff(edges) <= 0.0):
            raise InvalidParameterError("edges must be strictly increasing")
        if centers.shape != (edges.size - 1,) or widths.shape != centers.shape:
            raise InvalidParameterError("centers and widths must hold one value per cell")
        if not np.array_equal(centers, 0.5 * (edges[:-1] + edges[1:])):
            raise InvalidParameterError("centers must be the exact edge midpoints")
        if not np.array_equal(widths, np.diff(edges)):
            raise InvalidParameterError("widths must be the exact edge differences")
        if abs(widths.sum() - edges[-1]) > 1e-12 * edges[-1]:
            raise InvalidParameterError("cell widths do not sum to the domain size")
        for arr in (edges, centers, widths):
            arr.flags.writeable = False
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "widths", widths)

    @property
    def num_cells(self) -> int:
        return self.widths.size

    @property
    def right_edge(self) -> float:
        return float(self.edges[-1])


@dataclass(frozen=True)
class TimeGrid:
    """Uniform partition of [0, T] into ``num_steps`` steps of size ``dt``.

    ``num_steps == 0`` is tolerated on direct construction as the degenerate
    no-dynamics case (dt is then 0); ``build_time_grid`` requires at least
    one step.
    """

    final_time: float
    num_steps: int

    def __post_init__(self):
        final_time = _require_finite("final_time", self.final_time)
        if final_time <= 0.0:
            raise InvalidParameterError(f"final_time must be positive, got {final_time}")
        num_steps = int(self.num_steps)
        if num_steps != self.num_steps or num_steps < 0:
            raise InvalidParameterError(f"num_steps must be an integer >= 0, got {self.num_steps!r}")
        object.__setattr__(self, "final_time", final_time)
        object.__setattr__(self, "num_steps", num_steps)

    @property
    def dt(self) -> float:
        return self.final_time / self.num_steps if self.num_steps else 0.0

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.num_steps + 1)


def build_geometric_grid(right_edge: float, num_cells: int, ratio: float,
                         first_edge: float | None = None) -> Grid:
    """Build the geometric cell partition of (0, right_edge].

    Parameters
    ----------
    right_edge:
        Domain size R; the last edge equals it up to roundoff.
    num_cells:
        Number of cells I (>= 1).
    ratio:
        Geometric growth factor between consecutive interior edges (> 1).
    first_edge:
        Optional override for the first interior edge.  When given, the
        growth factor is rederived as ``(R / first_edge) ** (1 / (I - 1))``
        so the grid still ends at R, and ``ratio`` is ignored.
    """
    R = _require_finite("right_edge", right_edge)
    if R <= 0.0:
        raise InvalidParameterError(f"right_edge must be positive, got {R}")
    I = int(num_cells)
    if I != num_cells or I < 1:
        raise InvalidParameterError(f"num_cells must be an integer >= 1, got {num_cells!r}")
    r = _require_finite("ratio", ratio)
    if r <= 1.0:
        raise InvalidParameterError(f"ratio must exceed 1, got {r}")

    if first_edge is None:
        start = R / r ** (I - 1)
    else:
        start = _require_finite("first_edge", first_edge)
        if I == 1:
            raise InvalidParameterError("first_edge requires at least two cells")
        if not 0.0 < start < R:
            raise InvalidParameterError(
                f"first_edge must lie strictly inside (0, {R}), got {start}")
        r = (R / start) ** (1.0 / (I - 1))

    edges = np.empty(I + 1)
    edges[0] = 0.0
    edges[1] = start
    for k in range(2, I + 1):
        edges[k] = r * edges[k - 1]
    centers = 0.5 * (edges[:-1] + edges[1:])
    widths = np.diff(edges)
    return Grid(edges=edges, centers=centers, widths=widths)


def build_time_grid(final_time: float, num_steps: int) -> TimeGrid:
    """Build the uniform time grid on [0, final_time] with dt = T / N."""
    if int(num_steps) < 1:
        raise InvalidParameterError(f"num_steps must be >= 1, got {num_steps!r}")
    return TimeGrid(final_time=final_time, num_steps=num_steps)
