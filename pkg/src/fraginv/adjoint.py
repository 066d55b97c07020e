"""Backward-in-time adjoint solvers for the fragmentation dynamics.

Two gradient routes are provided.  The default discretizes the continuous
adjoint equation with the same finite volume machinery as the forward
problem and marches it from t=T back to t=0.  The second route transposes
the discrete forward step exactly (in the dx-weighted inner product) and
therefore reproduces the derivative of the discrete cost to roundoff; it
serves as the gradient oracle against which the continuous route is
checked.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    InvalidParameterError,
    NumericalBlowupError,
)
from .forward import (
    SCHEMES,
    compute_fragment_table,
    compute_wfvs_weights,
    forward_operator,
    _as_values,
)
from .grid import Grid, TimeGrid
from .kernels import (
    DaughterDistribution,
    SelectionFunction,
    weighted_selection_daughter_integral,
)

__all__ = [
    "AdjointVector",
    "AdjointTable",
    "compute_adjoint_table",
    "adjoint_step_backward",
    "run_adjoint",
    "transpose_adjoint_gradient",
]


@dataclass(frozen=True)
class AdjointVector:
    """Adjoint values at one time level; sign-indefinite by nature."""

    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise InvalidParameterError("adjoint values must form a 1-D array")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "time", float(self.time))


@dataclass(frozen=True)
class AdjointTable:
    """Selection-weighted daughter integrals feeding the adjoint birth flux.

    ``rates[i, j]`` integrates ``S(x) * b(x_j, x)`` over parent sizes x in
    cell i, starting at the node on the diagonal.  Entries with j > i
    vanish since the daughter must be smaller than the parent.
    """

    rates: np.ndarray

    def __post_init__(self):
        rates = np.asarray(self.rates, dtype=float)
        if rates.ndim != 2 or rates.shape[0] != rates.shape[1]:
            raise InvalidParameterError("rates must be a square matrix")
        if np.any(rates < 0.0) or np.any(rates[np.triu_indices_from(rates, 1)] != 0.0):
            raise InvalidParameterError(
                "rates must be nonnegative and vanish above the diagonal")
        rates.flags.writeable = False
        object.__setattr__(self, "rates", rates)

    @property
    def num_cells(self) -> int:
        return self.rates.shape[0]


def compute_adjoint_table(grid: Grid, selection: SelectionFunction,
                          daughter: DaughterDistribution) -> AdjointTable:
    """Tabulate the adjoint flux integrals on ``grid``."""
    I = grid.num_cells
    edges = grid.edges
    centers = grid.centers
    rates = np.zeros((I, I))
    for i in range(I):
        for j in range(i + 1):
            lower = edges[i] if j != i else centers[i]
            rates[i, j] = weighted_selection_daughter_integral(
                selection, daughter, x0=centers[j], a=lower, c=edges[i + 1])
    return AdjointTable(rates)


def adjoint_step_backward(phi: AdjointVector, grid: Grid, selection: SelectionFunction,
                          table: AdjointTable, dt: float) -> AdjointVector:
    """One backward Euler-in-reverse step; the time stamp decreases by dt."""
    values = _as_values(phi)
    if values.shape != (grid.num_cells,):
        raise DimensionMismatchError(
            f"adjoint state has {values.shape[0]} cells but the grid has {grid.num_cells}")
    if table.num_cells != grid.num_cells:
        raise DimensionMismatchError(
            f"table was built for {table.num_cells} cells, grid has {grid.num_cells}")
    if not dt > 0.0:
        raise InvalidParameterError(f"dt must be positive, got {dt}")
    birth = table.rates @ (values * grid.widths) / grid.widths
    death = selection.at(grid.centers) * values
    return AdjointVector(values + dt * (birth - death),
                         getattr(phi, "time", 0.0) - dt)


def run_adjoint(grid: Grid, time_grid: TimeGrid, selection: SelectionFunction,
                daughter: DaughterDistribution, terminal: AdjointVector,
                substeps: int = 1) -> AdjointVector:
    """Integrate the adjoint equation from t=T down to t=0.

    The caller supplies the terminal condition (final-state mismatch); the
    coefficients do not depend on the forward solution because the forward
    problem is linear.
    """
    substeps = int(substeps)
    if substeps < 1:
        raise InvalidParameterError(f"substeps must be >= 1, got {substeps}")
    values = _as_values(terminal)
    if values.shape != (grid.num_cells,):
        raise DimensionMismatchError(
            f"terminal state has {values.shape[0]} cells but the grid has {grid.num_cells}")
    if not np.all(np.isfinite(values)):
        raise InvalidParameterError("terminal state must be finite")

    table = compute_adjoint_table(grid, selection, daughter)
    dt = time_grid.dt / substeps
    # the terminal condition lives at t = T by definition of this solve
    phi = AdjointVector(values, time_grid.final_time)
    for n in range(1, time_grid.num_steps + 1):
        for _ in range(substeps):
            phi = adjoint_step_backward(phi, grid, selection, table, dt)
        if not np.all(np.isfinite(phi.values)):
            raise NumericalBlowupError(
                f"non-finite adjoint after backward step {n} of {time_grid.num_steps}",
                step=n)
    return phi


def transpose_adjoint_gradient(grid: Grid, time_grid: TimeGrid,
                               selection: SelectionFunction,
                               daughter: DaughterDistribution, scheme: str,
                               initial, target, substeps: int = 1) -> np.ndarray:
    """Exact gradient of the discrete cost with respect to the initial datum.

    Propagates the final-state mismatch backward through the dx-weighted
    transpose of each forward step's linear operator, so the returned
    vector g satisfies ``<g, d>_dx = dJ(f0)[d]`` up to roundoff for every
    direction d, under the chosen forward scheme.
    """
    if scheme not in SCHEMES:
        raise InvalidParameterError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    substeps = int(substeps)
    if substeps < 1:
        raise InvalidParameterError(f"substeps must be >= 1, got {substeps}")
    f = _as_values(initial).copy()
    goal = _as_values(target)
    if f.shape != (grid.num_cells,) or goal.shape != f.shape:
        raise DimensionMismatchError("initial and target must match the grid size")

    table = compute_fragment_table(grid, daughter)
    weights = compute_wfvs_weights(grid, table, daughter.nu) if scheme == "wfvs" else None
    total = time_grid.num_steps * substeps
    if total == 0:
        return f - goal
    step_matrix = np.eye(grid.num_cells) + (time_grid.dt / substeps) * forward_operator(
        grid, selection, table, weights)

    for n in range(total):
        f = step_matrix @ f
        if not np.all(np.isfinite(f)):
            raise NumericalBlowupError(
                f"non-finite density after step {n + 1} of {total}", step=n + 1)
    v = grid.widths * (f - goal)
    for _ in range(total):
        v = step_matrix.T @ v
    return v / grid.widths
