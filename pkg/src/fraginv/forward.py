"""Explicit finite volume schemes for the truncated fragmentation equation.

Two discretizations of the birth/death form are provided: the plain scheme
(``fvs``) whose birth flux uses exact daughter-count integrals, and the
weighted scheme (``wfvs``) that rescales the birth and death terms per cell
so each fragmentation event conserves mass exactly at the discrete level.

Both updates read ``f <- f + dt * (birth - death)`` where the birth term
already carries the 1/dx cell average; the death term is a plain rate.
Time stepping is forward Euler.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    DegenerateGridError,
    DimensionMismatchError,
    InvalidParameterError,
    NumericalBlowupError,
)
from .grid import Grid, TimeGrid
from .kernels import DaughterDistribution, SelectionFunction

__all__ = [
    "StabilityWarning",
    "StateVector",
    "FragmentTable",
    "WeightPair",
    "Trajectory",
    "compute_fragment_table",
    "fvs_step",
    "compute_wfvs_weights",
    "wfvs_step",
    "run_forward",
    "forward_operator",
    "moment",
]

SCHEMES = ("fvs", "wfvs")


class StabilityWarning(UserWarning):
    """Explicit Euler step large enough to risk negative densities."""


def _as_values(state) -> np.ndarray:
    values = getattr(state, "values", state)
    return np.asarray(values, dtype=float)


@dataclass(frozen=True)
class StateVector:
    """Cell-averaged number density at one time level."""

    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise InvalidParameterError("state values must form a 1-D array")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "time", float(self.time))


@dataclass(frozen=True)
class FragmentTable:
    """Per-cell daughter-count integrals feeding the forward birth flux.

    ``counts[i, j]`` integrates the daughter distribution of a parent at
    node j over daughter cell i, stopping at the parent node on the
    diagonal.  Entries with i > j vanish because fragments are smaller than
    their parent.
    """

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=float)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise InvalidParameterError("counts must be a square matrix")
        if np.any(counts < 0.0) or np.any(counts[np.tril_indices_from(counts, -1)] != 0.0):
            raise InvalidParameterError(
                "counts must be nonnegative and vanish below the diagonal")
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)

    @property
    def num_cells(self) -> int:
        return self.counts.shape[0]


@dataclass(frozen=True)
class WeightPair:
    """Birth/death multipliers of the mass-conserving weighted scheme."""

    birth: np.ndarray
    death: np.ndarray

    def __post_init__(self):
        birth = np.asarray(self.birth, dtype=float)
        death = np.asarray(self.death, dtype=float)
        if birth.shape != death.shape or birth.ndim != 1:
            raise InvalidParameterError("birth and death weights must be 1-D and equal length")
        for arr in (birth, death):
            arr.flags.writeable = False
        object.__setattr__(self, "birth", birth)
        object.__setattr__(self, "death", death)


@dataclass(frozen=True)
class Trajectory:
    """States at every major time level plus run diagnostics."""

    times: np.ndarray      # (N + 1,)
    states: np.ndarray     # (N + 1, I)
    min_value: float       # smallest density seen, negative on undershoot

    def state_at(self, n: int) -> StateVector:
        return StateVector(self.states[n].copy(), float(self.times[n]))

    @property
    def initial(self) -> StateVector:
        return self.state_at(0)

    @property
    def final(self) -> StateVector:
        return self.state_at(len(self.times) - 1)


def compute_fragment_table(grid: Grid, daughter: DaughterDistribution) -> FragmentTable:
    """Tabulate the exact partial daughter-count integrals on ``grid``.

    Column j sums to the mean fragment count of the parent at node j; that
    identity holds to machine precision because every entry is an exact
    integral of the daughter distribution.
    """
    I = grid.num_cells
    edges = grid.edges
    centers = grid.centers
    counts = np.zeros((I, I))
    for j in range(I):
        parent = centers[j]
        for i in range(j + 1):
            upper = edges[i + 1] if i != j else parent
            counts[i, j] = daughter.number_integral(edges[i], upper, parent)
    return FragmentTable(counts)


def _check_step_args(values: np.ndarray, grid: Grid, table: FragmentTable, dt: float) -> None:
    if values.shape != (grid.num_cells,):
        raise DimensionMismatchError(
            f"state has {values.shape[0]} cells but the grid has {grid.num_cells}")
    if table.num_cells != grid.num_cells:
        raise DimensionMismatchError(
            f"table was built for {table.num_cells} cells, grid has {grid.num_cells}")
    if not dt > 0.0:
        raise InvalidParameterError(f"dt must be positive, got {dt}")


def fvs_step(state: StateVector, grid: Grid, selection: SelectionFunction,
             table: FragmentTable, dt: float) -> StateVector:
    """One forward Euler step of the plain finite volume scheme."""
    f = _as_values(state)
    _check_step_args(f, grid, table, dt)
    rates = selection.at(grid.centers)
    birth = table.counts @ (rates * f * grid.widths) / grid.widths
    death = rates * f
    return StateVector(f + dt * (birth - death), getattr(state, "time", 0.0) + dt)


def compute_wfvs_weights(grid: Grid, table: FragmentTable,
                         nu: Callable[[float], float] | float) -> WeightPair:
    """Birth/death weights that enforce per-event mass conservation.

    For each cell j >= 2 the birth weight matches the produced fragment
    count and the death weight is then fixed by the balance
    ``death[j] * x_j = birth[j] * sum_i x_i * counts[i, j]``, which is what
    makes the weighted step conserve the first moment identically.  Both
    weights vanish on the first cell.
    """
    if table.num_cells != grid.num_cells:
        raise DimensionMismatchError(
            f"table was built for {table.num_cells} cells, grid has {grid.num_cells}")
    I = grid.num_cells
    x = grid.centers
    counts = table.counts
    nu_at = nu if callable(nu) else (lambda _y, _v=float(nu): _v)

    birth = np.zeros(I)
    death = np.zeros(I)
    for j in range(1, I):
        denom = float(np.dot(x[j] - x[:j], counts[:j, j]))
        if not np.isfinite(denom) or denom <= 0.0:
            raise DegenerateGridError(
                f"weight denominator vanished for cell {j} (0-based)")
        birth[j] = x[j] * (float(nu_at(x[j])) - 1.0) / denom
        death[j] = birth[j] / x[j] * float(np.dot(x[: j + 1], counts[: j + 1, j]))
        if not (np.isfinite(birth[j]) and np.isfinite(death[j])
                and birth[j] > 0.0 and death[j] > 0.0):
            raise DegenerateGridError(
                f"non-finite or nonpositive weight for cell {j} (0-based)")
    return WeightPair(birth=birth, death=death)


def wfvs_step(state: StateVector, grid: Grid, selection: SelectionFunction,
              table: FragmentTable, weights: WeightPair, dt: float) -> StateVector:
    """One forward Euler step of the mass-conserving weighted scheme."""
    f = _as_values(state)
    _check_step_args(f, grid, table, dt)
    if weights.birth.shape != (grid.num_cells,):
        raise DimensionMismatchError(
            f"weights hold {weights.birth.shape[0]} cells, grid has {grid.num_cells}")
    rates = selection.at(grid.centers)
    birth = table.counts @ (weights.birth * rates * f * grid.widths) / grid.widths
    death = weights.death * rates * f
    return StateVector(f + dt * (birth - death), getattr(state, "time", 0.0) + dt)


def forward_operator(grid: Grid, selection: SelectionFunction, table: FragmentTable,
                     weights: WeightPair | None = None) -> np.ndarray:
    """Dense matrix L of the chosen scheme, so one step is ``f + dt * L @ f``."""
    rates = selection.at(grid.centers)
    birth_scale = rates * grid.widths
    death_scale = rates
    if weights is not None:
        birth_scale = weights.birth * birth_scale
        death_scale = weights.death * death_scale
    L = table.counts * birth_scale[None, :] / grid.widths[:, None]
    L[np.diag_indices_from(L)] -= death_scale
    return L


def run_forward(grid: Grid, time_grid: TimeGrid, selection: SelectionFunction,
                daughter: DaughterDistribution, scheme: str, initial: StateVector,
                substeps: int = 1) -> Trajectory:
    """March the chosen scheme from t=0 to t=T, recording every major level.

    Emits a ``StabilityWarning`` when the Euler step times the largest
    nodal rate exceeds one (densities may undershoot zero; they are not
    clipped).  Raises ``NumericalBlowupError`` as soon as a non-finite
    value appears, reporting the offending step.
    """
    if scheme not in SCHEMES:
        raise InvalidParameterError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    substeps = int(substeps)
    if substeps < 1:
        raise InvalidParameterError(f"substeps must be >= 1, got {substeps}")
    f0 = _as_values(initial)
    if f0.shape != (grid.num_cells,):
        raise DimensionMismatchError(
            f"initial state has {f0.shape[0]} cells but the grid has {grid.num_cells}")
    if not np.all(np.isfinite(f0)):
        raise InvalidParameterError("initial state must be finite")

    table = compute_fragment_table(grid, daughter)
    weights = compute_wfvs_weights(grid, table, daughter.nu) if scheme == "wfvs" else None
    dt = time_grid.dt / substeps
    if dt * float(np.max(selection.at(grid.centers))) > 1.0:
        warnings.warn(
            "explicit step exceeds the stability budget (dt * max rate > 1); "
            "densities may undershoot zero", StabilityWarning, stacklevel=2)

    N = time_grid.num_steps
    t0 = float(getattr(initial, "time", 0.0))
    states = np.empty((N + 1, grid.num_cells))
    states[0] = f0
    times = t0 + time_grid.dt * np.arange(N + 1)
    state = StateVector(f0, t0)
    for n in range(1, N + 1):
        for _ in range(substeps):
            if scheme == "fvs":
                state = fvs_step(state, grid, selection, table, dt)
            else:
                state = wfvs_step(state, grid, selection, table, weights, dt)
        if not np.all(np.isfinite(state.values)):
            raise NumericalBlowupError(
                f"non-finite density after step {n} of {N}", step=n)
        states[n] = state.values
    return Trajectory(times=times, states=states, min_value=float(states.min()))


def moment(state, grid: Grid, order: float) -> float:
    """Discrete moment of the given order: sum of x**p * f * dx."""
    if order < 0:
        raise InvalidParameterError(f"moment order must be >= 0, got {order}")
    values = _as_values(state)
    if values.shape != (grid.num_cells,):
        raise DimensionMismatchError(
            f"state has {values.shape[0]} cells but the grid has {grid.num_cells}")
    return float(np.sum(grid.centers ** order * values * grid.widths))
