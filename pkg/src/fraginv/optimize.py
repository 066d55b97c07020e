"""Cost functional, adjoint gradients, fixed-step descent and the Taylor check.

The reconstruction loop repeatedly solves the forward problem from the
current initial-datum iterate, forms the final-state mismatch, pulls it
back to t=0 through one of the adjoint routes and takes a fixed gradient
step.  The Taylor check certifies a gradient by verifying that the
first-order expansion of the cost leaves a quadratically shrinking
remainder.
"""

from __future__ import annotations

import time as _time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .adjoint import (
    AdjointVector,
    adjoint_step_backward,
    compute_adjoint_table,
)
from .errors import (
    DimensionMismatchError,
    InvalidParameterError,
    NumericalBlowupError,
)
from .forward import (
    SCHEMES,
    StabilityWarning,
    StateVector,
    compute_fragment_table,
    compute_wfvs_weights,
    forward_operator,
    fvs_step,
    wfvs_step,
    _as_values,
)
from .grid import Grid, TimeGrid
from .kernels import DaughterDistribution, SelectionFunction

__all__ = [
    "OptimizerConfig",
    "TaylorRow",
    "TaylorReport",
    "RunReport",
    "discrete_cost",
    "discrete_inner_product",
    "adjoint_gradient",
    "gradient_descent",
    "taylor_test",
]

GRADIENT_KINDS = ("continuous", "transpose")


@dataclass(frozen=True)
class OptimizerConfig:
    """Fixed-step descent settings.

    ``step_size`` is the constant learning rate; ``max_iters`` the number of
    gradient updates.  ``clip_nonnegative`` zeroes negative entries after
    each update (off by default: the plain iteration carries no projection).
    """

    step_size: float
    max_iters: int
    clip_nonnegative: bool = False
    gradient_kind: str = "continuous"
    stop_when_cost_below: float | None = None
    seed: int = 0

    def __post_init__(self):
        if not self.step_size > 0.0:
            raise InvalidParameterError(f"step_size must be positive, got {self.step_size}")
        if int(self.max_iters) < 0:
            raise InvalidParameterError(f"max_iters must be >= 0, got {self.max_iters}")
        if self.gradient_kind not in GRADIENT_KINDS:
            raise InvalidParameterError(
                f"gradient_kind must be one of {GRADIENT_KINDS}, got {self.gradient_kind!r}")


@dataclass(frozen=True)
class TaylorRow:
    eta: float
    remainder: float
    ratio: float  # remainder / eta**2


@dataclass(frozen=True)
class TaylorReport:
    """Remainder rows of the gradient verification, largest perturbation first."""

    rows: tuple[TaylorRow, ...]
    slope: float        # inner product of the tested gradient with the direction
    base_cost: float
    direction: np.ndarray

    def __post_init__(self):
        etas = [row.eta for row in self.rows]
        if any(e2 >= e1 for e1, e2 in zip(etas, etas[1:])):
            raise InvalidParameterError("rows must be sorted by descending eta")
        if any(row.remainder < 0.0 for row in self.rows):
            raise InvalidParameterError("remainders cannot be negative")

    @property
    def ratios(self) -> np.ndarray:
        return np.array([row.ratio for row in self.rows])

    @property
    def remainders(self) -> np.ndarray:
        return np.array([row.remainder for row in self.rows])


@dataclass
class RunReport:
    """Per-iteration descent history plus the final reconstruction."""

    cost_history: np.ndarray
    target_error_history: np.ndarray
    initial_error_history: np.ndarray  # NaN when no exact datum was supplied
    reconstructed: np.ndarray
    iterations: int
    wall_time: float
    min_density: float = field(default=float("nan"))
    final_state: np.ndarray | None = None  # forward state of the last iterate

    def __post_init__(self):
        n = len(self.cost_history)
        if (len(self.target_error_history) != n
                or len(self.initial_error_history) != n
                or self.iterations != n - 1):
            raise InvalidParameterError("history lengths are inconsistent")


def _values_checked(state, grid: Grid, name: str) -> np.ndarray:
    values = _as_values(state)
    if values.shape != (grid.num_cells,):
        raise DimensionMismatchError(
            f"{name} has {values.shape[0]} entries but the grid has {grid.num_cells} cells")
    return values


def discrete_cost(final_state, target, grid: Grid) -> float:
    """Half the dx-weighted squared mismatch between a state and the target."""
    f = _values_checked(final_state, grid, "state")
    goal = _values_checked(target, grid, "target")
    diff = f - goal
    return 0.5 * float(np.sum(diff * diff * grid.widths))


def discrete_inner_product(u, v, grid: Grid) -> float:
    """dx-weighted inner product of two nodal vectors."""
    a = _values_checked(u, grid, "first argument")
    b = _values_checked(v, grid, "second argument")
    return float(np.sum(a * b * grid.widths))


class _Problem:
    """Precomputed tables and operators for repeated solves of one setup."""

    def __init__(self, grid: Grid, time_grid: TimeGrid, selection: SelectionFunction,
                 daughter: DaughterDistribution, scheme: str, substeps: int = 1):
        if scheme not in SCHEMES:
            raise InvalidParameterError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
        substeps = int(substeps)
        if substeps < 1:
            raise InvalidParameterError(f"substeps must be >= 1, got {substeps}")
        self.grid = grid
        self.time_grid = time_grid
        self.selection = selection
        self.scheme = scheme
        self.substeps = substeps
        self.total_steps = time_grid.num_steps * substeps
        self.dt = time_grid.dt / substeps
        self.table = compute_fragment_table(grid, daughter)
        self.weights = (compute_wfvs_weights(grid, self.table, daughter.nu)
                        if scheme == "wfvs" else None)
        self.adjoint_table = compute_adjoint_table(grid, selection, daughter)
        self._step_matrix_T = None  # built lazily for the transpose route
        if self.dt * float(np.max(selection.at(grid.centers))) > 1.0:
            warnings.warn(
                "explicit step exceeds the stability budget (dt * max rate > 1); "
                "densities may undershoot zero", StabilityWarning, stacklevel=3)

    def final_state(self, initial_values: np.ndarray) -> np.ndarray:
        state = StateVector(initial_values, 0.0)
        for _ in range(self.total_steps):
            if self.scheme == "fvs":
                state = fvs_step(state, self.grid, self.selection, self.table, self.dt)
            else:
                state = wfvs_step(state, self.grid, self.selection, self.table,
                                  self.weights, self.dt)
        return state.values

    def continuous_gradient(self, mismatch: np.ndarray) -> np.ndarray:
        phi = AdjointVector(mismatch, self.time_grid.final_time)
        for _ in range(self.total_steps):
            phi = adjoint_step_backward(phi, self.grid, self.selection,
                                        self.adjoint_table, self.dt)
        return phi.values

    def transpose_gradient(self, mismatch: np.ndarray) -> np.ndarray:
        if self.total_steps == 0:
            return mismatch.copy()
        if self._step_matrix_T is None:
            L = forward_operator(self.grid, self.selection, self.table, self.weights)
            self._step_matrix_T = (np.eye(self.grid.num_cells) + self.dt * L).T
        v = self.grid.widths * mismatch
        for _ in range(self.total_steps):
            v = self._step_matrix_T @ v
        return v / self.grid.widths

    def gradient(self, kind: str, mismatch: np.ndarray) -> np.ndarray:
        if kind == "transpose":
            return self.transpose_gradient(mismatch)
        return self.continuous_gradient(mismatch)


def adjoint_gradient(config: OptimizerConfig, grid: Grid, time_grid: TimeGrid,
                     selection: SelectionFunction, daughter: DaughterDistribution,
                     scheme: str, initial, target, substeps: int = 1) -> np.ndarray:
    """Gradient of the discrete cost at ``initial``.

    Runs the forward problem, forms the final-state mismatch and pulls it
    back to t=0 with the route named by ``config.gradient_kind``.  The
    returned vector is the dx-inner-product representative (no width
    factors), so it pairs with perturbations through
    ``discrete_inner_product``.
    """
    problem = _Problem(grid, time_grid, selection, daughter, scheme, substeps)
    f0 = _values_checked(initial, grid, "initial state")
    goal = _values_checked(target, grid, "target")
    final = problem.final_state(f0)
    if not np.all(np.isfinite(final)):
        raise NumericalBlowupError("forward run produced non-finite densities")
    return problem.gradient(config.gradient_kind, final - goal)


def gradient_descent(config: OptimizerConfig, grid: Grid, time_grid: TimeGrid,
                     selection: SelectionFunction, daughter: DaughterDistribution,
                     scheme: str, initial_guess, target, exact_initial=None,
                     substeps: int = 1) -> RunReport:
    """Reconstruct the initial datum by fixed-step adjoint descent.

    Records the cost and the max-norm target error at every iterate
    (including the starting guess), and the max-norm initial-datum error
    when the exact datum is supplied.  Stops after ``max_iters`` updates or
    as soon as the cost drops below ``stop_when_cost_below``.
    """
    started = _time.perf_counter()
    problem = _Problem(grid, time_grid, selection, daughter, scheme, substeps)
    current = _values_checked(initial_guess, grid, "initial guess").copy()
    goal = _values_checked(target, grid, "target")
    known = (_values_checked(exact_initial, grid, "exact initial datum")
             if exact_initial is not None else None)

    costs: list[float] = []
    target_errors: list[float] = []
    initial_errors: list[float] = []
    min_density = np.inf
    final = current  # overwritten on the first pass
    for k in range(config.max_iters + 1):
        final = problem.final_state(current)
        if not np.all(np.isfinite(final)):
            raise NumericalBlowupError(
                f"forward run blew up at iteration {k}", iteration=k)
        mismatch = final - goal
        costs.append(0.5 * float(np.sum(mismatch * mismatch * grid.widths)))
        target_errors.append(float(np.max(np.abs(mismatch))))
        initial_errors.append(float(np.max(np.abs(current - known)))
                              if known is not None else float("nan"))
        min_density = min(min_density, float(final.min()), float(current.min()))
        if k == config.max_iters:
            break
        if (config.stop_when_cost_below is not None
                and costs[-1] < config.stop_when_cost_below):
            break
        gradient = problem.gradient(config.gradient_kind, mismatch)
        if not np.all(np.isfinite(gradient)):
            raise NumericalBlowupError(
                f"gradient blew up at iteration {k}", iteration=k)
        current = current - config.step_size * gradient
        if config.clip_nonnegative:
            np.clip(current, 0.0, None, out=current)

    return RunReport(
        cost_history=np.array(costs),
        target_error_history=np.array(target_errors),
        initial_error_history=np.array(initial_errors),
        reconstructed=current,
        iterations=len(costs) - 1,
        wall_time=_time.perf_counter() - started,
        min_density=min_density,
        final_state=final,
    )


def taylor_test(grid: Grid, time_grid: TimeGrid, selection: SelectionFunction,
                daughter: DaughterDistribution, scheme: str, initial, target,
                etas=(1e-1, 1e-2, 1e-3), direction=None,
                gradient_kind: str = "continuous", seed: int = 0,
                substeps: int = 1) -> TaylorReport:
    """First-order remainder of the cost along one direction, per perturbation size.

    The direction defaults to a seeded pseudo-random vector and is always
    normalized in the dx inner product.  For each eta the remainder
    ``|J(f0 + eta d) - J(f0) - eta <g, d>_dx|`` and its ratio to eta**2
    are reported, sorted by descending eta.
    """
    etas = [float(e) for e in etas]
    if not etas:
        raise InvalidParameterError("at least one perturbation size is required")
    if any(not e > 0.0 for e in etas):
        raise InvalidParameterError("perturbation sizes must be positive")
    if gradient_kind not in GRADIENT_KINDS:
        raise InvalidParameterError(
            f"gradient_kind must be one of {GRADIENT_KINDS}, got {gradient_kind!r}")

    problem = _Problem(grid, time_grid, selection, daughter, scheme, substeps)
    f0 = _values_checked(initial, grid, "base point").copy()
    goal = _values_checked(target, grid, "target")
    if direction is None:
        rng = np.random.default_rng(seed)
        d = rng.standard_normal(grid.num_cells)
    else:
        d = _values_checked(direction, grid, "direction").copy()
    norm = np.sqrt(float(np.sum(d * d * grid.widths)))
    if norm == 0.0:
        raise InvalidParameterError("direction must be nonzero")
    d = d / norm

    def cost_at(values: np.ndarray) -> float:
        final = problem.final_state(values)
        diff = final - goal
        return 0.5 * float(np.sum(diff * diff * grid.widths))

    mismatch = problem.final_state(f0) - goal
    base_cost = 0.5 * float(np.sum(mismatch * mismatch * grid.widths))
    gradient = problem.gradient(gradient_kind, mismatch)
    slope = float(np.sum(gradient * d * grid.widths))

    rows = []
    for eta in sorted(etas, reverse=True):
        remainder = abs(cost_at(f0 + eta * d) - base_cost - eta * slope)
        rows.append(TaylorRow(eta=eta, remainder=remainder, ratio=remainder / eta ** 2))
    return TaylorReport(rows=tuple(rows), slope=slope, base_cost=base_cost,
                        direction=d)
