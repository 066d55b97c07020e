"""Analytic benchmark problems and the experiment runner.

Both cases share the binary power-law daughter distribution and the initial
datum ``exp(-x)``; they differ in the breakage rate (linear vs quadratic in
size), for which the evolved density is known in closed form.  The runner
reconstructs the initial datum from the final-time profile and reports the
max-norm errors against the known solution.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from . import csvio
from .errors import DimensionMismatchError, InvalidParameterError
from .forward import StateVector, _as_values, run_forward
from .grid import Grid, build_geometric_grid, build_time_grid
from .kernels import DaughterDistribution, SelectionFunction
from .optimize import OptimizerConfig, RunReport, gradient_descent

__all__ = [
    "exact_solution_linear_rate",
    "exact_solution_quadratic_rate",
    "truncated_ramp",
    "linf_error",
    "project_to_grid",
    "BenchmarkCase",
    "BENCHMARK_CASES",
    "run_benchmark",
    "write_benchmark_bundle",
]

# Nodes/weights reused for cell averages of target profiles.
_GL16_NODES, _GL16_WEIGHTS = np.polynomial.legendre.leggauss(16)


def exact_solution_linear_rate(x, t, s: float = 1.0):
    """Evolved density for the linear breakage rate, ``(1+t/s)^2 e^{-x(s+t)}``.

    ``s`` parametrizes the initial datum ``exp(-s x)``; t=0 recovers it.
    """
    if not s > 0.0:
        raise InvalidParameterError(f"shape parameter s must be positive, got {s}")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0):
        raise InvalidParameterError("sizes must be nonnegative")
    if np.any(np.asarray(t) < 0.0):
        raise InvalidParameterError("times must be nonnegative")
    out = (1.0 + t / s) ** 2 * np.exp(-x * (s + t))
    return out if out.ndim else float(out)


def exact_solution_quadratic_rate(x, t):
    """Evolved density for the quadratic breakage rate, ``(1+2t(1+x)) e^{-tx^2-x}``."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0):
        raise InvalidParameterError("sizes must be nonnegative")
    if np.any(np.asarray(t) < 0.0):
        raise InvalidParameterError("times must be nonnegative")
    out = (1.0 + 2.0 * t * (1.0 + x)) * np.exp(-t * x * x - x)
    return out if out.ndim else float(out)


def truncated_ramp(x):
    """Descent starting guess ``x * exp(-100 x^100)``: the identity ramp up to
    x ~ 0.95, then an abrupt drop to zero."""
    x = np.asarray(x, dtype=float)
    out = x * np.exp(-100.0 * x ** 100)
    return out if out.ndim else float(out)


def linf_error(approx, exact) -> float:
    """Largest nodewise absolute difference between two vectors."""
    a = _as_values(approx)
    b = _as_values(exact)
    if a.shape != b.shape:
        raise DimensionMismatchError(
            f"vectors have mismatched lengths {a.shape} vs {b.shape}")
    return float(np.max(np.abs(a - b)))


def project_to_grid(fn: Callable[[np.ndarray], np.ndarray], grid: Grid,
                    how: str = "pointwise") -> np.ndarray:
    """Sample a profile on a grid, either at cell centers or as cell averages."""
    if how == "pointwise":
        return np.asarray(fn(grid.centers), dtype=float)
    if how == "cell_average":
        lo = grid.edges[:-1]
        mid = grid.centers
        half = 0.5 * grid.widths
        # Gauss-Legendre per cell: rows are cells, columns quadrature nodes.
        xs = mid[:, None] + half[:, None] * _GL16_NODES[None, :]
        vals = np.asarray(fn(xs.ravel()), dtype=float).reshape(xs.shape)
        return (vals @ _GL16_WEIGHTS) * 0.5
    raise InvalidParameterError(f"unknown projection {how!r}")


@dataclass(frozen=True)
class BenchmarkCase:
    """One analytic reconstruction problem with its default run parameters."""

    case_id: str
    selection: SelectionFunction
    daughter: DaughterDistribution
    solution: Callable[..., np.ndarray]
    right_edge: float
    num_cells: int
    ratio: float
    final_time: float
    num_steps: int
    step_size: float
    max_iters: Mapping[str, int]  # per scheme
    shape_param: float | None = None

    def exact_solution(self, x, t):
        if self.shape_param is not None:
            return self.solution(x, t, self.shape_param)
        return self.solution(x, t)

    def exact_initial(self, x):
        return self.exact_solution(x, 0.0)


BENCHMARK_CASES: dict[str, BenchmarkCase] = {
    "test1": BenchmarkCase(
        case_id="test1",
        selection=SelectionFunction(coefficient=1.0, exponent=1.0),
        daughter=DaughterDistribution(),
        solution=exact_solution_linear_rate,
        right_edge=5.0,
        num_cells=35,
        ratio=1.4,
        final_time=2.0,
        num_steps=20,
        step_size=0.002,
        max_iters={"fvs": 50, "wfvs": 50},
        shape_param=1.0,
    ),
    "test2": BenchmarkCase(
        case_id="test2",
        selection=SelectionFunction(coefficient=1.0, exponent=2.0),
        daughter=DaughterDistribution(),
        solution=exact_solution_quadratic_rate,
        right_edge=5.0,
        num_cells=25,
        ratio=1.4,
        final_time=2.0,
        num_steps=20,
        step_size=0.0015,
        max_iters={"fvs": 150, "wfvs": 15},
    ),
}


def run_benchmark(case: BenchmarkCase | str, scheme: str,
                  num_cells: int | None = None, ratio: float | None = None,
                  num_steps: int | None = None, final_time: float | None = None,
                  step_size: float | None = None, max_iters: int | None = None,
                  first_edge: float | None = None,
                  gradient_kind: str = "continuous", seed: int = 0,
                  clip_nonnegative: bool = False,
                  stop_when_cost_below: float | None = None,
                  target_projection: str = "pointwise",
                  substeps: int = 1, out_dir=None):
    """Reconstruct the initial datum of a benchmark case with one scheme.

    Returns ``(report, context)`` where ``context`` bundles the grid, the
    target and the exact initial datum used, for downstream reporting.
    Every default can be overridden; ``max_iters`` defaults to the case's
    per-scheme iteration budget.  When ``out_dir`` is given the full CSV
    bundle (history, reconstruction, final state, solution, moments) is
    written there.
    """
    if isinstance(case, str):
        try:
            case = BENCHMARK_CASES[case]
        except KeyError:
            raise InvalidParameterError(
                f"unknown benchmark case {case!r}; known: {sorted(BENCHMARK_CASES)}")
    if scheme not in case.max_iters:
        raise InvalidParameterError(f"unknown scheme {scheme!r}")

    if num_cells is not None or ratio is not None or num_steps is not None \
            or final_time is not None or step_size is not None:
        case = replace(
            case,
            num_cells=num_cells if num_cells is not None else case.num_cells,
            ratio=ratio if ratio is not None else case.ratio,
            num_steps=num_steps if num_steps is not None else case.num_steps,
            final_time=final_time if final_time is not None else case.final_time,
            step_size=step_size if step_size is not None else case.step_size,
        )

    grid = build_geometric_grid(case.right_edge, case.num_cells, case.ratio,
                                first_edge=first_edge)
    time_grid = build_time_grid(case.final_time, case.num_steps)
    target = project_to_grid(lambda x: case.exact_solution(x, case.final_time),
                             grid, target_projection)
    exact_initial = project_to_grid(case.exact_initial, grid, target_projection)
    guess = truncated_ramp(grid.centers)

    config = OptimizerConfig(
        step_size=case.step_size,
        max_iters=max_iters if max_iters is not None else case.max_iters[scheme],
        clip_nonnegative=clip_nonnegative,
        gradient_kind=gradient_kind,
        stop_when_cost_below=stop_when_cost_below,
        seed=seed,
    )
    report = gradient_descent(config, grid, time_grid, case.selection, case.daughter,
                              scheme, guess, target, exact_initial=exact_initial,
                              substeps=substeps)
    context = {
        "case": case,
        "scheme": scheme,
        "grid": grid,
        "time_grid": time_grid,
        "target": target,
        "exact_initial": exact_initial,
        "guess": guess,
        "config": config,
    }
    if out_dir is not None:
        write_benchmark_bundle(out_dir, report, context)
    return report, context


def write_benchmark_bundle(out_dir, report: RunReport, context: dict) -> None:
    """Write the reconstruction CSV bundle of one benchmark run."""
    case = context["case"]
    config = context["config"]
    grid = context["grid"]
    payload = {
        "case": case.case_id, "scheme": context["scheme"],
        "R": case.right_edge, "I": case.num_cells, "ratio": case.ratio,
        "T": case.final_time, "N": case.num_steps,
        "eps0": config.step_size, "max_iters": config.max_iters,
        "gradient_kind": config.gradient_kind, "seed": config.seed,
    }
    comment = csvio.header_comment(payload)
    out = Path(out_dir)
    csvio.write_history_csv(out / "history.csv", report, comment)
    csvio.write_reconstruction_csv(out / "reconstruction.csv", grid,
                                   context["exact_initial"], report.reconstructed,
                                   comment)
    csvio.write_final_state_csv(out / "final_state.csv", grid, report.final_state,
                                context["target"], comment)
    trajectory = run_forward(grid, context["time_grid"], case.selection,
                             case.daughter, context["scheme"],
                             StateVector(report.reconstructed))
    csvio.write_solution_csv(out / "solution.csv", grid, report.reconstructed,
                             trajectory.states[-1], comment)
    csvio.write_moments_csv(out / "moments.csv", grid, trajectory, comment)
