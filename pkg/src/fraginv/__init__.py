"""Forward and adjoint finite volume solvers for the linear multiple
fragmentation equation, with gradient-descent reconstruction of the initial
particle-size distribution from a final-time target."""

from .adjoint import (
    AdjointTable,
    AdjointVector,
    adjoint_step_backward,
    compute_adjoint_table,
    run_adjoint,
    transpose_adjoint_gradient,
)
from .benchmarks import (
    BENCHMARK_CASES,
    BenchmarkCase,
    exact_solution_linear_rate,
    exact_solution_quadratic_rate,
    linf_error,
    project_to_grid,
    run_benchmark,
    truncated_ramp,
)
from .config import RunConfig, parse_config, read_profile_csv
from .errors import (
    ConfigError,
    DegenerateGridError,
    DimensionMismatchError,
    FragInvError,
    InvalidParameterError,
    InvalidRangeError,
    NumericalBlowupError,
)
from .forward import (
    FragmentTable,
    StabilityWarning,
    StateVector,
    Trajectory,
    WeightPair,
    compute_fragment_table,
    compute_wfvs_weights,
    forward_operator,
    fvs_step,
    moment,
    run_forward,
    wfvs_step,
)
from .grid import Grid, TimeGrid, build_geometric_grid, build_time_grid
from .kernels import (
    DaughterDistribution,
    SelectionFunction,
    weighted_selection_daughter_integral,
)
from .optimize import (
    OptimizerConfig,
    RunReport,
    TaylorReport,
    TaylorRow,
    adjoint_gradient,
    discrete_cost,
    discrete_inner_product,
    gradient_descent,
    taylor_test,
)

__version__ = "0.1.0"
