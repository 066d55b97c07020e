"""Command line interface: forward | invert | taylor | bench.

Exit codes: 0 on success, 2 for configuration or usage errors, 3 when a run
blows up numerically.  The environment variable ``FRAGINV_OUT`` redirects
every relative output directory under a common root.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .benchmarks import BENCHMARK_CASES, run_benchmark
from .config import RunConfig, parse_config
from .csvio import (
    header_comment,
    write_final_state_csv,
    write_history_csv,
    write_moments_csv,
    write_reconstruction_csv,
    write_solution_csv,
    write_taylor_csv,
)
from .errors import ConfigError, FragInvError, NumericalBlowupError
from .forward import SCHEMES, StateVector, run_forward
from .optimize import gradient_descent, taylor_test

__all__ = ["main", "entrypoint"]


def _resolve_out_dir(base: str, flag: str | None) -> Path:
    chosen = Path(flag) if flag else Path(base)
    root = os.environ.get("FRAGINV_OUT")
    if root and not chosen.is_absolute():
        return Path(root) / chosen
    return chosen


def _load_config(args) -> RunConfig:
    config = parse_config(args.config)
    return config.with_overrides(scheme=getattr(args, "scheme", None),
                                 seed=getattr(args, "seed", None))


def cmd_forward(args) -> int:
    config = _load_config(args)
    grid = config.build_grid()
    time_grid = config.build_time_grid()
    initial = config.resolve_initial_guess(grid)
    trajectory = run_forward(grid, time_grid, config.build_selection(),
                             config.build_daughter(), config.scheme,
                             StateVector(initial), substeps=config.time.substeps)
    out = _resolve_out_dir(config.output_dir, args.out)
    comment = header_comment(config.header_payload())
    write_solution_csv(out / "solution.csv", grid, trajectory.states[0],
                       trajectory.states[-1], comment)
    write_moments_csv(out / "moments.csv", grid, trajectory, comment)
    print(f"forward {config.scheme}: {time_grid.num_steps} steps, "
          f"min density {trajectory.min_value:.3e}, wrote {out}")
    return 0


def cmd_invert(args) -> int:
    config = _load_config(args)
    grid = config.build_grid()
    time_grid = config.build_time_grid()
    target, exact_initial = config.resolve_target(grid)
    guess = config.resolve_initial_guess(grid)
    report = gradient_descent(config.optimizer_config(), grid, time_grid,
                              config.build_selection(), config.build_daughter(),
                              config.scheme, guess, target,
                              exact_initial=exact_initial,
                              substeps=config.time.substeps)
    out = _resolve_out_dir(config.output_dir, args.out)
    comment = header_comment(config.header_payload())
    write_history_csv(out / "history.csv", report, comment)
    write_reconstruction_csv(out / "reconstruction.csv", grid, exact_initial,
                             report.reconstructed, comment)
    write_final_state_csv(out / "final_state.csv", grid, report.final_state,
                          target, comment)
    print(f"invert {config.scheme}: {report.iterations} iterations, "
          f"E(target)={report.target_error_history[-1]:.4e}, wrote {out}")
    return 0


def cmd_taylor(args) -> int:
    config = _load_config(args)
    grid = config.build_grid()
    time_grid = config.build_time_grid()
    target, _ = config.resolve_target(grid)
    base_point = config.resolve_initial_guess(grid)
    opt = config.optimizer
    report = taylor_test(grid, time_grid, config.build_selection(),
                         config.build_daughter(), config.scheme, base_point, target,
                         etas=config.taylor_etas,
                         gradient_kind=opt.gradient_kind if opt else "continuous",
                         seed=opt.seed if opt else 0,
                         substeps=config.time.substeps)
    out = _resolve_out_dir(config.output_dir, args.out)
    write_taylor_csv(out / "taylor.csv", report,
                     header_comment(config.header_payload()))
    for row in report.rows:
        print(f"eta={row.eta:.3e}  remainder={row.remainder:.6e}  "
              f"remainder/eta^2={row.ratio:.6e}")
    print(f"wrote {out / 'taylor.csv'}")
    return 0


def cmd_bench(args) -> int:
    case = BENCHMARK_CASES[args.case]
    schemes = [args.run_scheme or args.scheme] if (args.run_scheme or args.scheme) \
        else list(SCHEMES)
    out = _resolve_out_dir(f"bench_{args.case}", args.out)
    summary_lines = [f"benchmark {args.case} (R={case.right_edge}, I={case.num_cells}, "
                     f"ratio={case.ratio}, T={case.final_time}, N={case.num_steps})"]
    for scheme in schemes:
        report, _ = run_benchmark(case, scheme, seed=args.seed or 0,
                                  max_iters=args.max_iters, out_dir=out / scheme)
        summary_lines.append(
            f"{scheme}: E(target)={report.target_error_history[-1]:.6e} "
            f"E(initial)={report.initial_error_history[-1]:.6e} "
            f"iterations={report.iterations}")
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.txt").write_text("\n".join(summary_lines) + "\n", encoding="ascii")
    print("\n".join(summary_lines))
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fraginv",
        description="Finite volume fragmentation solver and adjoint-based "
                    "initial-datum reconstruction.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config_required=True):
        if config_required:
            p.add_argument("--config", required=True, help="YAML run configuration")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--scheme", choices=SCHEMES, help="override the scheme")
        p.add_argument("--seed", type=int, help="override the random seed")

    p = sub.add_parser("forward", help="run the forward problem, write solution/moments")
    add_common(p)
    p.set_defaults(func=cmd_forward)

    p = sub.add_parser("invert", help="reconstruct the initial datum by adjoint descent")
    add_common(p)
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("taylor", help="gradient verification via first-order remainders")
    add_common(p)
    p.set_defaults(func=cmd_taylor)

    p = sub.add_parser("bench", help="run an analytic benchmark case end to end")
    p.add_argument("case", choices=sorted(BENCHMARK_CASES), help="benchmark id")
    p.add_argument("run_scheme", nargs="?", choices=SCHEMES, default=None,
                   help="scheme to run (default: both)")
    p.add_argument("--out", help="bundle directory (default bench_<case>)")
    p.add_argument("--scheme", choices=SCHEMES, help="scheme to run (default: both)")
    p.add_argument("--seed", type=int, help="random seed for the run")
    p.add_argument("--max-iters", type=int, default=None,
                   help="override the case's iteration budget")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses 2 for usage errors
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"error: {problem}", file=sys.stderr)
        return 2
    except NumericalBlowupError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except FragInvError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
