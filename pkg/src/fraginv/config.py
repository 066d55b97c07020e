"""YAML run configuration: schema, validation and resolution.

``parse_config`` loads a nested key/value file and either returns a fully
validated ``RunConfig`` or raises ``ConfigError`` carrying every violation
found (not just the first), each prefixed with its key path.  The schema is
documented in the README.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import yaml

from .benchmarks import BENCHMARK_CASES, project_to_grid, truncated_ramp
from .errors import ConfigError
from .forward import SCHEMES
from .grid import Grid, TimeGrid, build_geometric_grid
from .kernels import DaughterDistribution, SelectionFunction
from .optimize import GRADIENT_KINDS, OptimizerConfig

__all__ = ["RunConfig", "parse_config", "read_profile_csv"]

_PROJECTIONS = ("pointwise", "cell_average")
_GUESS_BUILTINS = ("truncated_ramp", "exponential")
_DEFAULT_ETAS = (1e-1, 1e-2, 1e-3)


@dataclass(frozen=True)
class DomainSettings:
    R: float
    cells: int
    ratio: float
    first_edge: float | None = None


@dataclass(frozen=True)
class TimeSettings:
    T: float
    steps: int
    substeps: int = 1


@dataclass(frozen=True)
class SelectionSettings:
    kind: str = "power"
    S0: float = 1.0
    alpha: float = 1.0


@dataclass(frozen=True)
class OptimizerSettings:
    eps0: float
    max_iters: int
    clip_nonnegative: bool = False
    gradient_kind: str = "continuous"
    stop_when_J_below: float | None = None
    seed: int = 0


@dataclass(frozen=True)
class TargetSettings:
    benchmark: str | None = None
    s: float = 1.0
    csv: str | None = None


@dataclass(frozen=True)
class GuessSettings:
    builtin: str | None = "truncated_ramp"
    s: float = 1.0
    csv: str | None = None


@dataclass(frozen=True)
class RunConfig:
    """Fully validated run description; see the README for the file schema."""

    domain: DomainSettings
    time: TimeSettings
    selection: SelectionSettings
    daughter_kind: str
    scheme: str
    optimizer: OptimizerSettings | None
    target: TargetSettings | None
    initial_guess: GuessSettings
    output_dir: str = "out"
    target_projection: str = "pointwise"
    taylor_etas: tuple[float, ...] = _DEFAULT_ETAS

    # -- builders -----------------------------------------------------------
    def build_grid(self) -> Grid:
        return build_geometric_grid(self.domain.R, self.domain.cells,
                                    self.domain.ratio, first_edge=self.domain.first_edge)

    def build_time_grid(self) -> TimeGrid:
        # steps == 0 is the documented no-dynamics case, so the sanity check
        # of build_time_grid is bypassed here.
        return TimeGrid(final_time=self.time.T, num_steps=self.time.steps)

    def build_selection(self) -> SelectionFunction:
        return SelectionFunction(coefficient=self.selection.S0,
                                 exponent=self.selection.alpha,
                                 kind=self.selection.kind)

    def build_daughter(self) -> DaughterDistribution:
        return DaughterDistribution(kind=self.daughter_kind)

    def optimizer_config(self) -> OptimizerConfig:
        if self.optimizer is None:
            raise ConfigError(["optimizer: section is required for this command"])
        opt = self.optimizer
        return OptimizerConfig(step_size=opt.eps0, max_iters=opt.max_iters,
                               clip_nonnegative=opt.clip_nonnegative,
                               gradient_kind=opt.gradient_kind,
                               stop_when_cost_below=opt.stop_when_J_below,
                               seed=opt.seed)

    def resolve_target(self, grid: Grid) -> tuple[np.ndarray, np.ndarray | None]:
        """Target profile at the final time plus, when known, the exact
        initial datum for error reporting."""
        if self.target is None:
            raise ConfigError(["target: section is required for this command"])
        if self.target.csv is not None:
            return read_profile_csv(self.target.csv, grid), None
        case = BENCHMARK_CASES[self.target.benchmark]
        if case.shape_param is not None and self.target.s != case.shape_param:
            case = replace(case, shape_param=self.target.s)
        target = project_to_grid(lambda x: case.exact_solution(x, self.time.T),
                                 grid, self.target_projection)
        exact0 = project_to_grid(case.exact_initial, grid, self.target_projection)
        return target, exact0

    def resolve_initial_guess(self, grid: Grid) -> np.ndarray:
        guess = self.initial_guess
        if guess.csv is not None:
            return read_profile_csv(guess.csv, grid)
        if guess.builtin == "truncated_ramp":
            return truncated_ramp(grid.centers)
        return np.exp(-guess.s * grid.centers)

    def with_overrides(self, scheme: str | None = None, seed: int | None = None,
                       output_dir: str | None = None) -> "RunConfig":
        cfg = self
        if scheme is not None:
            cfg = replace(cfg, scheme=scheme)
        if seed is not None and cfg.optimizer is not None:
            cfg = replace(cfg, optimizer=replace(cfg.optimizer, seed=seed))
        if output_dir is not None:
            cfg = replace(cfg, output_dir=output_dir)
        return cfg

    def canonical_dict(self) -> dict:
        """Plain nested dict of every resolved value, for hashing."""
        out = {
            "domain": {"R": self.domain.R, "cells": self.domain.cells,
                       "ratio": self.domain.ratio, "first_edge": self.domain.first_edge},
            "time": {"T": self.time.T, "steps": self.time.steps,
                     "substeps": self.time.substeps},
            "kernel": {"selection": {"kind": self.selection.kind,
                                     "S0": self.selection.S0,
                                     "alpha": self.selection.alpha},
                       "daughter": {"kind": self.daughter_kind}},
            "scheme": self.scheme,
            "target_projection": self.target_projection,
            "taylor": {"etas": list(self.taylor_etas)},
            "initial_guess": {"builtin": self.initial_guess.builtin,
                              "s": self.initial_guess.s,
                              "csv": self.initial_guess.csv},
            "output_dir": self.output_dir,
        }
        if self.optimizer is not None:
            opt = self.optimizer
            out["optimizer"] = {"eps0": opt.eps0, "max_iters": opt.max_iters,
                                "clip_nonnegative": opt.clip_nonnegative,
                                "gradient_kind": opt.gradient_kind,
                                "stop_when_J_below": opt.stop_when_J_below,
                                "seed": opt.seed}
        if self.target is not None:
            out["target"] = {"benchmark": self.target.benchmark, "s": self.target.s,
                             "csv": self.target.csv}
        return out

    def header_payload(self) -> dict:
        payload = dict(self.canonical_dict())
        payload.update({
            "R": self.domain.R, "I": self.domain.cells, "ratio": self.domain.ratio,
            "T": self.time.T, "N": self.time.steps, "scheme": self.scheme,
            "seed": self.optimizer.seed if self.optimizer else 0,
        })
        return payload


def read_profile_csv(path: str | Path, grid: Grid) -> np.ndarray:
    """Read a nodal profile (columns ``x_center,value``) defined on ``grid``."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError([f"{path}: file not found"])
    xs: list[float] = []
    values: list[float] = []
    with open(path, newline="") as handle:
        rows = [row for row in csv.reader(handle)
                if row and not row[0].lstrip().startswith("#")]
    if not rows:
        raise ConfigError([f"{path}: no data rows"])
    header = [name.strip() for name in rows[0]]
    try:
        x_col = header.index("x_center")
        v_col = header.index("value")
    except ValueError:
        raise ConfigError([f"{path}: header must contain x_center and value columns"])
    for row in rows[1:]:
        xs.append(float(row[x_col]))
        values.append(float(row[v_col]))
    if len(values) != grid.num_cells:
        raise ConfigError([
            f"{path}: {len(values)} rows but the grid has {grid.num_cells} cells"])
    if not np.allclose(xs, grid.centers, rtol=1e-8, atol=1e-12):
        raise ConfigError([f"{path}: x_center column does not match the grid centers"])
    return np.asarray(values, dtype=float)


# -- validation machinery ----------------------------------------------------

class _Checker:
    """Accumulates violations while pulling typed values out of raw YAML."""

    def __init__(self):
        self.problems: list[str] = []

    def fail(self, path: str, message: str) -> None:
        self.problems.append(f"{path}: {message}")

    def section(self, raw: dict, path: str, allowed: set[str]) -> None:
        for key in raw:
            if key not in allowed:
                self.fail(f"{path}.{key}" if path else str(key), "unknown key")

    def number(self, raw: dict, path: str, key: str, *, required=False, default=None,
               minimum=None, exclusive_minimum=None, maximum=None):
        full = f"{path}.{key}" if path else key
        if key not in raw or raw[key] is None:
            if required:
                self.fail(full, "required key is missing")
            return default
        value = raw[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(full, f"must be a number, got {value!r}")
            return default
        value = float(value)
        if not math.isfinite(value):
            self.fail(full, "must be finite")
            return default
        if exclusive_minimum is not None and value <= exclusive_minimum:
            self.fail(full, f"must exceed {exclusive_minimum}, got {value}")
            return default
        if minimum is not None and value < minimum:
            self.fail(full, f"must be at least {minimum}, got {value}")
            return default
        if maximum is not None and value > maximum:
            self.fail(full, f"must be at most {maximum}, got {value}")
            return default
        return value

    def integer(self, raw: dict, path: str, key: str, *, required=False, default=None,
                minimum=None):
        full = f"{path}.{key}" if path else key
        if key not in raw or raw[key] is None:
            if required:
                self.fail(full, "required key is missing")
            return default
        value = raw[key]
        if isinstance(value, bool) or not isinstance(value, int):
            self.fail(full, f"must be an integer, got {value!r}")
            return default
        if minimum is not None and value < minimum:
            self.fail(full, f"must be at least {minimum}, got {value}")
            return default
        return int(value)

    def choice(self, raw: dict, path: str, key: str, options, *, required=False,
               default=None):
        full = f"{path}.{key}" if path else key
        if key not in raw or raw[key] is None:
            if required:
                self.fail(full, "required key is missing")
            return default
        value = raw[key]
        if value not in options:
            self.fail(full, f"must be one of {sorted(options)}, got {value!r}")
            return default
        return value

    def flag(self, raw: dict, path: str, key: str, default=False):
        full = f"{path}.{key}" if path else key
        if key not in raw or raw[key] is None:
            return default
        value = raw[key]
        if not isinstance(value, bool):
            self.fail(full, f"must be true or false, got {value!r}")
            return default
        return value

    def text(self, raw: dict, path: str, key: str, default=None):
        full = f"{path}.{key}" if path else key
        if key not in raw or raw[key] is None:
            return default
        value = raw[key]
        if not isinstance(value, str):
            self.fail(full, f"must be a string, got {value!r}")
            return default
        return value

    def mapping(self, raw: dict, key: str, *, required=False) -> dict | None:
        if key not in raw or raw[key] is None:
            if required:
                self.fail(key, "required section is missing")
            return None
        value = raw[key]
        if not isinstance(value, dict):
            self.fail(key, "must be a mapping")
            return None
        return value


def _validate(raw: dict) -> tuple[RunConfig | None, list[str]]:
    check = _Checker()
    check.section(raw, "", {"domain", "time", "kernel", "scheme", "optimizer",
                            "target", "initial_guess", "output_dir",
                            "target_projection", "taylor"})

    domain = None
    sec = check.mapping(raw, "domain", required=True)
    if sec is not None:
        check.section(sec, "domain", {"R", "cells", "ratio", "first_edge"})
        R = check.number(sec, "domain", "R", required=True, exclusive_minimum=0.0)
        cells = check.integer(sec, "domain", "cells", required=True, minimum=1)
        ratio = check.number(sec, "domain", "ratio", required=True, exclusive_minimum=1.0)
        first_edge = check.number(sec, "domain", "first_edge", exclusive_minimum=0.0)
        if None not in (R, cells, ratio):
            if first_edge is not None and first_edge >= R:
                check.fail("domain.first_edge", f"must be below R={R}, got {first_edge}")
            elif first_edge is not None and cells < 2:
                check.fail("domain.first_edge", "requires at least two cells")
            else:
                domain = DomainSettings(R=R, cells=cells, ratio=ratio,
                                        first_edge=first_edge)

    time_settings = None
    sec = check.mapping(raw, "time", required=True)
    if sec is not None:
        check.section(sec, "time", {"T", "steps", "substeps"})
        T = check.number(sec, "time", "T", required=True, exclusive_minimum=0.0)
        steps = check.integer(sec, "time", "steps", required=True, minimum=0)
        substeps = check.integer(sec, "time", "substeps", default=1, minimum=1)
        if None not in (T, steps):
            time_settings = TimeSettings(T=T, steps=steps, substeps=substeps)

    selection = None
    daughter_kind = "power_law_binary"
    sec = check.mapping(raw, "kernel", required=True)
    if sec is not None:
        check.section(sec, "kernel", {"selection", "daughter"})
        sel = check.mapping(sec, "selection", required=True)
        if sel is not None:
            check.section(sel, "kernel.selection", {"kind", "S0", "alpha"})
            kind = check.choice(sel, "kernel.selection", "kind", {"power"},
                                default="power")
            S0 = check.number(sel, "kernel.selection", "S0", required=True, minimum=0.0)
            alpha = check.number(sel, "kernel.selection", "alpha", required=True,
                                 minimum=0.0)
            if None not in (kind, S0, alpha):
                selection = SelectionSettings(kind=kind, S0=S0, alpha=alpha)
        dau = check.mapping(sec, "daughter")
        if dau is not None:
            check.section(dau, "kernel.daughter", {"kind"})
            daughter_kind = check.choice(dau, "kernel.daughter", "kind",
                                         {"power_law_binary"},
                                         default="power_law_binary")

    scheme = check.choice(raw, "", "scheme", set(SCHEMES), required=True)

    optimizer = None
    sec = check.mapping(raw, "optimizer")
    if sec is not None:
        check.section(sec, "optimizer", {"eps0", "max_iters", "clip_nonnegative",
                                         "gradient_kind", "stop_when_J_below", "seed"})
        eps0 = check.number(sec, "optimizer", "eps0", required=True,
                            exclusive_minimum=0.0)
        max_iters = check.integer(sec, "optimizer", "max_iters", required=True,
                                  minimum=0)
        clip = check.flag(sec, "optimizer", "clip_nonnegative", default=False)
        kind = check.choice(sec, "optimizer", "gradient_kind", set(GRADIENT_KINDS),
                            default="continuous")
        stop = check.number(sec, "optimizer", "stop_when_J_below",
                            exclusive_minimum=0.0)
        seed = check.integer(sec, "optimizer", "seed", default=0, minimum=0)
        if None not in (eps0, max_iters):
            optimizer = OptimizerSettings(eps0=eps0, max_iters=max_iters,
                                          clip_nonnegative=clip, gradient_kind=kind,
                                          stop_when_J_below=stop, seed=seed)

    target = None
    sec = check.mapping(raw, "target")
    if sec is not None:
        check.section(sec, "target", {"benchmark", "s", "csv"})
        bench = check.choice(sec, "target", "benchmark", set(BENCHMARK_CASES))
        s = check.number(sec, "target", "s", default=1.0, exclusive_minimum=0.0)
        path = check.text(sec, "target", "csv")
        if bench is not None and path is not None:
            check.fail("target", "give either benchmark or csv, not both")
        elif bench is None and path is None and "benchmark" not in sec and "csv" not in sec:
            check.fail("target", "needs a benchmark id or a csv path")
        elif bench is not None or path is not None:
            target = TargetSettings(benchmark=bench, s=s, csv=path)

    guess = GuessSettings()
    sec = check.mapping(raw, "initial_guess")
    if sec is not None:
        check.section(sec, "initial_guess", {"builtin", "s", "csv"})
        builtin = check.choice(sec, "initial_guess", "builtin", set(_GUESS_BUILTINS))
        s = check.number(sec, "initial_guess", "s", default=1.0, exclusive_minimum=0.0)
        path = check.text(sec, "initial_guess", "csv")
        if builtin is not None and path is not None:
            check.fail("initial_guess", "give either builtin or csv, not both")
        else:
            guess = GuessSettings(builtin=None if path is not None else
                                  (builtin or "truncated_ramp"), s=s, csv=path)

    output_dir = check.text(raw, "", "output_dir", default="out")
    projection = check.choice(raw, "", "target_projection", set(_PROJECTIONS),
                              default="pointwise")

    etas = _DEFAULT_ETAS
    sec = check.mapping(raw, "taylor")
    if sec is not None:
        check.section(sec, "taylor", {"etas"})
        value = sec.get("etas")
        if value is not None:
            if (not isinstance(value, list) or not value
                    or any(isinstance(e, bool) or not isinstance(e, (int, float))
                           or not e > 0.0 for e in value)):
                check.fail("taylor.etas", "must be a non-empty list of positive numbers")
            else:
                etas = tuple(float(e) for e in value)

    if check.problems:
        return None, check.problems
    return RunConfig(domain=domain, time=time_settings, selection=selection,
                     daughter_kind=daughter_kind, scheme=scheme, optimizer=optimizer,
                     target=target, initial_guess=guess, output_dir=output_dir,
                     target_projection=projection, taylor_etas=etas), []


def parse_config(path: str | Path) -> RunConfig:
    """Load and validate a YAML run configuration.

    Raises ``ConfigError`` listing every violation when the file is missing,
    malformed, or fails validation.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError([f"{path}: file not found"])
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError([f"{path}: not valid YAML ({exc})"])
    if not isinstance(raw, dict):
        raise ConfigError([f"{path}: top level must be a mapping"])
    config, problems = _validate(raw)
    if problems:
        raise ConfigError(problems)
    return config
