"""Render solver result figures from CSV bundles.

Three figure kinds cover the standard result set of an inverse run: the
final-state/target overlay, the reconstructed-vs-known initial datum on a
log axis, and max-norm error histories over the descent iterations.  The
CSVs are the only input; nothing is recomputed here.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)
import numpy as np  # noqa: E402

__all__ = [
    "PlotkitError",
    "MissingColumnsError",
    "FIGURE_KINDS",
    "FigureSpec",
    "read_table",
    "render",
    "render_bundle",
]

FIGURE_KINDS = ("target_compare", "initial_compare_log", "error_history")

# figure kind -> (expected csv name, required columns)
SCHEMA = {
    "target_compare": ("final_state.csv", ("x_center", "f_final", "target")),
    "initial_compare_log": ("reconstruction.csv",
                            ("x_center", "f0_exact_if_known", "f0_reconstructed")),
    "error_history": ("history.csv", ("iter", "E_target", "E_init")),
}

STYLE = {
    "figure.figsize": (6.0, 4.5),
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.35,
    "font.size": 11,
}

# pinned PNG metadata so re-rendering is byte-stable
METADATA = {"Software": "plotkit"}


class PlotkitError(Exception):
    """Base error for figure rendering."""


class MissingColumnsError(PlotkitError):
    """A CSV lacks required columns; the message names the expected schema."""


@dataclass(frozen=True)
class FigureSpec:
    """One figure to render: kind, source CSV, output image path.

    ``metric`` selects the history column for ``error_history`` figures
    (``target`` or ``initial``); ``label`` annotates the title, typically
    with the scheme name.
    """

    kind: str
    csv_path: Path
    out_path: Path
    metric: str = "target"
    label: str = ""

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise PlotkitError(f"unknown figure kind {self.kind!r}; "
                               f"expected one of {FIGURE_KINDS}")
        if self.metric not in ("target", "initial"):
            raise PlotkitError(f"unknown metric {self.metric!r}")


def read_table(path: Path | str) -> dict[str, np.ndarray]:
    """Read a solver CSV (comment lines start with '#') into named columns."""
    path = Path(path)
    if not path.is_file():
        raise PlotkitError(f"{path}: file not found")
    lines = [line for line in path.read_text().splitlines()
             if line.strip() and not line.lstrip().startswith("#")]
    if not lines:
        raise PlotkitError(f"{path}: no data")
    names = [name.strip() for name in lines[0].split(",")]
    rows = [[float(value) for value in line.split(",")] for line in lines[1:]]
    data = np.asarray(rows, dtype=float).reshape(len(rows), len(names))
    return {name: data[:, k] for k, name in enumerate(names)}


def _require_columns(table: dict, spec: FigureSpec) -> None:
    _, required = SCHEMA[spec.kind]
    missing = [name for name in required if name not in table]
    if missing:
        raise MissingColumnsError(
            f"{spec.csv_path}: missing columns {missing}; a "
            f"{spec.kind} figure needs {SCHEMA[spec.kind][0]} with columns "
            f"{list(required)}")


def _positive_or_nan(values: np.ndarray) -> np.ndarray:
    # keep log axes quiet about zero/negative entries
    return np.where(values > 0.0, values, np.nan)


def render(spec: FigureSpec) -> Path:
    """Render one figure; returns the written image path."""
    table = read_table(spec.csv_path)
    _require_columns(table, spec)
    suffix = f" ({spec.label})" if spec.label else ""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        if spec.kind == "target_compare":
            ax.plot(table["x_center"], table["target"], "-", color="black",
                    label="target")
            ax.plot(table["x_center"], table["f_final"], "o--", color="tab:red",
                    markersize=4, label="computed")
            ax.set_xlabel("size x")
            ax.set_ylabel("number density at final time")
            ax.set_title(f"final state vs target{suffix}")
            ax.legend()
        elif spec.kind == "initial_compare_log":
            exact = table["f0_exact_if_known"]
            if np.any(np.isfinite(exact)):
                ax.plot(table["x_center"], _positive_or_nan(exact), "-",
                        color="black", label="exact initial datum")
            ax.plot(table["x_center"], _positive_or_nan(table["f0_reconstructed"]),
                    "o--", color="tab:red", markersize=4, label="reconstructed")
            ax.set_yscale("log")
            ax.set_xlabel("size x")
            ax.set_ylabel("initial number density")
            ax.set_title(f"initial datum, log scale{suffix}")
            ax.legend()
        else:
            column = "E_target" if spec.metric == "target" else "E_init"
            values = table[column]
            marker = "o-" if len(values) > 1 else "o"
            ax.plot(table["iter"], values, marker, color="tab:blue")
            ax.set_xlabel("iteration")
            name = "target" if spec.metric == "target" else "initial datum"
            ax.set_ylabel(f"max-norm {name} error")
            ax.set_title(f"{name} error per iteration{suffix}")
        fig.tight_layout()
        spec.out_path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(spec.out_path, metadata=METADATA)
        plt.close(fig)
    return spec.out_path


def bundle_specs(bundle: Path | str, out_dir: Path | str,
                 figures: str = "all") -> list[FigureSpec]:
    """Figure specs for a result bundle (per-scheme subdirectories or flat)."""
    bundle = Path(bundle)
    out_dir = Path(out_dir)
    if figures != "all" and figures not in FIGURE_KINDS:
        raise PlotkitError(f"unknown figure selection {figures!r}; "
                           f"use 'all' or one of {FIGURE_KINDS}")
    runs = [(name, bundle / name) for name in ("fvs", "wfvs")
            if (bundle / name).is_dir()]
    if not runs:
        runs = [("", bundle)]
    specs = []
    for label, run_dir in runs:
        tag = f"_{label}" if label else ""
        if figures in ("all", "target_compare"):
            specs.append(FigureSpec("target_compare", run_dir / "final_state.csv",
                                    out_dir / f"target_compare{tag}.png",
                                    label=label))
        if figures in ("all", "initial_compare_log"):
            specs.append(FigureSpec("initial_compare_log",
                                    run_dir / "reconstruction.csv",
                                    out_dir / f"initial_compare{tag}.png",
                                    label=label))
        if figures in ("all", "error_history"):
            specs.append(FigureSpec("error_history", run_dir / "history.csv",
                                    out_dir / f"error_target{tag}.png",
                                    metric="target", label=label))
            specs.append(FigureSpec("error_history", run_dir / "history.csv",
                                    out_dir / f"error_initial{tag}.png",
                                    metric="initial", label=label))
    return specs


def render_bundle(bundle: Path | str, out_dir: Path | str,
                  figures: str = "all") -> list[Path]:
    """Render every requested figure for a bundle; returns the image paths."""
    return [render(spec) for spec in bundle_specs(bundle, out_dir, figures)]
