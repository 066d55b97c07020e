"""Deterministic CSV emission for all experiment outputs.

Every file starts with one comment line carrying a short hash of the fully
resolved run configuration plus the grid parameters, followed by a plain
header row.  Floats are written with 17 significant digits so identical
runs produce byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Mapping

import numpy as np

__all__ = [
    "fingerprint",
    "header_comment",
    "write_csv",
    "write_history_csv",
    "write_reconstruction_csv",
    "write_final_state_csv",
    "write_solution_csv",
    "write_moments_csv",
    "write_taylor_csv",
]


def _format(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    return format(value, ".17g")


def fingerprint(payload: Mapping) -> str:
    """Short stable hash of a configuration mapping."""
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode()).hexdigest()[:12]


def header_comment(payload: Mapping) -> str:
    """Comment line content: config hash plus the salient run parameters."""
    keys = ("R", "I", "ratio", "T", "N", "scheme", "seed")
    parts = [f"fraginv config={fingerprint(payload)}"]
    # shortest round-trip repr keeps the comment line readable and exact
    parts.extend(
        f"{key}={payload[key] if isinstance(payload[key], str) else repr(payload[key])}"
        for key in keys if key in payload)
    return " ".join(parts)


def write_csv(path: Path | str, columns: Mapping[str, np.ndarray], comment: str) -> Path:
    """Write named columns with a leading comment line; returns the path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    arrays = [np.atleast_1d(np.asarray(columns[name])) for name in names]
    length = arrays[0].shape[0]
    if any(arr.shape != (length,) for arr in arrays):
        raise ValueError("all columns must share one length")
    lines = [f"# {comment}", ",".join(names)]
    for row in range(length):
        lines.append(",".join(_format(arr[row]) for arr in arrays))
    path.write_text("\n".join(lines) + "\n", encoding="ascii", newline="\n")
    return path


def write_history_csv(path, report, comment: str) -> Path:
    return write_csv(path, {
        "iter": np.arange(len(report.cost_history)),
        "J": report.cost_history,
        "E_target": report.target_error_history,
        "E_init": report.initial_error_history,
    }, comment)


def write_reconstruction_csv(path, grid, exact_initial, reconstructed, comment: str) -> Path:
    exact = (np.full(grid.num_cells, np.nan) if exact_initial is None
             else np.asarray(exact_initial, dtype=float))
    return write_csv(path, {
        "x_center": grid.centers,
        "f0_exact_if_known": exact,
        "f0_reconstructed": reconstructed,
    }, comment)


def write_final_state_csv(path, grid, final_state, target, comment: str) -> Path:
    return write_csv(path, {
        "x_center": grid.centers,
        "f_final": final_state,
        "target": target,
    }, comment)


def write_solution_csv(path, grid, f_initial, f_final, comment: str) -> Path:
    return write_csv(path, {
        "x_center": grid.centers,
        "dx": grid.widths,
        "f_initial": f_initial,
        "f_final": f_final,
    }, comment)


def write_moments_csv(path, grid, trajectory, comment: str) -> Path:
    states = trajectory.states
    powers = grid.centers[None, :] ** np.array([0.0, 1.0, 2.0])[:, None]
    moments = states @ (powers * grid.widths[None, :]).T
    return write_csv(path, {
        "t": trajectory.times,
        "M0": moments[:, 0],
        "M1": moments[:, 1],
        "M2": moments[:, 2],
    }, comment)


def write_taylor_csv(path, report, comment: str) -> Path:
    return write_csv(path, {
        "eta": np.array([row.eta for row in report.rows]),
        "remainder": report.remainders,
        "ratio": report.ratios,
    }, comment)
