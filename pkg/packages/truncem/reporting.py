"""
CSV Reports
Writers for simulated paths and harness reports. Floats are written with
repr() so a report is byte-identical whenever the numbers are.
"""

import csv
import logging
from pathlib import Path
from typing import Iterable, List, Sequence, Union

from .harness import ConvergenceReport, GapReport, MomentReport
from .scheme import SimulatedPath

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _fmt(value: float) -> str:
    return repr(float(value))


def _write_rows(path: PathLike, rows: Iterable[Sequence[str]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerows(rows)
    logger.info(f"Wrote {path}")
    return path


def path_rows(path: SimulatedPath) -> List[List[str]]:
    n1 = path.nodes_y.values.shape[1]
    header = ["k", "t"] + [f"y_{i}" for i in range(n1)] + [f"yhat_{i}" for i in range(n1)]
    rows = [header]
    for idx, t in enumerate(path.nodes_y.times):
        y = path.nodes_y.values[idx]
        y_hat = path.nodes_y_hat.values[idx]
        rows.append([str(idx - path.m), _fmt(t)] + [_fmt(v) for v in y] + [_fmt(v) for v in y_hat])
    return rows


def write_path_csv(path: SimulatedPath, out: PathLike) -> Path:
    """k,t,y_0..,yhat_0.. for k = -m..N"""
    return _write_rows(out, path_rows(path))


def convergence_rows(report: ConvergenceReport) -> List[List[str]]:
    rows = [["delta", "rms_error", "std_err"]]
    rows += [[_fmt(r.delta), _fmt(r.rms_error), _fmt(r.std_err)] for r in report.rows]
    rows += [
        ["slope", _fmt(report.slope)],
        ["intercept", _fmt(report.intercept)],
        ["r2", _fmt(report.r_squared)],
    ]
    return rows


def write_convergence_csv(report: ConvergenceReport, out: PathLike) -> Path:
    return _write_rows(out, convergence_rows(report))


def write_moment_csv(report: MomentReport, out: PathLike) -> Path:
    rows = [["delta", "sup_moment", "blow_ups"]]
    rows += [[_fmt(r.delta), _fmt(r.sup_moment), str(r.blow_ups)] for r in report.rows]
    return _write_rows(out, rows)


def write_gap_csv(report: GapReport, out: PathLike) -> Path:
    rows = [["delta", "rms_gap"]]
    rows += [[_fmt(r.delta), _fmt(r.rms_gap)] for r in report.rows]
    rows += [["slope", _fmt(report.slope)]]
    return _write_rows(out, rows)
