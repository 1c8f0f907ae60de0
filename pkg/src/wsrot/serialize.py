"""Delimited and JSON writers shared by the CLI and the tests.

CSV files follow RFC 4180 (CRLF rows, header line); floats are printed with
17 significant digits so finite doubles round-trip bit-exactly. JSON files
are written with sorted keys and default float repr (shortest round-trip
form), which keeps byte-identical reruns cheap to verify.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .averaging import RootReport
from .orbits import Trajectory


def fmt_float(x: float) -> str:
    return "%.17g" % float(x)


def _render(cell) -> str:
    if isinstance(cell, (float, np.floating)):
        return fmt_float(cell)
    return str(cell)


def write_csv(path: str | Path, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_render(c) for c in row])


def csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(header)
    for row in rows:
        w.writerow([_render(c) for c in row])
    return buf.getvalue()


def json_dump(path: str | Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def trajectory_rows(traj: Trajectory):
    for i in range(traj.t.shape[0]):
        yield [traj.t[i], *traj.phases[i]]


def write_trajectory_csv(path: str | Path, traj: Trajectory) -> None:
    n = traj.phases.shape[1]
    header = ["t"] + [f"phi_{j}" for j in range(1, n + 1)]
    write_csv(path, header, trajectory_rows(traj))


def read_trajectory_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    data = np.array([[float(c) for c in row] for row in rows[1:]])
    return data[:, 0], data[:, 1:]


def scan_header(n_units: int) -> list[str]:
    n_lam = n_units - 3
    lam_cols = ["lambda"] if n_lam == 1 else [f"lambda_{k}" for k in range(1, n_lam + 1)]
    return lam_cols + [f"f_h_{k}" for k in range(1, n_lam + 1)] + ["period", "status"]


def scan_rows(report: RootReport):
    for s in report.samples:
        lam = s.lam if isinstance(s.lam, (list, tuple)) else [s.lam]
        yield [*lam, *s.f_h, s.period, s.status]


def write_scan_csv(path: str | Path, report: RootReport, n_units: int = 4) -> None:
    write_csv(path, scan_header(n_units), scan_rows(report))


def read_scan_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """(lambda column(s), f_h columns, status column) for test round-trips."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    n_lam = sum(1 for c in header if c.startswith("lambda"))
    n_f = sum(1 for c in header if c.startswith("f_h"))
    lam = np.array([[float(c) for c in r[:n_lam]] for r in body])
    f = np.array([[float(c) for c in r[n_lam:n_lam + n_f]] for r in body])
    status = [r[-1] for r in body]
    return lam, f, status
