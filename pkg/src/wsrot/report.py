"""Figure rendering for CLI report paths (PNG written next to the CSV).

Uses the Agg backend so figures render headless. The byte-determinism
contract applies to CSV/JSON outputs; figures are diagnostic companions.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .averaging import RootReport
from .models import mean_field
from .orbits import OrbitRecord, SplayReport, Trajectory
from .torus_state import wrap_angle

_DPI = 130


def _wrapped_segments(t: np.ndarray, phi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Wrap a lifted series to [-pi, pi), breaking the line at each jump."""
    w = wrap_angle(phi)
    jumps = np.nonzero(np.abs(np.diff(w)) > np.pi)[0]
    tw = t.astype(float).copy()
    out_t, out_w = [], []
    prev = 0
    for j in jumps:
        out_t.extend(tw[prev:j + 1]); out_t.append(np.nan)
        out_w.extend(w[prev:j + 1]); out_w.append(np.nan)
        prev = j + 1
    out_t.extend(tw[prev:])
    out_w.extend(w[prev:])
    return np.array(out_t), np.array(out_w)


def trajectory_figure(traj: Trajectory, path: str | Path, title: str = "") -> None:
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    n = traj.phases.shape[1]
    for j in range(n):
        tt, ww = _wrapped_segments(traj.t, traj.phases[:, j])
        ax1.plot(tt, ww, lw=0.9, label=f"unit {j + 1}")
    ax1.set_ylabel("phase (wrapped)")
    ax1.set_ylim(-np.pi - 0.2, np.pi + 0.2)
    if n <= 8:
        ax1.legend(loc="upper right", fontsize=7, ncol=2)
    if title:
        ax1.set_title(title)
    zmod = [abs(mean_field(row)) for row in traj.phases]
    ax2.plot(traj.t, zmod, lw=1.2, color="tab:red")
    ax2.set_ylabel("|Z|")
    ax2.set_xlabel("t")
    ax2.set_ylim(0, 1.05)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def scan_figure(reports: list[RootReport], labels: list[str],
                path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(7.5, 5))
    for rep, label in zip(reports, labels):
        lams = np.array([s.lam for s in rep.samples], dtype=float)
        vals = np.array([s.f_h[0] if s.ok else np.nan for s in rep.samples])
        ax.plot(lams, vals, lw=1.4, label=label)
        if rep.roots:
            ax.plot([r.lam_root for r in rep.roots],
                    np.zeros(len(rep.roots)), "o", ms=5,
                    color=ax.lines[-1].get_color(), mfc="white")
    ax.axhline(0.0, color="0.6", lw=0.8)
    ax.set_xlabel("leaf coordinate")
    ax.set_ylabel("averaged functional")
    ax.legend(loc="best", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def splay_figure(orb: OrbitRecord, rep: SplayReport, path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(7.5, 4.5))
    for j in range(orb.n_units):
        tt, ww = _wrapped_segments(orb.samples_t, orb.samples_phases[:, j])
        ax.plot(tt, ww, lw=0.9)
    ax.set_xlabel("t within one period")
    ax.set_ylabel("phase (wrapped)")
    verdict = "splay" if rep.is_splay else "not splay"
    ax.set_title(f"{verdict}: max shift error {rep.max_shift_error:.2e}, "
                 f"T = {rep.period:.6f}")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
