"""Time integration, per-leaf limit cycles, and splay verification.

Phases are integrated as lifted real variables (no wrapping), which keeps
cyclic order checkable from plain differences. Limit cycles are located by a
Poincare section in state space: returns are near approaches to a
post-transient anchor state, refined on the hyperplane through the anchor
normal to the flow. The recovered chart angle psi is non-monotone along the
cycle for active rotators, so no angle level works as a section.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import (
    BoundaryError,
    CollisionError,
    DomainError,
    FrequencyBelowThresholdError,
    NoFixedPointError,
    NotConvergedError,
    StepFailure,
)
from .mobius import Convention, CrossRatios, chart_inverse, cross_ratios, reference_point
from .models import ModelKind, ModelSpec, rhs_phases
from .torus_state import (
    DEFAULT_SEP_MIN,
    TWO_PI,
    PhaseState,
    canonicalize,
    circle_distance,
    wrap_angle,
)
from .ws_reduced import fixed_point


class Method(str, Enum):
    RK4_FIXED = "rk4"
    RK45_ADAPTIVE = "rk45"


@dataclass(frozen=True)
class IntegratorConfig:
    method: Method = Method.RK45_ADAPTIVE
    dt: float = 1e-3
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    t_transient: float = 200.0
    t_max: float | None = None
    n_samples: int = 2048

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if self.dt <= 0 or self.rel_tol <= 0 or self.abs_tol <= 0:
            raise DomainError("step size and tolerances must be positive")
        if self.n_samples < 8 or self.n_samples % 2:
            raise DomainError("n_samples must be even and at least 8")


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution in lifted phase coordinates (rows follow t)."""

    t: np.ndarray
    phases: np.ndarray
    sep_min: float = DEFAULT_SEP_MIN

    def state(self, i: int) -> PhaseState:
        return canonicalize(self.phases[i], sep_min=self.sep_min)


@dataclass(frozen=True)
class OrbitRecord:
    """One period of a converged limit cycle, sampled uniformly in time.

    samples_phases holds M+1 rows of lifted phases with row 0 on the
    Poincare section and row M closing the loop (equal to row 0 up to the
    recurrence residual, shifted by winding * 2*pi).
    """

    samples_t: np.ndarray
    samples_phases: np.ndarray
    derivs: np.ndarray
    period: float
    lam: CrossRatios
    residual: float
    converged: bool
    n_returns: int
    psi0: float
    winding: int
    sep_min: float = DEFAULT_SEP_MIN

    @property
    def n_units(self) -> int:
        return self.samples_phases.shape[1]

    @property
    def n_samples(self) -> int:
        return self.samples_phases.shape[0] - 1

    def state(self, i: int) -> PhaseState:
        return canonicalize(self.samples_phases[i], sep_min=self.sep_min)

    def to_dict(self) -> dict:
        return {
            "period": self.period,
            "residual": self.residual,
            "converged": self.converged,
            "n_returns": self.n_returns,
            "psi0": self.psi0,
            "winding": self.winding,
            "lambda": self.lam.to_dict(),
            "t": [float(x) for x in self.samples_t],
            "phases": [[float(p) for p in row] for row in self.samples_phases],
        }


@dataclass(frozen=True)
class SplayReport:
    is_splay: bool
    max_shift_error: float
    period: float
    splay_tol: float = 1e-6

    def to_dict(self) -> dict:
        return {
            "is_splay": self.is_splay,
            "max_shift_error": self.max_shift_error,
            "period": self.period,
            "splay_tol": self.splay_tol,
        }


def _check_order(t: np.ndarray, phases: np.ndarray, sep_min: float) -> None:
    """Raise CollisionError if any sampled row loses its ordering margin."""
    if not np.all(np.isfinite(phases)):
        raise StepFailure("integrator produced non-finite phases")
    d = np.diff(phases, axis=1)
    closing = TWO_PI - (phases[:, -1] - phases[:, 0])
    margins = np.minimum(d.min(axis=1), closing)
    bad = np.nonzero(margins < sep_min)[0]
    if bad.size:
        raise CollisionError(
            f"ordering margin {margins[bad[0]]:.3e} below sep_min at t = {t[bad[0]]:.6g}"
        )


def _rk4(m: ModelSpec, y0: np.ndarray, t_eval: np.ndarray, dt: float) -> np.ndarray:
    out = np.empty((t_eval.shape[0], y0.shape[0]))
    out[0] = y0
    y = np.array(y0, dtype=float)
    for i in range(t_eval.shape[0] - 1):
        t0, t1 = t_eval[i], t_eval[i + 1]
        steps = max(1, math.ceil((t1 - t0) / dt - 1e-12))
        h = (t1 - t0) / steps
        t = t0
        for _ in range(steps):
            k1 = rhs_phases(m, y, t)
            k2 = rhs_phases(m, y + 0.5 * h * k1, t + 0.5 * h)
            k3 = rhs_phases(m, y + 0.5 * h * k2, t + 0.5 * h)
            k4 = rhs_phases(m, y + h * k3, t + h)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t += h
        out[i + 1] = y
    return out


def _solve_adaptive(m: ModelSpec, y0: np.ndarray, t0: float, t1: float,
                    cfg: IntegratorConfig, t_eval=None, dense: bool = False):
    sol = solve_ivp(
        lambda t, y: rhs_phases(m, y, t),
        (t0, t1), y0, method="RK45",
        rtol=cfg.rel_tol, atol=cfg.abs_tol,
        t_eval=t_eval, dense_output=dense,
    )
    if not sol.success:
        raise StepFailure(f"adaptive integrator failed: {sol.message}")
    return sol


def integrate(m: ModelSpec, s0: PhaseState, t_span: tuple[float, float],
              cfg: IntegratorConfig | None = None,
              t_eval: np.ndarray | None = None) -> Trajectory:
    """Integrate the ensemble ODE over t_span and return sampled phases.

    Output rows are lifted (never wrapped); cyclic order is verified at every
    sample and a lost margin raises CollisionError.
    """
    cfg = cfg or IntegratorConfig()
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t_eval is None:
        t_eval = np.linspace(t0, t1, 513)
    else:
        t_eval = np.asarray(t_eval, dtype=float)
    y0 = np.array(s0.phases, dtype=float)
    if cfg.method is Method.RK4_FIXED:
        phases = _rk4(m, y0, t_eval, cfg.dt)
    else:
        if t1 > t0:
            sol = _solve_adaptive(m, y0, t0, t1, cfg, t_eval=t_eval)
        else:
            sol = _solve_adaptive(m, y0, t0, t1, cfg, t_eval=t_eval[::-1])
            sol.y = sol.y[:, ::-1]
        phases = sol.y.T.copy()
    _check_order(t_eval, phases, s0.sep_min)
    return Trajectory(t_eval, phases, sep_min=s0.sep_min)


def _psi_raw(y: np.ndarray, sep_min: float) -> float:
    return chart_inverse(canonicalize(y, sep_min=sep_min)).mobius.psi


class _PsiTracker:
    """Continuous lift of the recovered chart angle along a trajectory."""

    def __init__(self, y0: np.ndarray, sep_min: float):
        self.sep_min = sep_min
        self.raw = _psi_raw(y0, sep_min)
        self.lift = self.raw

    def advance(self, y: np.ndarray) -> float:
        raw = _psi_raw(y, self.sep_min)
        self.lift += float(wrap_angle(raw - self.raw))
        self.raw = raw
        return self.lift


def find_limit_cycle(m: ModelSpec, lam: CrossRatios,
                     cfg: IntegratorConfig | None = None) -> OrbitRecord:
    """Locate the attracting periodic orbit on the leaf lam and sample it.

    Integrates the unperturbed flow from the leaf's reference configuration
    through a transient, then anchors a Poincare section at the reached state:
    the section is the hyperplane through the anchor normal to the flow, and
    returns are near approaches of the trajectory to the anchor. Each accepted
    return re-anchors the section one period further down the transient, so
    the anchor contracts onto the cycle; the recurrence residual (max circle
    distance between the anchor and its first return) must fall below 1e-8.
    The converged cycle is re-integrated on a uniform grid of n_samples
    intervals.
    """
    cfg = cfg or IntegratorConfig()
    if cfg.method is Method.RK45_ADAPTIVE:
        # Closure is certified at 1e-8 in max circle distance; a leaf with a
        # close phase pass accumulates ~1e-7 of solver error per period at
        # the default tolerances, so the search integrates well below that.
        cfg = replace(cfg, rel_tol=min(cfg.rel_tol, 1e-12),
                      abs_tol=min(cfg.abs_tol, 1e-13))
    if m.epsilon != 0.0:
        raise DomainError("find_limit_cycle requires the unperturbed model (epsilon = 0)")
    if m.kind is ModelKind.GENERAL_WS:
        raise DomainError("cycle detection is implemented for rotator models")
    if Convention(lam.convention) is not Convention.CANONICAL:
        raise DomainError("find_limit_cycle expects canonical cross ratios")
    if abs(m.omega) >= 1.0:
        raise DomainError(f"|omega| = {abs(m.omega)} must be < 1")
    if abs(m.omega) <= 1e-3:
        raise FrequencyBelowThresholdError(f"|omega| = {abs(m.omega)} too small")

    try:
        fp = fixed_point(m.omega, m.kappa, require_rotation=True)
    except (NoFixedPointError, BoundaryError) as exc:
        raise NotConvergedError(
            "no attracting cycle in this parameter regime "
            f"(kappa^2 = {m.kappa**2:.6g} vs 1-omega^2 = {1 - m.omega**2:.6g})"
        ) from exc
    t_period_est = TWO_PI / abs(fp.omega_rot)

    t_transient = max(cfg.t_transient, 20.0 / abs(m.kappa))
    # Transverse contraction weakens toward the existence boundary of the
    # reduced fixed point, so the budget leaves room for many slow returns.
    t_budget = cfg.t_max if cfg.t_max is not None else t_transient + 150.0 * t_period_est

    s0 = reference_point(lam)
    sep_min = s0.sep_min
    y = np.array(s0.phases, dtype=float)

    sol = _solve_adaptive(m, y, 0.0, t_transient, cfg, t_eval=np.array([t_transient]))
    y = sol.y[:, -1].copy()
    t_now = t_transient

    anchor = y.copy()
    t_anchor = t_now
    v_ref = rhs_phases(m, anchor)
    v_hat = v_ref / np.linalg.norm(v_ref)

    # A return must be a genuine recurrence, not the near miss a splay state
    # makes after T/N (unit gap ~ 2 pi / N there), so the acceptance radius
    # sits well below 2 pi / 12.
    accept_radius = 0.1
    window = 1.35 * t_period_est
    n_fine = 160
    guard = 0.25 * t_period_est

    n_ret = 0
    residual = math.inf
    converged = False
    period = math.nan
    y_start = anchor

    while not converged and t_now < t_budget:
        t_end = min(t_now + window, t_budget)
        sol = _solve_adaptive(m, y, t_now, t_end, cfg, dense=True)
        t_fine = np.linspace(t_now, t_end, n_fine + 1)
        y_fine = sol.sol(t_fine).T
        _check_order(t_fine, y_fine, sep_min)

        dists = np.max(circle_distance(y_fine, anchor[None, :]), axis=1)
        if float(np.max(dists)) < 1e-3 and t_end - t_anchor > guard:
            raise FrequencyBelowThresholdError(
                f"state stayed within 1e-3 of the section anchor for "
                f"{t_end - t_anchor:.3g} time units; the leaf does not rotate"
            )

        def _gap(t: float) -> float:
            return float(np.dot(wrap_angle(sol.sol(t) - anchor), v_hat))

        re_anchored = False
        for i in range(1, n_fine):
            if not (dists[i] < dists[i - 1] and dists[i] <= dists[i + 1]):
                continue
            if dists[i] > 0.8 or t_fine[i] - t_anchor <= guard:
                continue
            ga, gb = _gap(t_fine[i - 1]), _gap(t_fine[i + 1])
            if ga > 0.0 or gb < 0.0:
                continue
            t_c = float(brentq(_gap, t_fine[i - 1], t_fine[i + 1],
                               xtol=1e-13, rtol=4 * np.finfo(float).eps))
            y_c = sol.sol(t_c).copy()
            res_c = float(np.max(circle_distance(y_c, anchor)))
            if res_c > accept_radius:
                continue
            n_ret += 1
            residual = res_c
            if res_c < 1e-8:
                converged = True
                period = t_c - t_anchor
                y_start = anchor
                break
            # Re-anchor on the better point and rescan from the return time.
            anchor = y_c
            t_anchor = t_c
            v_ref = rhs_phases(m, anchor)
            v_hat = v_ref / np.linalg.norm(v_ref)
            y = y_c
            t_now = t_c
            re_anchored = True
            break

        if converged or re_anchored:
            continue
        y = y_fine[-1].copy()
        t_now = t_end

    if not converged:
        detail = (f"residual {residual:.3e}" if n_ret
                  else "no section return detected")
        raise NotConvergedError(
            f"section recurrence {detail}, not below 1e-8 within "
            f"t_max = {t_budget:.6g}"
        )
    psi0 = _psi_raw(y_start, sep_min)

    m_samp = cfg.n_samples
    t_grid = np.linspace(0.0, period, m_samp + 1)
    sol = _solve_adaptive(m, y_start, 0.0, period, cfg, t_eval=t_grid)
    phases = sol.y.T.copy()
    _check_order(t_grid, phases, sep_min)
    derivs = np.empty_like(phases)
    for i in range(phases.shape[0]):
        derivs[i] = rhs_phases(m, phases[i])

    winding_vec = np.round((phases[-1] - phases[0]) / TWO_PI).astype(int)
    winding = int(winding_vec[0])
    if not np.all(winding_vec == winding):
        raise NotConvergedError("units disagree on the per-period winding number")

    lam_final = cross_ratios(canonicalize(phases[0], sep_min=sep_min),
                             Convention.CANONICAL)
    check_idx = np.arange(0, m_samp + 1, max(1, m_samp // 8))
    drift = 0.0
    for i in check_idx:
        vals = cross_ratios(canonicalize(phases[i], sep_min=sep_min),
                            Convention.CANONICAL).values
        drift = max(drift, float(np.max(np.abs(vals - lam_final.values))))
    converged = converged and drift < 1e-7

    return OrbitRecord(
        samples_t=t_grid, samples_phases=phases, derivs=derivs,
        period=float(period), lam=lam_final, residual=residual,
        converged=bool(converged), n_returns=n_ret, psi0=float(psi0),
        winding=winding, sep_min=sep_min,
    )


def _hermite_eval(t_grid: np.ndarray, vals: np.ndarray, ders: np.ndarray,
                  tq: np.ndarray) -> np.ndarray:
    """Cubic Hermite interpolation on a uniform grid, vectorized in tq."""
    h = t_grid[1] - t_grid[0]
    idx = np.clip((tq / h).astype(int), 0, t_grid.shape[0] - 2)
    s = (tq - t_grid[idx]) / h
    h00 = 2 * s**3 - 3 * s**2 + 1
    h10 = s**3 - 2 * s**2 + s
    h01 = -2 * s**3 + 3 * s**2
    h11 = s**3 - s**2
    return (h00 * vals[idx] + h10 * h * ders[idx]
            + h01 * vals[idx + 1] + h11 * h * ders[idx + 1])


def splay_check(orb: OrbitRecord, splay_tol: float = 1e-6) -> SplayReport:
    """Test the shift identity phi_j(t) = phi_N(t + j*T/N) on a sampled cycle.

    The last unit's series is interpolated with cubic Hermite polynomials
    (stored derivatives), extended periodically using the cycle's winding;
    the report carries the worst circle distance over all units and sample
    times.
    """
    n = orb.n_units
    t = orb.samples_t
    period = orb.period
    last = orb.samples_phases[:, -1]
    last_d = orb.derivs[:, -1]
    shift_per_period = TWO_PI * orb.winding

    worst = 0.0
    for j in range(1, n):
        tq = t[:-1] + j * period / n
        wrap = tq >= period
        tq = np.where(wrap, tq - period, tq)
        ref = _hermite_eval(t, last, last_d, tq) + np.where(wrap, shift_per_period, 0.0)
        err = float(np.max(circle_distance(orb.samples_phases[:-1, j - 1], ref)))
        worst = max(worst, err)
    return SplayReport(
        is_splay=bool(worst < splay_tol),
        max_shift_error=worst,
        period=period,
        splay_tol=splay_tol,
    )


def psi_series(orb: OrbitRecord, stride: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Unwrapped chart angle along the stored samples (helper for diagnostics)."""
    idx = np.arange(0, orb.samples_phases.shape[0], stride)
    tracker = _PsiTracker(orb.samples_phases[idx[0]], orb.sep_min)
    lifts = np.empty(idx.shape[0])
    lifts[0] = tracker.lift
    for k in range(1, idx.shape[0]):
        lifts[k] = tracker.advance(orb.samples_phases[idx[k]])
    return orb.samples_t[idx], lifts
