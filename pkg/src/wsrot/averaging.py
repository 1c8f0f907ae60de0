"""Averaged perturbation functional over per-leaf limit cycles.

The slow drift of the conserved cross ratios under a weak phase perturbation
h is governed, to first order, by the per-period average of the gradient of
each consecutive cross ratio contracted with h along the unperturbed cycle.
This module computes those gradients analytically, the averaged functional
F_h by composite Simpson quadrature over the sampled cycle, and scans leaf
coordinates for sign changes that mark persistent perturbed orbits.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CollisionError,
    DomainError,
    NumericalError,
    QuadratureError,
    WsrotError,
)
from .mobius import (
    Convention,
    CrossRatios,
    cross_ratios,
    splay_lambda,
    state_from_cross_ratios,
)
from .models import ModelKind, ModelSpec, PerturbationSpec, h_eval
from .orbits import IntegratorConfig, OrbitRecord, find_limit_cycle, integrate
from .torus_state import PhaseState, canonicalize

_SIN_FLOOR = 1e-12


@dataclass(frozen=True)
class AveragedSample:
    """F_h at one leaf: consecutive coordinates, components, period, error."""

    lam: CrossRatios
    f_h: np.ndarray
    period: float
    quadrature_error_estimate: float

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam.to_dict(),
            "f_h": [float(v) for v in self.f_h],
            "period": self.period,
            "quadrature_error_estimate": self.quadrature_error_estimate,
        }


@dataclass(frozen=True)
class ScanPoint:
    lam: float
    f_h: np.ndarray
    period: float
    quadrature_error_estimate: float
    status: str

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "f_h": [float(v) for v in self.f_h],
            "period": self.period,
            "quadrature_error_estimate": self.quadrature_error_estimate,
            "status": self.status,
        }


@dataclass(frozen=True)
class Root:
    """A sign change of scalar F_h. Stability convention: a perturbed orbit

    persists at the root and, for epsilon > 0, is attracting exactly when the
    slope of F_h there is negative; the verdicts for both signs of epsilon
    are reported.
    """

    lam_root: float
    slope: float
    stable_for_positive_eps: bool
    stable_for_negative_eps: bool
    bracket: tuple[float, float]
    refined: bool

    def to_dict(self) -> dict:
        return {
            "lambda_root": self.lam_root,
            "slope": self.slope,
            "stable_for_positive_eps": self.stable_for_positive_eps,
            "stable_for_negative_eps": self.stable_for_negative_eps,
            "bracket": list(self.bracket),
            "refined": self.refined,
        }


@dataclass(frozen=True)
class RootReport:
    samples: list[ScanPoint]
    roots: list[Root]
    endpoint_low: tuple[float, float]
    endpoint_high: tuple[float, float]
    grid: dict = field(default_factory=dict)

    @property
    def n_ok(self) -> int:
        return sum(1 for s in self.samples if s.ok)

    def to_dict(self) -> dict:
        return {
            "samples": [s.to_dict() for s in self.samples],
            "roots": [r.to_dict() for r in self.roots],
            "endpoint_low": list(self.endpoint_low),
            "endpoint_high": list(self.endpoint_high),
            "grid": self.grid,
            "n_ok": self.n_ok,
        }


def _quad_indices(k: int, n: int, convention: Convention) -> tuple[int, int, int, int]:
    """0-based (p, q, r, s) for the k-th cross ratio, k in 1..n-3."""
    if not 1 <= k <= n - 3:
        raise IndexError(f"k = {k} outside 1..{n - 3}")
    if convention is Convention.CANONICAL:
        return 0, 1, 2, k + 2
    return k - 1, k, k + 1, k + 2


def _grad_entries(theta: np.ndarray, p: int, q: int, r: int, s: int) -> np.ndarray:
    """Gradient of the (p,q,r,s) cross ratio w.r.t. the four involved phases.

    theta has shape (..., N); the result has shape (..., 4) ordered
    (d/d theta_p, d/d theta_q, d/d theta_r, d/d theta_s). Written through the
    half-angle sine factorization, whose phase factors cancel exactly:

        L = sin(A_ps) sin(A_qr) / (sin(A_qs) sin(A_pr)),  A_xy = (th_x - th_y)/2

    so each entry is (L/2) times a difference of cotangents.
    """
    a_ps = 0.5 * (theta[..., p] - theta[..., s])
    a_qr = 0.5 * (theta[..., q] - theta[..., r])
    a_qs = 0.5 * (theta[..., q] - theta[..., s])
    a_pr = 0.5 * (theta[..., p] - theta[..., r])
    sins = np.stack([np.sin(a_ps), np.sin(a_qr), np.sin(a_qs), np.sin(a_pr)], axis=-1)
    if np.any(np.abs(sins) < _SIN_FLOOR):
        raise CollisionError("phase collision in cross-ratio gradient")
    s_ps, s_qr, s_qs, s_pr = (sins[..., i] for i in range(4))
    lam = (s_ps * s_qr) / (s_qs * s_pr)
    c_ps = np.cos(a_ps) / s_ps
    c_qr = np.cos(a_qr) / s_qr
    c_qs = np.cos(a_qs) / s_qs
    c_pr = np.cos(a_pr) / s_pr
    half = 0.5 * lam
    return np.stack([
        half * (c_ps - c_pr),
        half * (c_qr - c_qs),
        half * (c_pr - c_qr),
        half * (c_qs - c_ps),
    ], axis=-1)


def cross_ratio_gradient(k: int, state: PhaseState,
                         convention: Convention = Convention.CONSECUTIVE) -> np.ndarray:
    """Gradient of the k-th cross ratio with respect to all N phases.

    Only the four phases entering the ratio get nonzero entries; the entries
    sum to zero (the ratio is invariant under common rotation).
    """
    n = state.n_units
    idx = _quad_indices(k, n, Convention(convention))
    out = np.zeros(n)
    out[list(idx)] = _grad_entries(state.phases, *idx)
    return out


def _simpson(vals: np.ndarray, h: float) -> float:
    """Composite Simpson on a uniform grid with an even interval count."""
    m = vals.shape[0] - 1
    if m % 2:
        raise DomainError("Simpson rule needs an even number of intervals")
    return (h / 3.0) * float(
        vals[0] + vals[-1] + 4.0 * vals[1:-1:2].sum() + 2.0 * vals[2:-1:2].sum()
    )


def _trapezoid(vals: np.ndarray, h: float) -> float:
    """Periodic trapezoid cross-check (spectrally accurate here)."""
    return h * float(vals[:-1].sum() + 0.5 * (vals[-1] - vals[0]))


def _integrand_rows(theta: np.ndarray, p: PerturbationSpec, n: int,
                    convention: Convention) -> np.ndarray:
    """Rows of sum_j dL_k/d theta_j * h(theta_j) for every k, shape (rows, N-3)."""
    out = np.empty(theta.shape[:-1] + (n - 3,))
    hvals = h_eval(p, theta)
    for k in range(1, n - 2):
        idx = _quad_indices(k, n, convention)
        grads = _grad_entries(theta, *idx)
        out[..., k - 1] = np.sum(grads * hvals[..., list(idx)], axis=-1)
    return out


def f_h_from_orbit(m: ModelSpec, orb: OrbitRecord) -> AveragedSample:
    """Averaged functional on an already-sampled cycle (one orbit, many h)."""
    if m.perturbation is None:
        raise DomainError("f_h needs a model with a perturbation")
    n = orb.n_units
    if m.n_units != n:
        raise DomainError("model and orbit disagree on the unit count")
    theta = orb.samples_phases
    mm = orb.n_samples
    h_step = orb.period / mm
    rows = _integrand_rows(theta, m.perturbation, n, Convention.CONSECUTIVE)

    vals = np.empty(n - 3)
    err = 0.0
    for k in range(n - 3):
        full = _simpson(rows[:, k], h_step) / orb.period
        halved = _simpson(rows[::2, k], 2.0 * h_step) / orb.period
        vals[k] = full
        err = max(err, abs(full - halved))
    if err > 1e-8:
        raise QuadratureError(
            f"Richardson estimate {err:.3e} exceeds 1e-8; integrand may be "
            "under-resolved"
        )
    lam_cons = cross_ratios(orb.state(0), Convention.CONSECUTIVE)
    return AveragedSample(lam_cons, vals, orb.period, err)


def _to_canonical(lam: CrossRatios) -> CrossRatios:
    if Convention(lam.convention) is Convention.CANONICAL:
        return lam
    return cross_ratios(state_from_cross_ratios(lam), Convention.CANONICAL)


def f_h(m: ModelSpec, lam: CrossRatios,
        cfg: IntegratorConfig | None = None) -> AveragedSample:
    """F_h on the leaf lam (consecutive coordinates), one cycle per call.

    The cycle is located with the perturbation forced off; h enters only
    through the averaged integrand.
    """
    if m.perturbation is None:
        raise DomainError("f_h needs a model with a perturbation")
    orb = find_limit_cycle(m.unperturbed(), _to_canonical(lam), cfg)
    return f_h_from_orbit(m, orb)


def f_h_at_splay(m: ModelSpec, n: int,
                 cfg: IntegratorConfig | None = None) -> AveragedSample:
    """F_h at the splay leaf; asserts the components agree and vanish.

    Raises NumericalError if the component spread reaches 1e-7 or the max
    magnitude reaches 1e-6 (both should hold on any splay leaf).
    """
    if m.n_units != n:
        raise DomainError("n must match the model's unit count")
    sample = f_h(m, splay_lambda(n, Convention.CONSECUTIVE), cfg)
    spread = float(sample.f_h.max() - sample.f_h.min()) if n > 4 else 0.0
    sup = float(np.max(np.abs(sample.f_h)))
    if spread >= 1e-7:
        raise NumericalError(
            f"splay components spread {spread:.3e} (expected < 1e-7)")
    if sup >= 1e-6:
        raise NumericalError(
            f"splay F_h magnitude {sup:.3e} (expected < 1e-6)")
    return sample


def drift_rate(m: ModelSpec, lam: CrossRatios,
               cfg: IntegratorConfig | None = None
               ) -> tuple[np.ndarray, AveragedSample]:
    """Measured per-period drift of the consecutive cross ratios.

    Starts on the unperturbed cycle of the leaf, integrates the full
    perturbed model for exactly one unperturbed period, and returns
    (Lambda(T) - Lambda(0)) / T next to the averaged prediction sample.
    To first order in epsilon the rate should match epsilon * F_h(lam).
    """
    cfg = cfg or IntegratorConfig()
    orb = find_limit_cycle(m.unperturbed(), _to_canonical(lam), cfg)
    sample = f_h_from_orbit(m, orb)
    s0 = orb.state(0)
    tr = integrate(m, s0, (0.0, orb.period), cfg,
                   t_eval=np.array([0.0, orb.period]))
    lam0 = cross_ratios(s0, Convention.CONSECUTIVE).values
    lam1 = cross_ratios(tr.state(1), Convention.CONSECUTIVE).values
    return (lam1 - lam0) / orb.period, sample


def _scalar_leaf(lam: float) -> CrossRatios:
    return CrossRatios(np.array([float(lam)]), Convention.CONSECUTIVE)


def _scan_worker(args) -> list[tuple]:
    """One grid point: shared orbit, one F_h row per perturbation."""
    base, perturbations, lam, cfg = args
    try:
        orb = find_limit_cycle(base, _to_canonical(_scalar_leaf(lam)), cfg)
    except WsrotError as exc:
        row = (lam, None, math.nan, math.nan, type(exc).__name__)
        return [row for _ in perturbations]
    out = []
    for p in perturbations:
        model = ModelSpec.generalized_rotator(base.omega, base.kappa,
                                              base.n_units, p)
        try:
            sample = f_h_from_orbit(model, orb)
            out.append((lam, sample.f_h, sample.period,
                        sample.quadrature_error_estimate, "ok"))
        except WsrotError as exc:
            out.append((lam, None, math.nan, math.nan, type(exc).__name__))
    return out


def _compress_sign(v: float, zero_tol: float) -> int:
    if not math.isfinite(v) or abs(v) <= zero_tol:
        return 0
    return 1 if v > 0 else -1


def _refine_root(base: ModelSpec, p: PerturbationSpec, lo: float, hi: float,
                 f_lo: float, cfg: IntegratorConfig, root_tol: float) -> float | None:
    """Bisect the scalar F_h sign change; None if an evaluation fails."""
    model = ModelSpec.generalized_rotator(base.omega, base.kappa, base.n_units, p)
    s_lo = 1 if f_lo > 0 else -1
    for _ in range(60):
        if hi - lo < root_tol:
            break
        mid = 0.5 * (lo + hi)
        try:
            v = float(f_h(model, _scalar_leaf(mid), cfg).f_h[0])
        except WsrotError:
            return None
        if v == 0.0:
            return mid
        if (1 if v > 0 else -1) == s_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def scan_curves(base: ModelSpec, perturbations: list[PerturbationSpec],
                grid: np.ndarray, cfg: IntegratorConfig | None = None, *,
                jobs: int = 1, refine_roots: bool = False,
                root_tol: float = 1e-8, zero_tol: float = 1e-7
                ) -> list[RootReport]:
    """Scan F_h over a scalar leaf grid for several h at once.

    The expensive per-leaf cycle is computed once and reused by every curve.
    Grid points are independent; with jobs > 1 they are farmed out to worker
    processes and reassembled in grid order.
    """
    cfg = cfg or IntegratorConfig()
    base = base.unperturbed()
    if base.n_units != 4:
        raise DomainError("scalar leaf scans require N = 4")
    if not perturbations:
        raise DomainError("need at least one perturbation")
    grid = np.asarray(grid, dtype=float)

    tasks = [(base, perturbations, float(lam), cfg) for lam in grid]
    if grid.size == 0:
        per_point: list[list[tuple]] = []
    elif jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_point = list(pool.map(_scan_worker, tasks, chunksize=1))
    else:
        per_point = [_scan_worker(t) for t in tasks]

    reports = []
    meta_base = {
        "n_points": int(grid.size),
        "lo": float(grid[0]) if grid.size else math.nan,
        "hi": float(grid[-1]) if grid.size else math.nan,
        "zero_tol": zero_tol,
        "root_tol": root_tol,
        "refine_roots": refine_roots,
    }
    for c, p in enumerate(perturbations):
        samples = []
        for rows in per_point:
            lam, fv, period, qerr, status = rows[c]
            fv = np.full(1, math.nan) if fv is None else np.asarray(fv)
            samples.append(ScanPoint(lam, fv, period, qerr, status))
        roots = _locate_roots(base, p, samples, cfg, refine_roots,
                              root_tol, zero_tol)
        if samples:
            lo_pt = next((s for s in samples if s.ok), samples[0])
            hi_pt = next((s for s in reversed(samples) if s.ok), samples[-1])
            lo = (lo_pt.lam, float(lo_pt.f_h[0]))
            hi = (hi_pt.lam, float(hi_pt.f_h[0]))
        else:
            lo = hi = (math.nan, math.nan)
        reports.append(RootReport(samples, roots, lo, hi, dict(meta_base)))
    return reports


def _locate_roots(base: ModelSpec, p: PerturbationSpec,
                  samples: list[ScanPoint], cfg: IntegratorConfig,
                  refine: bool, root_tol: float, zero_tol: float) -> list[Root]:
    ok = [s for s in samples if s.ok]
    if len(ok) < 2:
        return []
    lams = np.array([s.lam for s in ok])
    vals = np.array([float(s.f_h[0]) for s in ok])
    signs = np.array([_compress_sign(v, zero_tol) for v in vals])

    roots: list[Root] = []

    def _secant_slope(i: int, j: int) -> float:
        if lams[j] == lams[i]:
            return math.nan
        return float((vals[j] - vals[i]) / (lams[j] - lams[i]))

    i = 0
    n = len(ok)
    while i < n:
        if signs[i] == 0:
            j = i
            while j + 1 < n and signs[j + 1] == 0:
                j += 1
            # A run of numerically-zero samples marks one root at its middle.
            mid = 0.5 * (lams[i] + lams[j])
            a = i - 1 if i > 0 else i
            b = j + 1 if j + 1 < n else j
            slope = _secant_slope(a, b)
            roots.append(Root(float(mid), slope,
                              stable_for_positive_eps=slope < 0,
                              stable_for_negative_eps=slope > 0,
                              bracket=(float(lams[a]), float(lams[b])),
                              refined=False))
            i = j + 1
            continue
        if i + 1 < n and signs[i + 1] == -signs[i]:
            lo, hi = float(lams[i]), float(lams[i + 1])
            slope = _secant_slope(i, i + 1)
            lam_root = 0.5 * (lo + hi)
            refined = False
            if refine:
                out = _refine_root(base, p, lo, hi, vals[i], cfg, root_tol)
                if out is not None:
                    lam_root = out
                    refined = True
            roots.append(Root(float(lam_root), slope,
                              stable_for_positive_eps=slope < 0,
                              stable_for_negative_eps=slope > 0,
                              bracket=(lo, hi), refined=refined))
        i += 1
    return roots


def scan_and_root(m: ModelSpec, grid: np.ndarray,
                  cfg: IntegratorConfig | None = None, *,
                  jobs: int = 1, refine_roots: bool = False,
                  root_tol: float = 1e-8, zero_tol: float = 1e-7) -> RootReport:
    """Scan one perturbation's F_h over a scalar grid and report its roots."""
    if m.perturbation is None:
        raise DomainError("scan_and_root needs a model with a perturbation")
    if np.asarray(grid).size == 0:
        return RootReport([], [], (math.nan, math.nan), (math.nan, math.nan),
                          {"n_points": 0})
    return scan_curves(m, [m.perturbation], np.asarray(grid, dtype=float), cfg,
                       jobs=jobs, refine_roots=refine_roots,
                       root_tol=root_tol, zero_tol=zero_tol)[0]
