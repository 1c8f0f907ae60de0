"""Named property suites, runnable from the CLI and reused by the tests.

Each suite draws its randomness from a seed, computes a worst-case error for
one structural property, and compares it against the suite's tolerance.
These are quick spot checks (seconds in total), not the full test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import averaging, mobius, models, orbits, torus_state, ws_reduced


@dataclass(frozen=True)
class InvariantResult:
    name: str
    max_error: float
    tol: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.max_error < self.tol

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "max_error": self.max_error,
            "tol": self.tol,
            "passed": self.passed,
            "detail": self.detail,
        }


def _random_state(rng, n: int) -> torus_state.PhaseState:
    g = rng.uniform(0.2, 1.0, n)
    g *= torus_state.TWO_PI / g.sum()
    phases = -np.pi + np.concatenate(([0.0], np.cumsum(g[:-1])))
    return torus_state.canonicalize(phases + rng.uniform(-np.pi, np.pi))


def _random_mobius(rng) -> mobius.MobiusParams:
    r = rng.uniform(0.0, 0.95)
    a = rng.uniform(-np.pi, np.pi)
    psi = rng.uniform(-np.pi, np.pi)
    return mobius.MobiusParams(r * np.exp(1j * a), psi)


def _suite_canonicalize(rng) -> tuple[float, str]:
    worst = 0.0
    for _ in range(50):
        s = _random_state(rng, int(rng.integers(4, 12)))
        shifts = rng.integers(-3, 4, s.n_units) * torus_state.TWO_PI
        again = torus_state.canonicalize(s.phases + shifts)
        worst = max(worst, float(np.max(np.abs(again.phases - s.phases))))
        worst = max(worst, abs(s.gaps().sum() - torus_state.TWO_PI))
    return worst, "relabel/regap drift over 50 random states"


def _suite_order_parameter(rng) -> tuple[float, str]:
    worst = 0.0
    for n in (4, 6, 9):
        z = torus_state.order_parameter(torus_state.splay_state(n))
        worst = max(worst, abs(z.z))
    for _ in range(20):
        s = _random_state(rng, 7)
        worst = max(worst, max(0.0, abs(torus_state.order_parameter(s).z) - 1.0))
    return worst, "splay mean field zero; |Z| <= 1"


def _suite_group_laws(rng) -> tuple[float, str]:
    worst = 0.0
    ident = mobius.MobiusParams.identity()
    zs = np.exp(1j * rng.uniform(-np.pi, np.pi, 16))
    for _ in range(60):
        g = _random_mobius(rng)
        h = _random_mobius(rng)
        k = _random_mobius(rng)
        gh_k = mobius.compose(mobius.compose(g, h), k)
        g_hk = mobius.compose(g, mobius.compose(h, k))
        for z in zs[:4]:
            worst = max(worst, abs(mobius.apply(gh_k, z) - mobius.apply(g_hk, z)))
            worst = max(worst, abs(mobius.apply(mobius.compose(g, mobius.inverse(g)), z) - mobius.apply(ident, z)))
    return worst, "associativity and inverses on the circle"


def _suite_chart(rng) -> tuple[float, str]:
    worst = 0.0
    for _ in range(40):
        n = int(rng.integers(4, 10))
        s = _random_state(rng, n)
        w = mobius.chart_inverse(s)
        back = mobius.chart(w)
        worst = max(worst, float(np.max(np.abs(back.phases - s.phases))))
    return worst, "chart round trip over 40 random states"


def _suite_conventions(rng) -> tuple[float, str]:
    worst = 0.0
    for _ in range(40):
        n = int(rng.integers(4, 10))
        s = _random_state(rng, n)
        lam_c = mobius.cross_ratios(s, mobius.Convention.CANONICAL)
        lam_k = mobius.convert(lam_c, mobius.Convention.CONSECUTIVE)
        back = mobius.convert(lam_k, mobius.Convention.CANONICAL)
        worst = max(worst, float(np.max(np.abs(back.values - lam_c.values))))
    return worst, "canonical <-> consecutive round trip"


def _suite_z_series(rng) -> tuple[float, str]:
    worst = 0.0
    for _ in range(30):
        n = int(rng.integers(5, 11))
        s = _random_state(rng, n)
        w = mobius.chart_inverse(s)
        direct = models.mean_field(s.phases)
        series = ws_reduced.z_series(w.mobius.alpha, w.mobius.psi, w.lam)
        worst = max(worst, abs(series - direct))
    return worst, "series mean field vs direct over 30 states"


def _suite_fixed_point(rng) -> tuple[float, str]:
    worst = 0.0
    for _ in range(10):
        omega = rng.uniform(0.05, 0.95)
        margin = rng.uniform(0.05, 1.0)
        kappa = -np.sqrt(1.0 - omega**2) - margin
        fp = ws_reduced.fixed_point(omega, kappa)
        val, _ = ws_reduced._cubic(omega, kappa)
        # Plain bisection redo of the root, no Newton polish; the cubic is
        # negative at 0 and positive at 1 inside the existence regime.
        lo, hi = 0.0, 1.0
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if val(mid) > 0:
                hi = mid
            else:
                lo = mid
        worst = max(worst, abs(fp.x - 0.5 * (lo + hi)), abs(val(fp.x)))
    return worst, "production root vs plain bisection"


def _suite_conservation(rng) -> tuple[float, str]:
    m = models.ModelSpec.classic_rotator(0.8, -0.7, 5)
    worst = 0.0
    for _ in range(2):
        s0 = _random_state(rng, 5)
        lam0 = mobius.cross_ratios(s0, mobius.Convention.CANONICAL).values
        tr = orbits.integrate(m, s0, (0.0, 57.4), t_eval=np.linspace(0, 57.4, 33))
        for i in (8, 16, 24, 32):
            lam_t = mobius.cross_ratios(tr.state(i), mobius.Convention.CANONICAL).values
            worst = max(worst, float(np.max(np.abs(lam_t - lam0))))
    return worst, "cross-ratio drift over one nominal period, N=5"


def _suite_gradient(rng) -> tuple[float, str]:
    worst = 0.0
    h_fd = 1e-6
    for _ in range(3):
        s = _random_state(rng, 6)
        for conv in (mobius.Convention.CANONICAL, mobius.Convention.CONSECUTIVE):
            for k in (1, 2, 3):
                grad = averaging.cross_ratio_gradient(k, s, conv)
                for j in range(6):
                    e = np.zeros(6)
                    e[j] = h_fd
                    vp = mobius.cross_ratios(
                        torus_state.canonicalize(s.phases + e), conv).values[k - 1]
                    vm = mobius.cross_ratios(
                        torus_state.canonicalize(s.phases - e), conv).values[k - 1]
                    worst = max(worst, abs(grad[j] - (vp - vm) / (2 * h_fd)))
    return worst, "analytic gradient vs central differences"


_H1 = models.PerturbationSpec.normalized({2: 1.0}, {}, 1e-3)
_H2 = models.PerturbationSpec.normalized({}, {2: -1.0}, 1e-3)


def _suite_antisymmetry(rng) -> tuple[float, str]:
    m = models.ModelSpec.generalized_rotator(0.8, -0.7, 4, _H1)
    lam = lambda v: mobius.CrossRatios(np.array([v]), mobius.Convention.CONSECUTIVE)
    a = averaging.f_h(m, lam(0.3)).f_h[0]
    b = averaging.f_h(m, lam(0.7)).f_h[0]
    return abs(a + b), "F(0.3) + F(0.7), N=4, mode-2 sine"


def _suite_splay_zero(rng) -> tuple[float, str]:
    m = models.ModelSpec.generalized_rotator(0.8, -0.7, 4, _H2)
    sample = averaging.f_h_at_splay(m, 4)
    return float(np.max(np.abs(sample.f_h))), "|F_h| at the N=4 splay leaf"


_SUITES: list[tuple[str, Callable, float]] = [
    ("torus.canonicalize", _suite_canonicalize, 1e-9),
    ("torus.order_parameter", _suite_order_parameter, 1e-12),
    ("mobius.group_laws", _suite_group_laws, 1e-10),
    ("mobius.chart_roundtrip", _suite_chart, 1e-9),
    ("mobius.conventions", _suite_conventions, 1e-12),
    ("ws.z_series", _suite_z_series, 1e-9),
    ("ws.fixed_point", _suite_fixed_point, 1e-12),
    ("orbits.conservation", _suite_conservation, 1e-7),
    ("averaging.gradient", _suite_gradient, 1e-7),
    ("averaging.antisymmetry", _suite_antisymmetry, 1e-7),
    ("averaging.splay_zero", _suite_splay_zero, 1e-6),
]


def suite_names() -> list[str]:
    return [name for name, _, _ in _SUITES]


def run_invariants(seed: int = 12345, name_filter: str = "",
                   tol_overrides: dict[str, float] | None = None
                   ) -> list[InvariantResult]:
    """Run matching suites; each one's rng is derived from (seed, index)."""
    tol_overrides = tol_overrides or {}
    out = []
    for i, (name, fn, tol) in enumerate(_SUITES):
        if name_filter and name_filter not in name:
            continue
        rng = np.random.default_rng([seed, i])
        err, detail = fn(rng)
        out.append(InvariantResult(name, float(err),
                                   float(tol_overrides.get(name, tol)), detail))
    return out
