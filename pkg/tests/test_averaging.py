"""Cross-ratio gradients, the averaged response, scans, and roots."""

import numpy as np
import pytest

from wsrot.errors import DomainError, QuadratureError
from wsrot.averaging import (
    cross_ratio_gradient,
    drift_rate,
    f_h,
    f_h_at_splay,
    f_h_from_orbit,
    scan_curves,
)
from wsrot.mobius import Convention, CrossRatios, cross_ratios, splay_lambda
from wsrot.models import ModelSpec, PerturbationSpec
from wsrot.orbits import IntegratorConfig, find_limit_cycle
from wsrot.torus_state import canonicalize

STATE6 = canonicalize([-2.8, -1.9, -0.4, 0.3, 1.4, 2.6])
H1 = PerturbationSpec.normalized({2: 1.0}, {}, 0.0)
H2 = PerturbationSpec.normalized({}, {2: -1.0}, 0.0)
H3 = PerturbationSpec.normalized({2: 0.6}, {2: -0.8}, 0.0)


def _leaf(v: float) -> CrossRatios:
    return CrossRatios(np.array([v]), Convention.CANONICAL)


def _model(p: PerturbationSpec, n: int = 4) -> ModelSpec:
    return ModelSpec.generalized_rotator(0.8, -0.7, n, p)


def test_gradient_entries_sum_to_zero(rng):
    for conv in (Convention.CANONICAL, Convention.CONSECUTIVE):
        for _ in range(10):
            raw = np.sort(rng.uniform(-np.pi, np.pi, 7))
            gaps = np.append(np.diff(raw), 2 * np.pi - (raw[-1] - raw[0]))
            if np.min(gaps) < 0.1:
                continue
            s = canonicalize(raw)
            for k in range(1, 5):
                g = cross_ratio_gradient(k, s, conv)
                assert abs(float(np.sum(g))) < 1e-12


def test_gradient_matches_central_differences():
    h = 1e-6
    for conv in (Convention.CANONICAL, Convention.CONSECUTIVE):
        for k in range(1, 4):
            grad = cross_ratio_gradient(k, STATE6, conv)
            for j in range(6):
                th = np.array(STATE6.phases)
                e = np.zeros(6)
                e[j] = h
                up = cross_ratios(canonicalize(th + e), conv).values[k - 1]
                dn = cross_ratios(canonicalize(th - e), conv).values[k - 1]
                fd = (up - dn) / (2 * h)
                assert grad[j] == pytest.approx(fd, abs=5e-9)


def test_gradient_moving_entry_closed_form():
    # Canonical ratio k involves units (1, 2, 3, k+3); the derivative in the
    # moving unit collapses to one product of half-angle sines. Frozen from a
    # hand derivation, then compared against the production gradient.
    th = np.array(STATE6.phases)
    for k, want in ((1, -0.2002568928430478), (3, -0.26272662836195404)):
        t1, t2, t3, ts = th[0], th[1], th[2], th[k + 2]
        lit = (0.5 * np.sin((t1 - t2) / 2) * np.sin((t2 - t3) / 2)
               / (np.sin((t1 - t3) / 2) * np.sin((t2 - ts) / 2) ** 2))
        assert lit == pytest.approx(want, abs=1e-13)
        grad = cross_ratio_gradient(k, STATE6, Convention.CANONICAL)
        assert grad[k + 2] == pytest.approx(want, abs=1e-13)


def test_gradient_rejects_out_of_range_index():
    with pytest.raises(IndexError):
        cross_ratio_gradient(0, STATE6, Convention.CANONICAL)
    with pytest.raises(IndexError):
        cross_ratio_gradient(4, STATE6, Convention.CANONICAL)


def test_f_h_frozen_values_and_linearity():
    cfg = IntegratorConfig()
    vals = {}
    for name, p in (("h1", H1), ("h2", H2), ("h3", H3)):
        s = f_h(_model(p), _leaf(0.3), cfg)
        vals[name] = float(s.f_h[0])
        assert s.quadrature_error_estimate < 1e-8
        assert s.period == pytest.approx(42.7633, abs=1e-3)
        assert s.lam.convention is Convention.CONSECUTIVE
    assert vals["h1"] == pytest.approx(9.9854738e-3, abs=1e-8)
    assert vals["h2"] == pytest.approx(-9.1646578e-3, abs=1e-8)
    # h3 is the unit-norm 3-4-5 mix of h1 and h2, so its average is the
    # same mix of theirs.
    assert vals["h3"] == pytest.approx(0.6 * vals["h1"] + 0.8 * vals["h2"],
                                       abs=1e-12)


def test_f_h_vanishes_at_symmetric_leaf():
    s = f_h(_model(H1), _leaf(0.5), IntegratorConfig())
    assert abs(float(s.f_h[0])) < 1e-9


def test_f_h_antisymmetric_pair():
    cfg = IntegratorConfig()
    a = float(f_h(_model(H1), _leaf(0.3), cfg).f_h[0])
    b = float(f_h(_model(H1), _leaf(0.7), cfg).f_h[0])
    assert abs(a + b) < 1e-9


def test_f_h_accepts_consecutive_input():
    cfg = IntegratorConfig()
    a = float(f_h(_model(H1), _leaf(0.3), cfg).f_h[0])
    b = float(f_h(_model(H1),
                  CrossRatios(np.array([0.3]), Convention.CONSECUTIVE),
                  cfg).f_h[0])
    assert a == pytest.approx(b, abs=1e-10)


def test_f_h_requires_perturbation():
    with pytest.raises(DomainError):
        f_h(ModelSpec.classic_rotator(0.8, -0.7, 4), _leaf(0.3),
            IntegratorConfig())


def test_quadrature_error_flagged_on_coarse_grids():
    cfg = IntegratorConfig(n_samples=8)
    with pytest.raises(QuadratureError):
        f_h(_model(H1), _leaf(0.3), cfg)


def test_f_h_from_orbit_matches_f_h():
    cfg = IntegratorConfig()
    orb = find_limit_cycle(ModelSpec.classic_rotator(0.8, -0.7, 4),
                           _leaf(0.3), cfg)
    a = f_h_from_orbit(_model(H1), orb)
    b = f_h(_model(H1), _leaf(0.3), cfg)
    assert float(a.f_h[0]) == pytest.approx(float(b.f_h[0]), abs=1e-14)


def test_f_h_at_splay_zero_and_spread():
    for n in (4, 5, 6):
        s = f_h_at_splay(_model(H1, n), n, IntegratorConfig())
        v = np.asarray(s.f_h)
        assert float(np.max(np.abs(v))) < 1e-6
        if n > 4:
            assert float(np.ptp(v)) < 1e-7


def test_f_h_at_splay_checks_unit_count():
    with pytest.raises(DomainError):
        f_h_at_splay(_model(H1, 5), 6, IntegratorConfig())


def test_drift_rate_matches_prediction():
    p = PerturbationSpec.normalized({2: 1.0}, {}, 1e-3)
    rates, sample = drift_rate(_model(p), _leaf(0.3), IntegratorConfig())
    pred = 1e-3 * float(sample.f_h[0])
    assert rates[0] == pytest.approx(pred, rel=0.05)


def test_drift_rate_requires_perturbation():
    with pytest.raises(DomainError):
        drift_rate(ModelSpec.classic_rotator(0.8, -0.7, 4), _leaf(0.3),
                   IntegratorConfig())


def test_scan_curves_shared_grid_and_zero_run():
    grid = np.linspace(0.3, 0.7, 5)
    reports = scan_curves(ModelSpec.classic_rotator(0.8, -0.7, 4), [H1, H2],
                          grid, IntegratorConfig())
    assert len(reports) == 2
    for rep in reports:
        assert rep.n_ok == 5
        assert [s.lam for s in rep.samples] == list(grid)
        assert rep.grid["n_points"] == 5
        assert rep.grid["lo"] == pytest.approx(0.3)
        assert rep.grid["hi"] == pytest.approx(0.7)
        assert rep.grid["refine_roots"] is False
    r1, r2 = reports[0].roots, reports[1].roots
    # F vanishes below zero_tol at the middle point: one root, centred there.
    assert len(r1) == 1 and len(r2) == 1
    assert r1[0].lam_root == pytest.approx(0.5, abs=1e-12)
    assert r1[0].bracket == pytest.approx((0.4, 0.6))
    assert not r1[0].refined
    assert r1[0].slope < 0
    assert r1[0].stable_for_positive_eps
    assert not r1[0].stable_for_negative_eps
    assert r2[0].slope > 0
    assert not r2[0].stable_for_positive_eps
    assert r2[0].stable_for_negative_eps
    lo_lam, lo_val = reports[0].endpoint_low
    hi_lam, hi_val = reports[0].endpoint_high
    assert (lo_lam, hi_lam) == (0.3, 0.7)
    assert lo_val == pytest.approx(9.9854738e-3, abs=1e-8)
    assert hi_val == pytest.approx(-9.9854738e-3, abs=1e-8)


def test_scan_refines_bracketed_root():
    grid = np.array([0.35, 0.45, 0.55, 0.65])
    rep = scan_curves(ModelSpec.classic_rotator(0.8, -0.7, 4), [H1], grid,
                      IntegratorConfig(), refine_roots=True,
                      root_tol=5e-3)[0]
    assert len(rep.roots) == 1
    root = rep.roots[0]
    assert root.refined
    assert root.bracket == pytest.approx((0.45, 0.55))
    assert root.lam_root == pytest.approx(0.5, abs=2e-3)
    assert root.slope < 0


def test_scan_curves_requires_four_units():
    with pytest.raises(DomainError):
        scan_curves(ModelSpec.classic_rotator(0.8, -0.7, 5), [H1],
                    np.array([0.4, 0.6]), IntegratorConfig())
    with pytest.raises(DomainError):
        scan_curves(ModelSpec.classic_rotator(0.8, -0.7, 4), [],
                    np.array([0.4, 0.6]), IntegratorConfig())


def test_scan_records_failed_points_without_aborting():
    # kappa^2 < 1 - omega^2: no truncated fixed point, so every cycle hunt
    # fails; the scan must record the failure per point and keep going.
    grid = np.array([0.4, 0.5, 0.6])
    reports = scan_curves(ModelSpec.classic_rotator(0.8, -0.5, 4), [H1],
                          grid, IntegratorConfig())
    assert reports[0].n_ok == 0
    assert reports[0].roots == []
    statuses = {s.status for s in reports[0].samples}
    assert statuses == {"NotConvergedError"}
    assert all(np.isnan(s.f_h).all() for s in reports[0].samples)


def test_splay_leaf_average_is_zero_for_mixed_modes():
    p = PerturbationSpec.normalized({2: 0.3, 3: -0.7}, {4: 0.4}, 0.0)
    s = f_h(_model(p, 6), splay_lambda(6, Convention.CONSECUTIVE),
            IntegratorConfig())
    assert float(np.max(np.abs(s.f_h))) < 1e-6
