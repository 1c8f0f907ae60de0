"""Reduced chart dynamics, the truncated fixed point, and the mean-field series."""

import numpy as np
import pytest

from wsrot.errors import DomainError, NoFixedPointError
from wsrot.mobius import (
    Convention,
    MobiusParams,
    WsCoordinates,
    chart,
    splay_lambda,
)
from wsrot.models import ModelSpec
from wsrot.torus_state import order_parameter
from wsrot.ws_reduced import (
    FREQ_MIN,
    eigenvalues,
    fixed_point,
    truncated_rhs,
    ws_rhs,
    z_series,
    z_series_splay,
)

# High-precision reference for (omega, kappa) = (0.8, -0.7), frozen from an
# independent 50-digit root solve of the modulus equation.
REF = {
    "x": 0.75917214380935716,
    "r": 0.8713048512486069,
    "beta": 0.9148450245231203,
    "alpha0": 0.5314205006665499 + 0.6904812780088033j,
    "omega_rot": 0.10951872199119664,
    "eig": (-0.10790996165561328, -0.5920900383443867),
}


def test_fixed_point_frozen_reference():
    fp = fixed_point(0.8, -0.7)
    assert fp.x == pytest.approx(REF["x"], abs=1e-12)
    assert fp.r == pytest.approx(REF["r"], abs=1e-12)
    assert fp.beta == pytest.approx(REF["beta"], abs=1e-12)
    assert fp.alpha0 == pytest.approx(REF["alpha0"], abs=1e-12)
    assert fp.omega_rot == pytest.approx(REF["omega_rot"], abs=1e-12)
    got = sorted(e.real for e in fp.eigenvalues)
    np.testing.assert_allclose(got, sorted(REF["eig"]), rtol=0, atol=1e-12)


def test_fixed_point_is_a_zero_of_truncated_rhs():
    fp = fixed_point(0.8, -0.7)
    m = ModelSpec.classic_rotator(0.8, -0.7, 4)
    assert abs(truncated_rhs(m, fp.alpha0)) < 1e-13


def test_rotation_rate_equals_chart_angle_rate():
    # The rotation frequency is the chart-angle rate at the fixed point,
    # 2 Re(f(alpha) alpha) + g; for the rotator that is omega - Im(alpha).
    fp = fixed_point(0.8, -0.7)
    m = ModelSpec.classic_rotator(0.8, -0.7, 4)
    f, g = m.fields()
    rate = 2.0 * (complex(f(fp.alpha0)) * fp.alpha0).real + float(np.real(g(fp.alpha0)))
    assert fp.omega_rot == pytest.approx(rate, abs=1e-14)
    assert fp.omega_rot == pytest.approx(0.8 - fp.alpha0.imag, abs=1e-14)


def test_bisection_redo_matches_production():
    # Plain interval bisection on the modulus cubic against the production
    # refined root at a few regimes.
    from wsrot.ws_reduced import _cubic
    for om, ka in ((0.8, -0.7), (0.5, 0.9), (0.95, -0.99)):
        val, _ = _cubic(om, ka)
        lo, hi = 0.0, 1.0
        flo = val(lo)
        assert flo * val(hi) < 0
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if val(mid) * flo > 0:
                lo = mid
            else:
                hi = mid
        assert fixed_point(om, ka).x == pytest.approx(0.5 * (lo + hi), abs=1e-12)


def test_eigenvalues_match_fd_jacobian():
    om, ka = 0.8, -0.7
    fp = fixed_point(om, ka)
    m = ModelSpec.classic_rotator(om, ka, 4)
    h = 1e-6
    def field(re, im):
        v = truncated_rhs(m, complex(re, im))
        return np.array([v.real, v.imag])
    jac = np.empty((2, 2))
    a0 = fp.alpha0
    for j, (dre, dim) in enumerate(((h, 0.0), (0.0, h))):
        jac[:, j] = (field(a0.real + dre, a0.imag + dim)
                     - field(a0.real - dre, a0.imag - dim)) / (2 * h)
    got = sorted(np.linalg.eigvals(jac).real)
    want = sorted(complex(e).real for e in eigenvalues(om, ka, fp.x))
    np.testing.assert_allclose(got, want, rtol=0, atol=1e-6)


def test_no_fixed_point_below_threshold():
    with pytest.raises(NoFixedPointError) as exc:
        fixed_point(0.8, -0.5)
    msg = str(exc.value)
    assert "kappa^2" in msg and "1-omega^2" in msg


def test_fixed_point_domain_checks():
    with pytest.raises(DomainError):
        fixed_point(1.2, -0.9)
    assert FREQ_MIN == 1e-6


def test_z_series_matches_direct_order_parameter(rng):
    # Dual route: the power-series mean field versus the order parameter of
    # the chart image, on the splay leaf at moderate modulus.
    for n in (6, 8, 10):
        lam = splay_lambda(n, Convention.CANONICAL)
        for _ in range(8):
            a = rng.uniform(0.05, 0.6) * np.exp(1j * rng.uniform(-np.pi, np.pi))
            psi = rng.uniform(-np.pi, np.pi)
            z_direct = order_parameter(chart(WsCoordinates(MobiusParams(a, psi), lam))).z
            assert abs(z_series(a, psi, lam) - z_direct) < 1e-9
            assert abs(z_series_splay(a, psi, n) - z_direct) < 1e-9


def test_z_series_splay_frozen_regression():
    z = z_series_splay(0.5 * np.exp(0.4j), -0.9, 8)
    assert z == pytest.approx(0.46544639329749743 + 0.19154437912793437j, abs=1e-12)


def test_z_series_splay_leading_deviation_scales_like_r_to_n_minus_1():
    # |Z - alpha| on the splay leaf is dominated by the first surviving
    # series term, so halving is expected per extra unit at r = 1/2.
    psis = np.linspace(-np.pi, np.pi, 64, endpoint=False)
    sups = []
    for n in (7, 8, 9):
        a = 0.5 * np.exp(0.3j)
        sups.append(max(abs(z_series_splay(a, p, n) - a) for p in psis))
    for lo, hi in zip(sups[1:], sups[:-1]):
        assert 0.4 < lo / hi < 0.6


def test_ws_rhs_leaf_values_never_move():
    m = ModelSpec.classic_rotator(0.8, -0.7, 6)
    lam = splay_lambda(6, Convention.CANONICAL)
    w = WsCoordinates(MobiusParams(0.3 + 0.2j, 0.5), lam)
    d = ws_rhs(m, w)
    np.testing.assert_allclose(d.lambda_dot, 0.0, rtol=0, atol=1e-15)


def test_ws_rhs_matches_finite_difference_of_chart_flow():
    # Transport the chart point by the reduced field for a short step and
    # compare with integrating the full ensemble; both must track to O(dt^2).
    from wsrot.models import rhs
    m = ModelSpec.classic_rotator(0.8, -0.7, 6)
    lam = splay_lambda(6, Convention.CANONICAL)
    w = WsCoordinates(MobiusParams(0.25 - 0.35j, 0.8), lam)
    s = chart(w)
    d = ws_rhs(m, w)
    dt = 1e-6
    moved = WsCoordinates(
        MobiusParams(w.mobius.alpha + dt * d.alpha_dot,
                     w.mobius.psi + dt * d.psi_dot), lam)
    pred = np.array(chart(moved).phases)
    direct = np.array(s.phases) + dt * rhs(m, s)
    np.testing.assert_allclose(pred, direct, rtol=0, atol=5e-11)
