"""Disk-automorphism group, cross ratios, reference configurations, and the
coordinate chart that splits a configuration into (group element, leaf).

The maps G_{alpha,psi}(z) = (alpha + e^{i psi} z)/(1 + conj(alpha) e^{i psi} z)
with |alpha| < 1 form the orientation-preserving automorphisms of the unit
disk. Acting diagonally on ordered phase configurations they preserve all
cross ratios, so the N-3 cross-ratio values label group orbits (leaves) and
the pair (group element, leaf) is a global chart.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import CollisionError, DomainError, NotSortableError, NumericalError
from .torus_state import (
    DEFAULT_SEP_MIN,
    TWO_PI,
    PhaseState,
    canonicalize,
)

# Boundary margin for |alpha|: maps with |alpha| >= 1 - 1e-14 are numerically
# degenerate (all points collapse toward one boundary point).
ALPHA_MAX = 1.0 - 1e-14


def _wrap_psi(x: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    return float(np.pi - np.mod(np.pi - x, TWO_PI))


@dataclass(frozen=True)
class MobiusParams:
    """Disk automorphism G_{alpha,psi}; alpha strictly inside the disk."""

    alpha: complex
    psi: float

    def __post_init__(self):
        a = complex(self.alpha)
        if abs(a) >= ALPHA_MAX:
            raise DomainError(f"|alpha| = {abs(a)} too close to the unit circle")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "psi", _wrap_psi(float(self.psi)))

    @classmethod
    def identity(cls) -> "MobiusParams":
        return cls(0.0 + 0.0j, 0.0)

    def to_dict(self) -> dict:
        return {
            "alpha_re": self.alpha.real,
            "alpha_im": self.alpha.imag,
            "psi": self.psi,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MobiusParams":
        return cls(complex(d["alpha_re"], d["alpha_im"]), d["psi"])


class Convention(str, Enum):
    """Index convention for the N-3 cross-ratio values."""

    CANONICAL = "canonical"      # quadruples (1,2,3,k+3); values strictly decreasing
    CONSECUTIVE = "consecutive"  # quadruples (k,k+1,k+2,k+3); each value in (0,1)


@dataclass(frozen=True)
class CrossRatios:
    """N-3 conserved cross-ratio values under a declared index convention."""

    values: np.ndarray
    convention: Convention

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "convention", Convention(self.convention))
        if v.ndim != 1 or v.shape[0] < 1:
            raise DomainError("cross-ratio vector must be 1-d with at least one entry")
        if not np.all(np.isfinite(v)):
            raise DomainError("cross-ratio values must be finite")
        if np.any(v <= 0.0) or np.any(v >= 1.0):
            raise DomainError("cross-ratio values must lie strictly in (0, 1)")
        if self.convention is Convention.CANONICAL and np.any(np.diff(v) >= 0.0):
            raise DomainError("canonical cross-ratio values must be strictly decreasing")

    @property
    def n_units(self) -> int:
        return self.values.shape[0] + 3

    def to_dict(self) -> dict:
        return {
            "convention": self.convention.value,
            "values": [float(x) for x in self.values],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CrossRatios":
        return cls(np.asarray(d["values"], dtype=float), Convention(d["convention"]))


@dataclass(frozen=True)
class WsCoordinates:
    """Chart coordinates: a group element plus the canonical leaf values."""

    mobius: MobiusParams
    lam: CrossRatios

    def __post_init__(self):
        if self.lam.convention is not Convention.CANONICAL:
            raise DomainError("chart coordinates require canonical cross ratios")


def apply(g: MobiusParams, z: complex) -> complex:
    """Evaluate the automorphism at a point of the unit circle."""
    z = complex(z)
    if abs(abs(z) - 1.0) > 1e-12:
        raise DomainError(f"|z| = {abs(z)} is not on the unit circle")
    rot = np.exp(1j * g.psi) * z
    return complex((g.alpha + rot) / (1.0 + np.conj(g.alpha) * rot))


def apply_diag(g: MobiusParams, s: PhaseState) -> PhaseState:
    """Apply the automorphism to every phase; cyclic order is preserved."""
    rot = np.exp(1j * (s.phases + g.psi))
    w = (g.alpha + rot) / (1.0 + np.conj(g.alpha) * rot)
    return canonicalize(np.angle(w), sep_min=s.sep_min)


def _matrix(g: MobiusParams) -> np.ndarray:
    e = np.exp(1j * g.psi)
    return np.array([[e, g.alpha], [np.conj(g.alpha) * e, 1.0]], dtype=complex)


def _params_from_matrix(m: np.ndarray) -> MobiusParams:
    # For M = [[A,B],[C,D]] acting as z -> (Az+B)/(Cz+D): alpha = M(0) and
    # e^{i psi} = M'(0)/(1-|alpha|^2), normalized back onto the circle.
    a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    if d == 0:
        raise NumericalError("degenerate automorphism matrix")
    alpha = b / d
    if abs(alpha) >= ALPHA_MAX:
        raise NumericalError(f"recovered |alpha| = {abs(alpha)} at the disk boundary")
    der0 = (a * d - b * c) / d**2
    w = der0 / (1.0 - abs(alpha) ** 2)
    mod = abs(w)
    if mod == 0:
        raise NumericalError("vanishing derivative in automorphism extraction")
    return MobiusParams(alpha, float(np.angle(w)))


def compose(g1: MobiusParams, g2: MobiusParams) -> MobiusParams:
    """Group product: apply(compose(g1,g2), z) == apply(g1, apply(g2, z))."""
    return _params_from_matrix(_matrix(g1) @ _matrix(g2))


def inverse(g: MobiusParams) -> MobiusParams:
    """Group inverse, in closed form."""
    return MobiusParams(-g.alpha * np.exp(-1j * g.psi), -g.psi)


def _circle_diff(ta, tb):
    """exp(i ta) - exp(i tb), factored so nearby angles keep full precision."""
    return np.exp(0.5j * (ta + tb)) * 2j * np.sin(0.5 * (ta - tb))


def _quad_values(theta, p, q, r, s):
    """Cross ratio of the quadruple (p,q,r,s), 0-based, on angle arrays.

    theta may carry leading sample axes; the index axis is the last one.
    Uses the real sine quotient obtained from the factored differences: the
    unit-modulus prefactors cancel exactly, so no complex cancellation occurs.
    """
    th = np.asarray(theta, dtype=float)
    sp = np.sin(0.5 * (th[..., p] - th[..., s]))
    qr = np.sin(0.5 * (th[..., q] - th[..., r]))
    qs = np.sin(0.5 * (th[..., q] - th[..., s]))
    pr = np.sin(0.5 * (th[..., p] - th[..., r]))
    return (sp * qr) / (qs * pr)


def cross_ratio(p: int, q: int, r: int, s: int, state: PhaseState) -> float:
    """Cross ratio of four distinct unit positions, 1-based indices.

    Evaluates the complex expression
    (z_p - z_s)(z_q - z_r) / ((z_q - z_s)(z_p - z_r)) with z_j = exp(i phi_j)
    and returns its real part; for points on a circle the value is real, and
    the imaginary residue is asserted to be negligible.
    """
    n = state.n_units
    idx = (p, q, r, s)
    if len(set(idx)) != 4 or any(not (1 <= i <= n) for i in idx):
        raise IndexError(f"need four distinct indices in 1..{n}, got {idx}")
    th = state.phases
    i, j, k, l = (x - 1 for x in idx)
    num = _circle_diff(th[i], th[l]) * _circle_diff(th[j], th[k])
    den = _circle_diff(th[j], th[l]) * _circle_diff(th[i], th[k])
    val = num / den
    if abs(val.imag) > 1e-10 * max(1.0, abs(val.real)):
        raise NumericalError(f"cross ratio has imaginary residue {val.imag}")
    return float(val.real)


def cross_ratios(state: PhaseState, convention: Convention) -> CrossRatios:
    """All N-3 cross-ratio values of a state in the given convention."""
    convention = Convention(convention)
    n = state.n_units
    th = state.phases
    ks = np.arange(n - 3)
    if convention is Convention.CANONICAL:
        vals = _quad_values(th, np.zeros(n - 3, int), np.ones(n - 3, int),
                            np.full(n - 3, 2), ks + 3)
    else:
        vals = _quad_values(th, ks, ks + 1, ks + 2, ks + 3)
    return CrossRatios(vals, convention)


def splay_lambda(n: int, convention: Convention) -> CrossRatios:
    """Cross-ratio values of the evenly spaced configuration on n units."""
    if n < 4:
        raise DomainError("need at least 4 units")
    convention = Convention(convention)
    k = np.arange(1, n - 2)
    canonical = np.sin(np.pi * (k + 2) / n) / (2.0 * np.cos(np.pi / n) * np.sin(np.pi * (k + 1) / n))
    if convention is Convention.CANONICAL:
        return CrossRatios(canonical, convention)
    return CrossRatios(np.full(n - 3, canonical[0]), convention)


def reference_point(lam: CrossRatios, sep_min: float = DEFAULT_SEP_MIN) -> PhaseState:
    """Distinguished configuration on the leaf with the given canonical values.

    The first three phases are pinned at -pi, -pi + 2*pi/N, -pi + 4*pi/N and
    each later phase is the unique circle point realizing its canonical
    cross-ratio value against those three. Right inverse of
    :func:`cross_ratios` in the canonical convention.
    """
    if Convention(lam.convention) is not Convention.CANONICAL:
        raise DomainError("reference_point requires canonical cross ratios")
    n = lam.n_units
    w = np.exp(2j * np.pi / n)
    lv = lam.values
    num = w * (lv + lv * w - 1.0)
    den = -lv + (1.0 - lv) * w
    tail = np.angle(num / den)
    head = -np.pi + TWO_PI * np.arange(3) / n
    return canonicalize(np.concatenate((head, tail)), sep_min=sep_min)


def state_from_cross_ratios(cr: CrossRatios, sep_min: float = DEFAULT_SEP_MIN) -> PhaseState:
    """A configuration realizing the given cross-ratio values, either convention.

    Canonical input delegates to :func:`reference_point`. Consecutive input is
    realized constructively: the first three positions are anchored like the
    reference configuration and each next circle point is solved from its
    consecutive cross-ratio value (a linear solve per point, since the cross
    ratio is Moebius in each argument).
    """
    if Convention(cr.convention) is Convention.CANONICAL:
        return reference_point(cr, sep_min=sep_min)
    n = cr.n_units
    z = np.empty(n, dtype=complex)
    z[:3] = np.exp(1j * (-np.pi + TWO_PI * np.arange(3) / n))
    for k in range(n - 3):
        a = z[k + 1] - z[k + 2]
        b = cr.values[k] * (z[k] - z[k + 2])
        denom = a - b
        if abs(denom) < 1e-14:
            raise DomainError("consecutive cross-ratio value is degenerate here")
        z[k + 3] = (a * z[k] - b * z[k + 1]) / denom
    try:
        return canonicalize(np.angle(z), sep_min=sep_min)
    except (CollisionError, NotSortableError) as exc:
        raise DomainError(
            "consecutive cross-ratio values do not describe an ordered configuration"
        ) from exc


def convert(cr: CrossRatios, convention: Convention,
            sep_min: float = DEFAULT_SEP_MIN) -> CrossRatios:
    """Re-express cross-ratio values in the other convention.

    There is no closed-form index shuffle between the conventions; the
    conversion goes through a realizing configuration.
    """
    convention = Convention(convention)
    if Convention(cr.convention) is convention:
        return cr
    return cross_ratios(state_from_cross_ratios(cr, sep_min=sep_min), convention)


def chart(w: WsCoordinates, sep_min: float = DEFAULT_SEP_MIN) -> PhaseState:
    """Configuration reached by acting with w.mobius on w.lam's reference point."""
    return apply_diag(w.mobius, reference_point(w.lam, sep_min=sep_min))


def _three_point_matrix(a: complex, b: complex, c: complex) -> np.ndarray:
    # Matrix of the Moebius map sending (a, b, c) to (0, inf, 1).
    return np.array([[b - c, -a * (b - c)], [a - c, -b * (a - c)]], dtype=complex)


def chart_inverse(s: PhaseState) -> WsCoordinates:
    """Split a configuration into (group element, canonical leaf values).

    The group element is the unique disk automorphism carrying the first
    three reference positions of the state's leaf to the state's first three
    positions; it is built by three-point interpolation and read off via its
    value and derivative at the disk center.
    """
    lam = cross_ratios(s, Convention.CANONICAL)
    ref = reference_point(lam, sep_min=min(s.sep_min, DEFAULT_SEP_MIN))
    za = np.exp(1j * ref.phases[:3])
    zb = np.exp(1j * s.phases[:3])
    m_ref = _three_point_matrix(*za)
    m_s = _three_point_matrix(*zb)
    m_s_inv = np.array([[m_s[1, 1], -m_s[0, 1]], [-m_s[1, 0], m_s[0, 0]]], dtype=complex)
    g = _params_from_matrix(m_s_inv @ m_ref)
    return WsCoordinates(g, lam)
