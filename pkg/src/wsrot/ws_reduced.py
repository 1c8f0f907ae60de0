"""Reduced dynamics in chart coordinates (alpha, psi, lambda).

On each leaf the unperturbed flow moves only the group element: alpha and psi
evolve under the common fields evaluated at the mean field Z(alpha, psi,
lambda), and the cross-ratio values are constants of motion. Near full
synchrony of the mean field (|alpha| close to 1 on the evenly spaced leaf)
Z differs from alpha only at order |alpha|^{N-1}, which motivates the
truncated closed system in alpha alone; its fixed point, rotation frequency,
and eigenvalues are computed here.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BoundaryError,
    ConvergenceError,
    DomainError,
    FrequencyBelowThresholdError,
    NoFixedPointError,
    NumericalError,
)
from .mobius import Convention, CrossRatios, WsCoordinates, reference_point
from .models import ModelSpec

# Rotation frequencies below this are treated as the degenerate
# fixed-point-continuum case; period-based machinery refuses them.
FREQ_MIN = 1e-6

WsState = WsCoordinates


@dataclass(frozen=True)
class WsDerivative:
    """Time derivative of chart coordinates; the leaf values never move."""

    alpha_dot: complex
    psi_dot: float
    lambda_dot: np.ndarray


@dataclass(frozen=True)
class TruncatedFixedPoint:
    """Fixed point of the truncated closed alpha-equation and its data."""

    x: float
    r: float
    beta: float
    alpha0: complex
    omega_rot: float
    eigenvalues: tuple[complex, complex]

    def to_dict(self) -> dict:
        return {
            "x": self.x,
            "r": self.r,
            "beta": self.beta,
            "alpha0_re": self.alpha0.real,
            "alpha0_im": self.alpha0.imag,
            "omega_rot": self.omega_rot,
            "eig": [
                {"re": e.real, "im": e.imag} for e in self.eigenvalues
            ],
        }


def z_series(alpha: complex, psi: float, lam: CrossRatios,
             tol: float = 1e-12) -> complex:
    """Mean field of the configuration at chart coordinates (alpha, psi, lam).

    Evaluates Z = alpha + (1-|alpha|^2) e^{i psi} sum_{k>=1}
    (-conj(alpha) e^{i psi})^{k-1} <e^{ik Theta(lam)}>, truncating once the
    a-priori term bound (1-|alpha|^2)|alpha|^{k-1} drops below tol.
    """
    alpha = complex(alpha)
    a = abs(alpha)
    if a >= 1.0:
        raise DomainError(f"|alpha| = {a} must be < 1")
    scale = 1.0 - a * a
    if a == 0.0:
        n_terms = 1
    elif tol >= scale:
        n_terms = 1
    else:
        n_terms = int(math.ceil(math.log(tol / scale) / math.log(a))) + 1
        if n_terms > 1_000_000:
            raise ConvergenceError(
                f"series needs {n_terms} terms at |alpha| = {a}; tolerance "
                f"{tol} unreachable"
            )
    theta = reference_point(lam).phases
    k = np.arange(1, n_terms + 1)
    means = np.exp(1j * np.outer(k, theta)).mean(axis=1)
    q = -np.conj(alpha) * np.exp(1j * psi)
    powers = q ** np.arange(n_terms)
    return complex(alpha + scale * np.exp(1j * psi) * np.dot(powers, means))


def z_series_splay(alpha: complex, psi: float, n: int) -> complex:
    """Closed form of the mean field on the evenly spaced leaf.

    The circular moments of the evenly spaced configuration vanish except at
    multiples of n, where they equal (-1)^k; the series then sums to
    Z = alpha - (1-|alpha|^2) conj(alpha)^{n-1} e^{i n psi}
    / (1 - conj(alpha)^n e^{i n psi}) exactly. Used as an independent check
    on :func:`z_series`.
    """
    alpha = complex(alpha)
    a = abs(alpha)
    if a >= 1.0:
        raise DomainError(f"|alpha| = {a} must be < 1")
    if a == 0.0:
        return alpha
    u = np.conj(alpha) ** n * np.exp(1j * n * psi)
    term = np.conj(alpha) ** (n - 1) * np.exp(1j * n * psi)
    return complex(alpha - (1.0 - a * a) * term / (1.0 - u))


def ws_rhs(m: ModelSpec, w: WsState, tol: float = 1e-12) -> WsDerivative:
    """Chart-coordinate vector field of the unperturbed flow.

    alpha' = i (f Z-fields...) evaluated at Z = z_series(w); the leaf values
    are exact constants of motion, so their derivative is identically zero.
    Perturbed models are integrated in phase coordinates instead.
    """
    if m.epsilon != 0.0:
        raise DomainError("ws_rhs handles the unperturbed flow only (epsilon = 0)")
    f, g = m.fields()
    z = z_series(w.mobius.alpha, w.mobius.psi, w.lam, tol=tol)
    fz = complex(f(z))
    gz = float(np.real(g(z)))
    alpha = w.mobius.alpha
    alpha_dot = 1j * (fz * alpha * alpha + gz * alpha + np.conj(fz))
    psi_dot = 2.0 * (fz * alpha).real + gz
    return WsDerivative(complex(alpha_dot), float(psi_dot),
                        np.zeros(w.lam.values.shape[0]))


def truncated_rhs(m: ModelSpec, alpha: complex) -> complex:
    """Closed alpha-equation obtained by replacing the mean field with alpha.

    alpha' = -(1/2)(1 + kappa conj(alpha)) alpha^2 + i omega alpha
    + (1/2)(1 + kappa alpha).
    """
    if m.omega is None or m.kappa is None:
        raise DomainError("truncated dynamics needs a rotator model")
    alpha = complex(alpha)
    return complex(
        -0.5 * (1.0 + m.kappa * np.conj(alpha)) * alpha * alpha
        + 1j * m.omega * alpha
        + 0.5 * (1.0 + m.kappa * alpha)
    )


def _cubic(omega: float, kappa: float):
    k2 = kappa * kappa
    c3, c2, c1, c0 = k2, 2.0 * k2 - 1.0, k2 + 4.0 * omega * omega - 2.0, -1.0

    def val(x):
        return ((c3 * x + c2) * x + c1) * x + c0

    def der(x):
        return (3.0 * c3 * x + 2.0 * c2) * x + c1

    return val, der


def fixed_point(omega: float, kappa: float, *,
                require_rotation: bool = False) -> TruncatedFixedPoint:
    """Fixed point of the truncated alpha-equation, via the cubic in x = r^2.

    Exists iff kappa^2 > 1 - omega^2; found by bisection on (0,1) (the sign
    change is guaranteed) and polished by Newton steps to residual < 1e-13.

    Parameters
    ----------
    require_rotation : bool
        When True, reject parameter sets whose rotation frequency is below
        the degeneracy threshold (the configuration-space orbit would not
        rotate, so no period exists).
    """
    if omega * omega >= 1.0:
        raise DomainError(f"omega^2 = {omega * omega} must be < 1")
    gap = kappa * kappa - (1.0 - omega * omega)
    if abs(gap) <= 1e-12:
        raise BoundaryError(
            f"kappa^2 = {kappa * kappa} sits on the existence boundary 1-omega^2"
        )
    if gap < 0.0:
        raise NoFixedPointError(
            f"kappa^2 = {kappa * kappa} below threshold 1-omega^2 = "
            f"{1.0 - omega * omega}"
        )
    val, der = _cubic(omega, kappa)
    lo, hi = 0.0, 1.0
    # val(0) = -1 < 0 and val(1) = 4(kappa^2 + omega^2 - 1) > 0 here.
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if val(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    for _ in range(10):
        fx = val(x)
        if abs(fx) < 1e-15:
            break
        step = fx / der(x)
        x_new = x - step
        if not (0.0 < x_new < 1.0):
            break
        x = x_new
    if abs(val(x)) >= 1e-13:
        raise ConvergenceError(f"cubic residual {val(x)} not below 1e-13")

    r = math.sqrt(x)
    cos_b = -kappa * r
    sin_b = 2.0 * omega * r / (1.0 + x)
    if abs(cos_b * cos_b + sin_b * sin_b - 1.0) > 1e-10:
        raise NumericalError("fixed-point angle components fail the unit-circle identity")
    beta = math.atan2(sin_b, cos_b)
    alpha0 = r * cmath.exp(1j * beta)
    omega_rot = omega * (1.0 - x) / (1.0 + x)
    if require_rotation and abs(omega_rot) < FREQ_MIN:
        raise FrequencyBelowThresholdError(
            f"rotation frequency {omega_rot} below {FREQ_MIN}; orbit degenerates "
            "into a continuum of fixed points"
        )
    return TruncatedFixedPoint(
        x=x, r=r, beta=beta, alpha0=alpha0, omega_rot=omega_rot,
        eigenvalues=eigenvalues(omega, kappa, x),
    )


def eigenvalues(omega: float, kappa: float, x: float) -> tuple[complex, complex]:
    """Linearization eigenvalues of the truncated dynamics at its fixed point.

    lambda_pm = kappa/2 +- sqrt(kappa^2 x^2/4 - omega^2 ((1-x)/(1+x))^2);
    their real parts share the sign of kappa.
    """
    if not (0.0 < x < 1.0):
        raise DomainError(f"x = {x} must lie in (0, 1)")
    radicand = complex(
        kappa * kappa * x * x / 4.0
        - omega * omega * ((1.0 - x) / (1.0 + x)) ** 2
    )
    root = cmath.sqrt(radicand)
    return (complex(kappa / 2.0 + root), complex(kappa / 2.0 - root))
