"""Right-hand sides for the oscillator ensembles.

The unperturbed flows all share one structure: every unit feels the same
Z-dependent common fields, dphi_j/dt = f(Z) e^{i phi_j} + g(Z) + conj(f(Z))
e^{-i phi_j} with Z the mean field. The classic active rotator is the member
f(Z) = (i/2)(1 + kappa conj(Z)), g(Z) = omega, and the generalized rotator
adds a unit-norm Fourier perturbation eps * h(phi_j) that breaks the
structure for eps != 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .errors import DomainError
from .torus_state import PhaseState

FieldFn = Callable[[complex], complex]


@dataclass(frozen=True)
class PerturbationSpec:
    """Sparse Fourier perturbation h(phi) = sum a_n sin(n phi) + b_n cos(n phi).

    Modes start at n = 2. When epsilon != 0 the coefficient vector must have
    unit L2 norm, sqrt(sum a_n^2 + b_n^2) = 1, within 1e-12; use
    :meth:`normalized` to build one from unnormalized coefficients.
    """

    a: dict[int, float] = field(default_factory=dict)
    b: dict[int, float] = field(default_factory=dict)
    epsilon: float = 0.0

    def __post_init__(self):
        a = {int(n): float(c) for n, c in self.a.items() if c != 0.0}
        b = {int(n): float(c) for n, c in self.b.items() if c != 0.0}
        for n in (*a, *b):
            if n < 2:
                raise DomainError(f"perturbation modes start at n=2, got n={n}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "epsilon", float(self.epsilon))
        if self.epsilon != 0.0:
            norm = self.norm()
            if abs(norm - 1.0) > 1e-12:
                raise DomainError(f"perturbation norm {norm} must be 1 when epsilon != 0")

    def norm(self) -> float:
        return math.sqrt(
            sum(c * c for c in self.a.values()) + sum(c * c for c in self.b.values())
        )

    @classmethod
    def normalized(cls, a: dict[int, float], b: dict[int, float],
                   epsilon: float) -> "PerturbationSpec":
        """Scale the coefficients to unit norm, then attach epsilon."""
        raw = cls(a, b, 0.0)
        n = raw.norm()
        if n == 0.0:
            raise DomainError("cannot normalize a zero perturbation")
        return cls({k: v / n for k, v in raw.a.items()},
                   {k: v / n for k, v in raw.b.items()}, epsilon)

    def to_dict(self) -> dict:
        return {
            "eps": self.epsilon,
            "a": {str(n): c for n, c in sorted(self.a.items())},
            "b": {str(n): c for n, c in sorted(self.b.items())},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PerturbationSpec":
        return cls({int(n): c for n, c in d.get("a", {}).items()},
                   {int(n): c for n, c in d.get("b", {}).items()},
                   d.get("eps", 0.0))


def h_eval(p: PerturbationSpec, phi):
    """Evaluate the Fourier sum at a scalar angle or an array of angles."""
    phi = np.asarray(phi, dtype=float)
    out = np.zeros_like(phi)
    for n, c in p.a.items():
        out += c * np.sin(n * phi)
    for n, c in p.b.items():
        out += c * np.cos(n * phi)
    return out if out.ndim else float(out)


class ModelKind(str, Enum):
    GENERAL_WS = "general_ws"
    CLASSIC_ROTATOR = "classic_rotator"
    GENERALIZED_ROTATOR = "generalized_rotator"


@dataclass(frozen=True)
class ModelSpec:
    """An ensemble ODE: a model kind, its parameters, and the unit count."""

    kind: ModelKind
    n_units: int
    omega: float | None = None
    kappa: float | None = None
    perturbation: PerturbationSpec | None = None
    f: FieldFn | None = None
    g: FieldFn | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        if self.n_units < 4:
            raise DomainError("need at least 4 units")
        if self.kind is ModelKind.GENERAL_WS:
            if self.f is None or self.g is None:
                raise DomainError("general_ws needs field callbacks f(Z), g(Z)")
        else:
            if self.omega is None or self.kappa is None:
                raise DomainError("rotator kinds need omega and kappa")
        if self.kind is ModelKind.GENERALIZED_ROTATOR and self.perturbation is None:
            raise DomainError("generalized_rotator needs a perturbation")

    @classmethod
    def classic_rotator(cls, omega: float, kappa: float, n_units: int) -> "ModelSpec":
        return cls(ModelKind.CLASSIC_ROTATOR, n_units, omega=omega, kappa=kappa)

    @classmethod
    def generalized_rotator(cls, omega: float, kappa: float, n_units: int,
                            perturbation: PerturbationSpec) -> "ModelSpec":
        return cls(ModelKind.GENERALIZED_ROTATOR, n_units, omega=omega,
                   kappa=kappa, perturbation=perturbation)

    @classmethod
    def general_ws(cls, f: FieldFn, g: FieldFn, n_units: int) -> "ModelSpec":
        return cls(ModelKind.GENERAL_WS, n_units, f=f, g=g)

    @property
    def epsilon(self) -> float:
        return self.perturbation.epsilon if self.perturbation is not None else 0.0

    def unperturbed(self) -> "ModelSpec":
        """The same model with the perturbation switched off."""
        if self.kind is ModelKind.GENERALIZED_ROTATOR:
            return ModelSpec.classic_rotator(self.omega, self.kappa, self.n_units)
        return self

    def fields(self) -> tuple[FieldFn, FieldFn]:
        """Common-field callbacks (f, g) of the unperturbed part."""
        if self.kind is ModelKind.GENERAL_WS:
            return self.f, self.g
        kappa = self.kappa
        omega = self.omega
        return (lambda z: 0.5j * (1.0 + kappa * np.conj(z)), lambda z: omega)

    def validate_regime(self) -> None:
        """Opt-in check that parameters sit in the attracting-cycle regime.

        Requires |omega| < 1 (excitable single unit) and
        kappa < -sqrt(1 - omega^2) (the coupling strength below which the
        truncated dynamics has an attracting fixed point).
        """
        if self.kind is ModelKind.GENERAL_WS:
            raise DomainError("regime validation applies to rotator kinds only")
        if abs(self.omega) >= 1.0:
            raise DomainError(f"|omega| = {abs(self.omega)} must be < 1")
        if self.kappa >= -math.sqrt(1.0 - self.omega**2):
            raise DomainError(
                f"kappa = {self.kappa} must be < -sqrt(1-omega^2) = "
                f"{-math.sqrt(1.0 - self.omega**2):.6f}"
            )

    def to_dict(self) -> dict:
        if self.kind is ModelKind.GENERAL_WS:
            raise DomainError("general_ws carries callbacks and has no JSON form")
        d = {"kind": self.kind.value, "omega": self.omega, "kappa": self.kappa,
             "n": self.n_units}
        if self.perturbation is not None:
            d["perturbation"] = self.perturbation.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        kind = ModelKind(d["kind"])
        if kind is ModelKind.GENERAL_WS:
            raise DomainError("general_ws cannot be built from JSON")
        pert = None
        if "perturbation" in d and d["perturbation"] is not None:
            pert = PerturbationSpec.from_dict(d["perturbation"])
        # A perturbation block with nonzero eps makes the model the
        # generalized rotator regardless of the declared rotator kind.
        if pert is not None and pert.epsilon != 0.0:
            kind = ModelKind.GENERALIZED_ROTATOR
        elif kind is ModelKind.GENERALIZED_ROTATOR and pert is None:
            raise DomainError("generalized_rotator config needs a perturbation block")
        if kind is ModelKind.GENERALIZED_ROTATOR:
            return cls.generalized_rotator(d["omega"], d["kappa"], d["n"], pert)
        return cls.classic_rotator(d["omega"], d["kappa"], d["n"])


def mean_field(phases: np.ndarray) -> complex:
    return complex(np.mean(np.exp(1j * phases)))


def rhs(m: ModelSpec, s: PhaseState, t: float = 0.0) -> np.ndarray:
    """Time derivative of every phase. Autonomous; t kept for integrators."""
    return rhs_phases(m, s.phases, t)


def rhs_phases(m: ModelSpec, phases: np.ndarray, t: float = 0.0) -> np.ndarray:
    """rhs on a bare angle vector, the hot path used inside integrators."""
    z = mean_field(phases)
    if m.kind is ModelKind.GENERAL_WS:
        fz = m.f(z)
        out = 2.0 * (fz * np.exp(1j * phases)).real + float(np.real(m.g(z)))
    else:
        # Sinusoidal-coupling sum, with the coupling term contracted through
        # the mean field: (kappa/N) sum_k sin(phi_k - phi_j) = kappa Im(Z e^{-i phi_j}).
        out = (m.omega - np.sin(phases)
               + m.kappa * (z * np.exp(-1j * phases)).imag)
        if m.kind is ModelKind.GENERALIZED_ROTATOR and m.perturbation.epsilon != 0.0:
            out = out + m.perturbation.epsilon * h_eval(m.perturbation, phases)
    return out


def rhs_field_form(m: ModelSpec, s: PhaseState, t: float = 0.0) -> np.ndarray:
    """Second route to the unperturbed rhs, through the common fields f and g.

    For rotator kinds this must agree with the sinusoidal sum in
    :func:`rhs` to 1e-12; the perturbation term is added on top identically.
    """
    f, g = m.fields()
    z = mean_field(s.phases)
    out = 2.0 * (f(z) * np.exp(1j * s.phases)).real + float(np.real(g(z)))
    if m.kind is ModelKind.GENERALIZED_ROTATOR and m.perturbation.epsilon != 0.0:
        out = out + m.perturbation.epsilon * h_eval(m.perturbation, s.phases)
    return out
