"""Ordered phase configurations on the torus and the mean-field order parameter.

A configuration of N identical units is a point on the N-torus whose labels
run around the circle exactly once. All downstream geometry (cross ratios,
chart coordinates) assumes that strict cyclic order, so this module owns the
canonical representative and its validation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CollisionError, DomainError, NotSortableError

TWO_PI = 2.0 * np.pi

# Default floor on pairwise angular separation. Below this the cross-ratio
# partial derivatives (1/sin^2 of half-gaps) lose all double precision.
DEFAULT_SEP_MIN = 1e-9


def wrap_angle(x):
    """Map an angle (or array of angles) to the branch [-pi, pi)."""
    return np.mod(np.asarray(x, dtype=float) + np.pi, TWO_PI) - np.pi


@dataclass(frozen=True)
class PhaseState:
    """Canonical representative of an ordered phase configuration.

    Phases satisfy phi_1 in [-pi, pi) and phi_1 < phi_2 < ... < phi_N
    < phi_1 + 2*pi, i.e. the labels are lifted monotonically upward from
    the branch-normalized first phase. Use :func:`canonicalize` to build
    one from raw angles.
    """

    phases: np.ndarray
    sep_min: float = DEFAULT_SEP_MIN

    def __post_init__(self):
        arr = np.asarray(self.phases, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "phases", arr)
        _validate_canonical(arr, self.sep_min)

    @property
    def n_units(self) -> int:
        return self.phases.shape[0]

    def gaps(self) -> np.ndarray:
        """Consecutive angular gaps, including the closing gap back to phi_1."""
        d = np.diff(self.phases)
        return np.append(d, TWO_PI - (self.phases[-1] - self.phases[0]))

    def to_dict(self) -> dict:
        return {"n": self.n_units, "phases": [float(p) for p in self.phases]}

    @classmethod
    def from_dict(cls, d: dict, sep_min: float = DEFAULT_SEP_MIN) -> "PhaseState":
        phases = d["phases"]
        if int(d["n"]) != len(phases):
            raise DomainError("declared unit count does not match phase list length")
        return canonicalize(phases, sep_min=sep_min)


@dataclass(frozen=True)
class OrderParameter:
    """Mean field z = (1/N) sum exp(i phi_j); |z| <= 1."""

    z: complex

    def __post_init__(self):
        if abs(self.z) > 1.0 + 1e-12:
            raise DomainError(f"order parameter modulus {abs(self.z)} exceeds 1")

    @property
    def modulus(self) -> float:
        return abs(self.z)

    @property
    def argument(self) -> float:
        return float(np.angle(self.z))


def _validate_canonical(arr: np.ndarray, sep_min: float) -> None:
    if arr.ndim != 1 or arr.shape[0] < 4:
        raise DomainError("a phase state needs a 1-d vector of at least 4 angles")
    if not np.all(np.isfinite(arr)):
        raise DomainError("phases must be finite")
    if not (-np.pi <= arr[0] < np.pi):
        raise DomainError(f"first phase {arr[0]} outside the canonical branch [-pi, pi)")
    d = np.diff(arr)
    closing = TWO_PI - (arr[-1] - arr[0])
    if np.any(d < sep_min) or closing < sep_min:
        raise CollisionError("phases closer than sep_min or out of order")
    total = float(np.sum(d) + closing)
    if abs(total - TWO_PI) > 1e-12:
        raise DomainError(f"cyclic gaps sum to {total}, expected 2*pi")


def canonicalize(raw, sep_min: float = DEFAULT_SEP_MIN) -> PhaseState:
    """Build the canonical ordered representative from raw angles.

    Labels are preserved as given: only the branch is normalized, by
    wrapping the first phase into [-pi, pi) and lifting the rest upward
    by their cyclic gaps. Relabeling is never performed because the
    cross ratios downstream are label-dependent.

    Parameters
    ----------
    raw : array_like
        N >= 4 finite angles in radians, in cyclic order up to branch.
    sep_min : float
        Minimum allowed pairwise separation on the circle.

    Raises
    ------
    CollisionError
        If two phases coincide on the circle within sep_min.
    NotSortableError
        If the labels do not wind around the circle exactly once.
    """
    arr = np.asarray(raw, dtype=float)
    if arr.ndim != 1 or arr.shape[0] < 4:
        raise DomainError("a phase state needs a 1-d vector of at least 4 angles")
    if not np.all(np.isfinite(arr)):
        raise DomainError("phases must be finite")

    gaps = np.mod(np.roll(arr, -1) - arr, TWO_PI)
    circ_dist = np.minimum(gaps, TWO_PI - gaps)
    if np.any(circ_dist < sep_min):
        raise CollisionError(
            f"two phases within {sep_min} rad of each other (min separation "
            f"{float(np.min(circ_dist)):.3e})"
        )

    # The gap sum is 2*pi*w for an integer winding w; labels in cyclic order
    # wind exactly once.
    winding = float(np.sum(gaps)) / TWO_PI
    if round(winding) != 1:
        raise NotSortableError(
            f"labels wind {winding:.6f} times around the circle; not a cyclic "
            "permutation of an ordered tuple"
        )

    first = float(wrap_angle(arr[0]))
    lifted = first + np.concatenate(([0.0], np.cumsum(gaps[:-1])))
    return PhaseState(lifted, sep_min=sep_min)


def order_parameter(s: PhaseState) -> OrderParameter:
    """Mean field z = (1/N) sum_j exp(i phi_j)."""
    return OrderParameter(complex(np.mean(np.exp(1j * s.phases))))


def power_mean(s: PhaseState, k: int) -> complex:
    """k-th circular moment (1/N) sum_j exp(i k phi_j) for integer k >= 0."""
    if k < 0:
        raise DomainError("power_mean requires k >= 0")
    return complex(np.mean(np.exp(1j * k * s.phases)))


def splay_state(n: int, sep_min: float = DEFAULT_SEP_MIN) -> PhaseState:
    """Evenly spaced configuration phi_j = -pi + 2*pi*(j-1)/n."""
    if n < 4:
        raise DomainError("need at least 4 units")
    return PhaseState(-np.pi + TWO_PI * np.arange(n) / n, sep_min=sep_min)


def circle_distance(a, b):
    """Pointwise distance |a - b| measured on the circle."""
    return np.abs(wrap_angle(np.asarray(a, float) - np.asarray(b, float)))
