"""Ensembles of identically driven phase oscillators.

Simulation of sinusoidally coupled phase units whose common-field structure
makes the flow a Moebius group action, conserved cross-ratio coordinates on
the ordered torus, per-leaf limit cycles and splay states, a truncated
self-consistent fixed point for the active rotator, and the averaged
functional that governs slow cross-ratio drift under weak perturbations.
"""

from .errors import (
    BoundaryError,
    CollisionError,
    ConfigError,
    ConvergenceError,
    DomainError,
    FrequencyBelowThresholdError,
    NoFixedPointError,
    NotConvergedError,
    NotSortableError,
    NumericalError,
    QuadratureError,
    StepFailure,
    ValidationError,
    WsrotError,
)
from .torus_state import (
    OrderParameter,
    PhaseState,
    canonicalize,
    circle_distance,
    order_parameter,
    power_mean,
    splay_state,
    wrap_angle,
)
from .mobius import (
    Convention,
    CrossRatios,
    MobiusParams,
    WsCoordinates,
    apply,
    apply_diag,
    chart,
    chart_inverse,
    compose,
    convert,
    cross_ratio,
    cross_ratios,
    inverse,
    reference_point,
    splay_lambda,
    state_from_cross_ratios,
)
from .models import (
    ModelKind,
    ModelSpec,
    PerturbationSpec,
    h_eval,
    mean_field,
    rhs,
    rhs_phases,
)
from .ws_reduced import (
    TruncatedFixedPoint,
    WsDerivative,
    WsState,
    eigenvalues,
    fixed_point,
    truncated_rhs,
    ws_rhs,
    z_series,
    z_series_splay,
)
from .orbits import (
    IntegratorConfig,
    Method,
    OrbitRecord,
    SplayReport,
    Trajectory,
    find_limit_cycle,
    integrate,
    splay_check,
)
from .averaging import (
    AveragedSample,
    Root,
    RootReport,
    ScanPoint,
    cross_ratio_gradient,
    drift_rate,
    f_h,
    f_h_at_splay,
    f_h_from_orbit,
    scan_and_root,
    scan_curves,
)

__version__ = "0.1.0"
