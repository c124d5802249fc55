"""Secret-key rates, attack analysis and security thresholds for continuous-variable
QKD through a symmetric untrusted relay."""

from .attacks import (
    ATTACK_KINDS,
    AttackClass,
    AttackParams,
    NoisePair,
    classify,
    classify_plane,
    is_separable,
    named_attack,
    noise_params,
    validate,
)
from .errors import InvalidParameterError, NumericFailureError, SolverError
from .gaussian import (
    condition_on_heterodyne,
    entropy_h,
    epr_cm,
    symplectic_spectrum,
    two_mode_attack_cm,
    von_neumann_entropy,
)
from .rates import (
    RateBreakdown,
    RateConfig,
    bell_condition_blocks,
    bob_conditional_cm,
    holevo_information,
    key_rate,
    minimize_rate_grid,
    mutual_information,
    post_relay_cm,
    rate_collective_closed,
    rate_min_closed,
)
from .simulation import SimConfig, empirical_conditional_cm, empirical_mutual_information, simulate
from .thresholds import (
    distance_from_tau,
    optimal_modulation,
    tau_from_distance,
    threshold_curve,
    threshold_omega,
)

__version__ = "0.1.0"
