"""Simulation toolkit for genuine secret-sharing (GSS) quantum states.

Submodules: ``qmath`` (labelled dense linear algebra), ``states``
(constructors), ``infotheory`` (entropies and Holevo information),
``protocols`` (verifier, rounds, attacks, reduction, rates),
``entanglement`` (negativity, REE bounds, certificates) and ``cli``.
"""

__version__ = "0.1.0"

from .config import DEFAULT_TOLERANCES, Tolerances
from .exceptions import (
    ConfigError,
    DecompositionUnavailableError,
    DimensionMismatchError,
    GssError,
    InvalidStateError,
    LayoutError,
    NotGssError,
    NotHermitianError,
    NotSeparableError,
    NotUnitaryError,
    StateFileError,
)
from .qmath import QuantumState, Role, Subsystem, SystemLayout, LocalOperator, OutcomeDistribution
from .states import (
    GssSpec,
    PrivateStateSpec,
    example1_network,
    example1_wiring,
    apply_w_wiring,
    example2_orthogonal,
    example2_orthogonal_spec,
    example2_werner,
    ghz_spec,
    ghz_state,
    gss_from_spec,
    local_twist_spec,
    player_decomposition,
    private_network,
    private_state,
    random_chain_spec,
    random_gss_spec,
    upsilon1,
    upsilon2,
)
from .infotheory import holevo_information, mutual_information, relative_entropy, von_neumann_entropy
from .protocols import (
    ReductionPlan,
    Verdict,
    VerificationReport,
    check_condition_i,
    coalition_attack,
    devetak_winter_rate,
    reduce_gss,
    simulate_round,
    simulate_rounds,
    verify_gss,
)
from .entanglement import (
    BipartitionSpec,
    BoundReport,
    Direction,
    SeparableDecomposition,
    irreducibility_certificate,
    is_ppt,
    log_negativity,
    ree_upper_bound,
    theorem5_bound_check,
)


__all__ = [
    "__version__",
    "ConfigError",
    "DecompositionUnavailableError",
    "DimensionMismatchError",
    "GssError",
    "InvalidStateError",
    "LayoutError",
    "NotGssError",
    "NotHermitianError",
    "NotSeparableError",
    "NotUnitaryError",
    "StateFileError",
    "GssSpec",
    "PrivateStateSpec",
    "example1_network",
    "example1_wiring",
    "apply_w_wiring",
    "example2_orthogonal",
    "example2_orthogonal_spec",
    "example2_werner",
    "ghz_spec",
    "ghz_state",
    "gss_from_spec",
    "local_twist_spec",
    "player_decomposition",
    "private_network",
    "private_state",
    "random_chain_spec",
    "random_gss_spec",
    "upsilon1",
    "upsilon2",
    "ReductionPlan",
    "Verdict",
    "VerificationReport",
    "check_condition_i",
    "coalition_attack",
    "devetak_winter_rate",
    "reduce_gss",
    "simulate_round",
    "simulate_rounds",
    "verify_gss",
    "BipartitionSpec",
    "BoundReport",
    "Direction",
    "SeparableDecomposition",
    "irreducibility_certificate",
    "is_ppt",
    "log_negativity",
    "ree_upper_bound",
    "theorem5_bound_check",
    "DEFAULT_TOLERANCES",
    "Tolerances",
    "QuantumState",
    "Role",
    "Subsystem",
    "SystemLayout",
    "LocalOperator",
    "OutcomeDistribution",
    "holevo_information",
    "mutual_information",
    "relative_entropy",
    "von_neumann_entropy",
]
