"""Average MBQC fidelity of stabilizer resource states: the Omega operator, its
spectrum, stabilizer sampling, dense simulation and direct fidelity estimation."""

__version__ = "0.1.0"

from .errors import CapExceededError, FlowError, NoFlowError, ValidationError
from .pauli import PauliWord, QubitSet, commutes, mul, parse, weight_on
from .resource import (
    ResourceState,
    StabilizerGroup,
    cluster_1d,
    cluster_2d,
    derive_r_operators,
    derive_t_stabilizers,
    excited_state,
    load_state,
    save_state,
    verify_flow,
)
from .omega import (
    BasisMap,
    PauliSum,
    build_omega,
    build_omega_fixed,
    build_omega_recursive,
    build_omega_theta,
    omega_spectrum,
    omega_tilde_1d,
    spectral_summary,
)
from .sampler import RngStream, exact_distribution, sample_many, sample_stabilizer
from .sim import (
    DensityState,
    PureState,
    apply_noise,
    average_mbqc_fidelity,
    expectation,
    ideal_vector,
    mbqc_fidelity_at,
    parse_noise,
    state_fidelity,
)
from .estimate import (
    EstimationReport,
    check_bounds,
    estimate_mbqc_fidelity,
    estimate_state_fidelity,
    sample_count,
)

__all__ = [
    "__version__",
    "CapExceededError",
    "FlowError",
    "NoFlowError",
    "ValidationError",
    "PauliWord",
    "QubitSet",
    "commutes",
    "mul",
    "parse",
    "weight_on",
    "ResourceState",
    "StabilizerGroup",
    "cluster_1d",
    "cluster_2d",
    "derive_r_operators",
    "derive_t_stabilizers",
    "excited_state",
    "load_state",
    "save_state",
    "verify_flow",
    "BasisMap",
    "PauliSum",
    "build_omega",
    "build_omega_fixed",
    "build_omega_recursive",
    "build_omega_theta",
    "omega_spectrum",
    "omega_tilde_1d",
    "spectral_summary",
    "RngStream",
    "exact_distribution",
    "sample_many",
    "sample_stabilizer",
    "DensityState",
    "PureState",
    "apply_noise",
    "average_mbqc_fidelity",
    "expectation",
    "ideal_vector",
    "mbqc_fidelity_at",
    "parse_noise",
    "state_fidelity",
    "EstimationReport",
    "check_bounds",
    "estimate_mbqc_fidelity",
    "estimate_state_fidelity",
    "sample_count",
]
