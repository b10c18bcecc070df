"""Modulated-cavity photon generation detected by a two-level atom.

Closed-form approximate propagator on a truncated Fock space, with exact
numerical references to check it against.
"""
__version__ = "0.1.0"

from .exceptions import ConfigError, ConsistencyError, DCEError, IntegrationError, NumericalError, UsageError
from .model import (
    BlockOperators,
    DerivedParams,
    ModelParams,
    build_blocks,
    build_H_t,
    chi_t,
    derive,
    frame_V,
    omega_t,
)
from .observables import ObservableRecord, fidelity, measure
from .operators import Operator, OperatorSet, basis_state, commutator, make_operator_set, qubit_tensor
from .oracle import Trajectory, evolve_exact, evolve_static, expm, frame_convert
from .propagator import (
    SqueezeCoeffs,
    exp_A,
    exp_B,
    exp_comm,
    propagator,
    propagator_components,
    riccati_oracle,
    squeeze_coeffs,
)
