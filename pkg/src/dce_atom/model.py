"""Hamiltonians of the modulated cavity plus two-level atom.

Units: hbar = 1, all frequencies are angular.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, ConsistencyError
from .operators import (
    COMPOSITE,
    FIELD,
    Operator,
    OperatorSet,
    block,
    commutator,
    interior,
    qubit_tensor,
)

COUPLINGS = ("jc", "rabi")


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of the cavity-atom system.

    omega0 : mean cavity frequency
    epsilon : relative modulation depth of the cavity frequency
    eta : modulation frequency
    omega_atom : atomic transition frequency
    g : atom-field coupling
    """

    omega0: float
    epsilon: float
    eta: float
    omega_atom: float
    g: float

    def __post_init__(self):
        for name in ("omega0", "epsilon", "eta", "omega_atom", "g"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float, np.floating, np.integer)):
                raise ConfigError(f"{name} must be a real number, got {value!r}", key=name)
            if not math.isfinite(value):
                raise ConfigError(f"{name} must be finite, got {value!r}", key=name)
            object.__setattr__(self, name, float(value))
        if self.omega0 <= 0:
            raise ConfigError(f"omega0 must be > 0, got {self.omega0}", key="omega0")
        if not 0 <= self.epsilon < 1:
            raise ConfigError(f"epsilon must satisfy 0 <= epsilon < 1, got {self.epsilon}", key="epsilon")
        if self.eta <= 0:
            raise ConfigError(f"eta must be > 0, got {self.eta}", key="eta")
        if self.g < 0:
            raise ConfigError(f"g must be >= 0, got {self.g}", key="g")

    def replace(self, **changes):
        fields = {k: getattr(self, k) for k in ("omega0", "epsilon", "eta", "omega_atom", "g")}
        fields.update(changes)
        return ModelParams(**fields)


@dataclass(frozen=True)
class DerivedParams:
    """Combinations entering the time-independent effective Hamiltonian.

    alpha is twice the cavity detuning from half the modulation frequency,
    beta the effective squeezing rate, delta the atomic detuning.
    """

    alpha: float
    beta: float
    delta: float


def derive(p: ModelParams) -> DerivedParams:
    return DerivedParams(
        alpha=2.0 * (p.omega0 - p.eta / 2),
        beta=p.epsilon * p.eta / 4,
        delta=p.omega_atom - p.eta / 2,
    )


def omega_t(p: ModelParams, t):
    """Modulated cavity frequency omega0 * (1 + epsilon * sin(eta t))."""
    return p.omega0 * (1.0 + p.epsilon * np.sin(p.eta * t))


def chi_t(p: ModelParams, t, approximate=False):
    """Squeezing strength, a quarter of the log-derivative of omega(t).

    With ``approximate`` the denominator ``1 + epsilon sin(eta t)`` is
    replaced by 1.
    """
    num = p.epsilon * p.eta * np.cos(p.eta * t) / 4
    if approximate:
        return num
    return num / (1.0 + p.epsilon * np.sin(p.eta * t))


def _check_coupling(coupling):
    if coupling not in COUPLINGS:
        raise ConfigError(f"coupling must be one of {COUPLINGS}, got {coupling!r}", key="coupling")


def squeeze_generator(ops: OperatorSet) -> Operator:
    """Composite ``1_2 (x) i(a_dag^2 - a^2)``, Hermitian."""
    return qubit_tensor(ops.id2, 1j * (2 * ops.k_plus - 2 * ops.k_minus))


def coupling_term(ops: OperatorSet, coupling="jc") -> Operator:
    """Atom-field interaction divided by g."""
    _check_coupling(coupling)
    term = qubit_tensor(ops.sigma_plus, ops.a) + qubit_tensor(ops.sigma_minus, ops.a_dag)
    if coupling == "rabi":
        term = term + qubit_tensor(ops.sigma_plus, ops.a_dag) + qubit_tensor(ops.sigma_minus, ops.a)
    return term


class LabHamiltonian:
    """Time-dependent lab-frame Hamiltonian split into fixed pieces.

    ``H(t) = omega(t) N + chi(t) S + H_static`` with S the squeeze generator;
    keeping the pieces apart makes repeated evaluation cheap.
    """

    def __init__(self, p: ModelParams, ops: OperatorSet, coupling="jc", approximate_chi=False):
        _check_coupling(coupling)
        self.p = p
        self.ops = ops
        self.coupling = coupling
        self.approximate_chi = approximate_chi
        self.number = qubit_tensor(ops.id2, ops.n).mat.diagonal().real.copy()
        self.squeeze = squeeze_generator(ops).mat
        self.static = (
            qubit_tensor(ops.sigma3, ops.id) * (p.omega_atom / 2) + coupling_term(ops, coupling) * p.g
        ).mat

    def matrix(self, t):
        w = omega_t(self.p, t)
        chi = chi_t(self.p, t, approximate=self.approximate_chi)
        return np.diag(w * self.number) + chi * self.squeeze + self.static

    def apply(self, t, psi):
        w = omega_t(self.p, t)
        chi = chi_t(self.p, t, approximate=self.approximate_chi)
        return w * self.number * psi + chi * (self.squeeze @ psi) + self.static @ psi


def build_H_t(p: ModelParams, t, ops: OperatorSet, coupling="jc") -> Operator:
    """Lab-frame Hamiltonian at time ``t`` with the exact chi(t)."""
    return Operator(LabHamiltonian(p, ops, coupling).matrix(t), COMPOSITE)


def frame_generator(p: ModelParams, ops: OperatorSet) -> np.ndarray:
    """Diagonal of G with V(t) = exp(-i t G).

    G = (eta/4) sigma3 (x) 1 + (eta/2) 1_2 (x) N.
    """
    n = np.arange(ops.cutoff, dtype=float)
    return np.concatenate([p.eta / 4 + p.eta / 2 * n, -p.eta / 4 + p.eta / 2 * n])


def frame_phases(p: ModelParams, t, ops: OperatorSet) -> np.ndarray:
    """Diagonal of V(t)."""
    return np.exp(-1j * t * frame_generator(p, ops))


def frame_V(p: ModelParams, t, ops: OperatorSet) -> Operator:
    """Rotating-frame unitary V(t), diagonal in the Fock basis."""
    return Operator(np.diag(frame_phases(p, t, ops)), COMPOSITE)


class InteractionGenerator:
    """Transformed generator V^dag H V - i V^dag dV/dt, no RWA applied.

    dV/dt = -i G V analytically, so the frame term is just ``-G``.
    """

    def __init__(self, p: ModelParams, ops: OperatorSet, coupling="jc", approximate_chi=False):
        self.lab = LabHamiltonian(p, ops, coupling, approximate_chi)
        self.gen = frame_generator(p, ops)

    def matrix(self, t):
        v = np.exp(-1j * t * self.gen)
        return v.conj()[:, None] * self.lab.matrix(t) * v[None, :] - np.diag(self.gen)

    def apply(self, t, psi):
        v = np.exp(-1j * t * self.gen)
        return v.conj() * self.lab.apply(t, v * psi) - self.gen * psi


@dataclass(frozen=True)
class BlockOperators:
    """Operators of the A/B split of the effective Hamiltonian.

    ``H_hat = A + B``; A acts on the field only, B is the Jaynes-Cummings
    part in the rotating frame. ``comm_AB`` is the closed-form [A, B].
    """

    A: Operator
    B: Operator
    comm_AB: Operator
    D: Operator
    D_dag: Operator
    H_hat: Operator


def field_A(d: DerivedParams, ops: OperatorSet) -> Operator:
    """Field part of A: (alpha/2) N + i beta (K+ - K-)."""
    return ops.n * (d.alpha / 2) + (ops.k_plus - ops.k_minus) * (1j * d.beta)


def build_blocks(p: ModelParams, ops: OperatorSet, check=True) -> BlockOperators:
    d = derive(p)
    A = qubit_tensor(ops.id2, field_A(d, ops))
    B = qubit_tensor(ops.sigma3, ops.id) * (d.delta / 2) + coupling_term(ops, "jc") * p.g
    D = ops.a * (d.alpha / 2) + ops.a_dag * (1j * d.beta)
    D_dag = D.dag
    zero = np.zeros((ops.cutoff, ops.cutoff))
    comm = block(zero, -D, D_dag, zero) * p.g
    if check:
        direct = commutator(A, B)
        err = np.abs(interior(direct.mat - comm.mat, ops.cutoff)).max()
        if err > 1e-10:
            raise ConsistencyError(f"closed-form [A,B] deviates from direct commutator by {err:.3e}")
    return BlockOperators(A=A, B=B, comm_AB=comm, D=D, D_dag=D_dag, H_hat=A + B)


def rwa_residual(p: ModelParams, ops: OperatorSet, coupling="jc", samples=64):
    """Max-abs deviation of the one-period average of the transformed generator from H_hat.

    Uses the approximate chi(t). The rectangle rule on a uniform periodic grid
    integrates the retained harmonics exactly, so the residual is pure
    rounding when the rotating-wave step is consistent.
    """
    gen = InteractionGenerator(p, ops, coupling, approximate_chi=True)
    period = 2 * math.pi / p.eta
    times = period * np.arange(samples) / samples
    avg = sum(gen.matrix(t) for t in times) / samples
    h_hat = build_blocks(p, ops, check=False).H_hat.mat
    return float(np.abs(avg - h_hat).max())
