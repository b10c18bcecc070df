"""Numerical reference evolutions: dense matrix exponentials and direct ODE integration."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.linalg

from .exceptions import ConfigError, IntegrationError, NumericalError, UsageError
from .model import COUPLINGS, InteractionGenerator, LabHamiltonian, ModelParams, frame_phases
from .operators import Operator, OperatorSet, check_normalized, make_operator_set

FRAMES = ("lab", "interaction")
DEFAULT_TOL = 1e-10
DEFAULT_MAX_EVALS = 5_000_000


def _as_array(x):
    return x.mat if isinstance(x, Operator) else np.asarray(x)


def expm(h, method="pade"):
    """Matrix exponential.

    ``method="pade"`` is scaling and squaring with a Pade approximant;
    ``method="eig"`` diagonalizes Hermitian or anti-Hermitian input.
    """
    mat = _as_array(h)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise UsageError(f"expm needs a square matrix, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise NumericalError("expm input has non-finite entries")
    if method == "pade":
        out = scipy.linalg.expm(mat)
    elif method == "eig":
        scale = max(1.0, float(np.abs(mat).max()))
        if np.abs(mat - mat.conj().T).max() <= 1e-12 * scale:
            w, q = scipy.linalg.eigh(mat)
            out = (q * np.exp(w)) @ q.conj().T
        elif np.abs(mat + mat.conj().T).max() <= 1e-12 * scale:
            w, q = scipy.linalg.eigh(-1j * mat)
            out = (q * np.exp(1j * w)) @ q.conj().T
        else:
            raise UsageError("eig path needs Hermitian or anti-Hermitian input")
    else:
        raise ValueError(f"unknown expm method {method!r}")
    if not np.all(np.isfinite(out)):
        raise NumericalError("expm produced non-finite entries")
    if isinstance(h, Operator):
        return Operator(out, h.space)
    return out


def evolve_static(h, psi0, t):
    """exp(-i t h) psi0."""
    mat = _as_array(h)
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (mat.shape[0],):
        raise UsageError(f"state of shape {psi0.shape} does not match operator dim {mat.shape[0]}")
    return expm(-1j * t * mat) @ psi0


@dataclass(frozen=True)
class Trajectory:
    """States sampled on a time grid; ``states[k]`` belongs to ``times[k]``."""

    times: np.ndarray
    states: np.ndarray
    norm_drift: np.ndarray
    n_evals: int = 0


class _BudgetExceeded(Exception):
    pass


def integrate(apply_h, psi0, t_grid, tol=DEFAULT_TOL, max_evals=DEFAULT_MAX_EVALS, method="DOP853"):
    """Integrate i dpsi/dt = H(t) psi, with ``apply_h(t, psi)`` returning H(t) psi.

    The local error control uses ``rtol=tol`` and ``atol=tol/10``. The state
    is never renormalized; the norm drift is reported instead.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0:
        raise UsageError("t_grid must be a non-empty 1-d array")
    if t_grid[0] != 0 or np.any(np.diff(t_grid) <= 0):
        raise UsageError("t_grid must be strictly ascending from 0")
    psi0 = check_normalized(psi0)
    if t_grid.size == 1:
        return Trajectory(t_grid, psi0[None, :].copy(), np.zeros(1), 0)

    evals = 0

    def rhs(t, y):
        nonlocal evals
        evals += 1
        if evals > max_evals:
            raise _BudgetExceeded
        return -1j * apply_h(t, y)

    try:
        sol = scipy.integrate.solve_ivp(
            rhs, (0.0, float(t_grid[-1])), psi0, method=method,
            t_eval=t_grid, rtol=tol, atol=tol / 10,
        )
    except _BudgetExceeded:
        raise IntegrationError(
            f"step budget of {max_evals} right-hand-side evaluations exhausted "
            f"before t={t_grid[-1]} at tol={tol}"
        ) from None
    if not sol.success:
        raise IntegrationError(f"integrator failed: {sol.message}")
    states = sol.y.T.copy()
    states[0] = psi0
    drift = np.abs(np.linalg.norm(states, axis=1) - 1.0)
    if not np.all(np.isfinite(states)):
        raise IntegrationError("integrator produced non-finite states")
    return Trajectory(t_grid, states, drift, evals)


def evolve_constant(h, psi0, t_grid, tol=DEFAULT_TOL, **kwargs):
    """`integrate` with a time-independent generator."""
    mat = _as_array(h)
    return integrate(lambda t, y: mat @ y, psi0, t_grid, tol=tol, **kwargs)


def evolve_exact(p: ModelParams, psi0, t_grid, coupling="jc", frame="interaction",
                 tol=DEFAULT_TOL, ops: OperatorSet | None = None, **kwargs) -> Trajectory:
    """Integrate the full Schrodinger equation without any approximation.

    The lab frame uses H(t) with the exact chi(t); the interaction frame uses
    V^dag H V - i V^dag dV/dt with the counter-rotating terms kept.
    """
    if coupling not in COUPLINGS:
        raise ConfigError(f"coupling must be one of {COUPLINGS}", key="coupling")
    if frame not in FRAMES:
        raise ConfigError(f"frame must be one of {FRAMES}", key="frame")
    psi0 = np.asarray(psi0, dtype=complex)
    if ops is None:
        ops = make_operator_set(psi0.size // 2)
    if psi0.size != ops.dim:
        raise UsageError(f"state dim {psi0.size} does not match composite dim {ops.dim}")
    gen_cls = LabHamiltonian if frame == "lab" else InteractionGenerator
    gen = gen_cls(p, ops, coupling)
    return integrate(gen.apply, psi0, t_grid, tol=tol, **kwargs)


def frame_convert(p: ModelParams, state, t, direction, ops: OperatorSet | None = None):
    """Map between lab-frame and interaction-frame states via V(t)."""
    state = np.asarray(state, dtype=complex)
    if ops is None:
        ops = make_operator_set(state.size // 2)
    v = frame_phases(p, t, ops)
    if direction == "to_lab":
        return v * state
    if direction == "to_interaction":
        return v.conj() * state
    raise UsageError(f"direction must be 'to_lab' or 'to_interaction', got {direction!r}")
