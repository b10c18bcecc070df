"""Closed-form approximate propagator of the effective Hamiltonian.

The propagator keeps the first two factors of the Zassenhaus product,

    exp(-it(A + B)) ~ exp(-(t^2/2)[A, B]) exp(-itB) exp(-itA),

and evaluates each factor in closed form: the su(1,1) squeeze in A through
its disentangled product, the Jaynes-Cummings block B through functions of
B^2, and the commutator factor through functions of D D^dag and D^dag D.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.linalg

from .exceptions import ConsistencyError, IntegrationError
from .model import BlockOperators, DerivedParams, ModelParams, build_blocks, derive
from .operators import COMPOSITE, Operator, OperatorSet, block, qubit_tensor, split_blocks

SERIES_THRESHOLD = 1e-6
# max phase advance of the denominator per branch-tracking step
_BRANCH_STEP = 0.25


@dataclass(frozen=True)
class SqueezeCoeffs:
    """Coefficients of exp(f K+) exp(g K3) exp(h K-) and the auxiliary frequency nu."""

    f: complex
    g_coef: complex
    h: complex
    nu: complex


def _cosh_sinhc(nu, t):
    """cosh(nu t) and sinh(nu t)/nu, with a series near nu t = 0."""
    z = nu * t
    if abs(z) < SERIES_THRESHOLD:
        z2 = z * z
        return 1 + z2 / 2 + z2 * z2 / 24, t * (1 + z2 / 6 + z2 * z2 / 120)
    return cmath.cosh(z), cmath.sinh(z) / nu


def _nu(alpha, beta):
    return cmath.sqrt(complex(beta * beta - alpha * alpha / 4))


def _denominator(alpha, beta, t, nu):
    ch, shc = _cosh_sinhc(nu, t)
    return ch + 0.5j * alpha * shc, shc


def _continuous_arg(alpha, beta, t, nu):
    """Argument of the denominator, continued from 0 along [0, t]."""
    # |d/dt arg| <= |alpha| + 2|beta| since |f| < 1
    rate = abs(alpha) + 2 * abs(beta)
    steps = max(8, int(math.ceil(abs(t) * rate / _BRANCH_STEP)))
    grid = np.linspace(0.0, t, steps + 1)
    args = np.array([cmath.phase(_denominator(alpha, beta, s, nu)[0]) for s in grid])
    return float(np.unwrap(args)[-1])


def squeeze_coeffs(alpha, beta, t, nu_sign=1) -> SqueezeCoeffs:
    """Disentangling coefficients of exp(-it alpha K3 + t beta (K+ - K-)).

    ``nu_sign=-1`` evaluates with the other square-root branch; all outputs
    are even in nu, so only ``nu`` itself changes.
    """
    nu = nu_sign * _nu(alpha, beta)
    den, shc = _denominator(alpha, beta, t, nu)
    f = beta * shc / den
    log_den = complex(math.log(abs(den)), _continuous_arg(alpha, beta, t, nu))
    return SqueezeCoeffs(f=f, g_coef=-2 * log_den, h=-f, nu=nu)


def riccati_oracle(alpha, beta, t_grid, rtol=1e-12, atol=1e-14):
    """Integrate the Riccati system for (f, g, h) numerically from zero data.

    Returns three complex arrays sampled on ``t_grid``.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid[0] != 0 or np.any(np.diff(t_grid) < 0):
        raise ValueError("t_grid must be ascending and start at 0")

    def rhs(_, y):
        f, g, _h = y
        return [beta - 1j * alpha * f - beta * f * f, -1j * alpha - 2 * beta * f, -beta * np.exp(g)]

    if t_grid[-1] == 0:
        zeros = np.zeros(t_grid.size, dtype=complex)
        return zeros, zeros.copy(), zeros.copy()
    sol = scipy.integrate.solve_ivp(
        rhs, (0.0, t_grid[-1]), np.zeros(3, dtype=complex), method="DOP853",
        t_eval=t_grid, rtol=rtol, atol=atol,
    )
    if not sol.success:
        raise IntegrationError(f"Riccati integration failed: {sol.message}")
    return sol.y[0], sol.y[1], sol.y[2]


def _raising_exp(coef, cutoff):
    """exp(coef * K+) on the truncated space.

    K+ is nilpotent there, so the series terminates; entry (m + 2k, m) is the
    k-th term, built by recurrence along each band to avoid factorial overflow.
    """
    out = np.zeros((cutoff, cutoff), dtype=complex)
    m = np.arange(cutoff, dtype=float)
    band = np.ones(cutoff, dtype=complex)
    out[np.arange(cutoff), np.arange(cutoff)] = band
    for k in range(1, (cutoff + 1) // 2):
        width = cutoff - 2 * k
        src = m[:width]
        band = band[:width] * (coef / 2 / k) * np.sqrt((src + 2 * k) * (src + 2 * k - 1))
        out[np.arange(width) + 2 * k, np.arange(width)] = band
    return out


def disentangled_squeeze(sc: SqueezeCoeffs, ops: OperatorSet) -> np.ndarray:
    """Field matrix exp(f K+) exp(g K3) exp(h K-)."""
    up = _raising_exp(sc.f, ops.cutoff)
    down = _raising_exp(sc.h, ops.cutoff).T  # K- = K+^T
    diag = np.exp(sc.g_coef * ops.k3.mat.diagonal())
    return up @ (diag[:, None] * down)


def exp_A(t, d: DerivedParams, ops: OperatorSet) -> Operator:
    """exp(-itA) as the disentangled su(1,1) product, on both atom blocks."""
    sc = squeeze_coeffs(d.alpha, d.beta, t)
    field = cmath.exp(0.25j * t * d.alpha) * disentangled_squeeze(sc, ops)
    return qubit_tensor(ops.id2, Operator(field))


def _sin_over_sqrt(s, x):
    """sin(s sqrt(x)) / sqrt(x) for x >= 0, equal to s at x = 0."""
    root = np.sqrt(np.clip(x, 0.0, None))
    return s * np.sinc(s * root / np.pi)


def _cos_sqrt(s, x):
    return np.cos(s * np.sqrt(np.clip(x, 0.0, None)))


@dataclass(frozen=True)
class _JCFunctions:
    """Diagonal functions of B^2 appearing in exp(-itB).

    ``upper`` uses delta^2/4 + g^2 a a^dag, ``lower`` uses delta^2/4 + g^2 N.
    Both are diagonal arrays on the truncated space.
    """

    cos_upper: np.ndarray
    sinc_upper: np.ndarray
    cos_lower: np.ndarray
    sinc_lower: np.ndarray


def _jc_functions(t, p: ModelParams, d: DerivedParams, ops: OperatorSet) -> _JCFunctions:
    n = np.arange(ops.cutoff, dtype=float)
    # a a^dag is N + 1 except on the top level, where the hard truncation gives 0
    aad = (ops.a.mat @ ops.a_dag.mat).diagonal().real
    phi_upper = d.delta ** 2 / 4 + p.g ** 2 * aad
    phi_lower = d.delta ** 2 / 4 + p.g ** 2 * n
    return _JCFunctions(
        cos_upper=_cos_sqrt(t, phi_upper),
        sinc_upper=_sin_over_sqrt(t, phi_upper),
        cos_lower=_cos_sqrt(t, phi_lower),
        sinc_lower=_sin_over_sqrt(t, phi_lower),
    )


def exp_B(t, p: ModelParams, d: DerivedParams, ops: OperatorSet) -> Operator:
    """exp(-itB) for the rotating-frame Jaynes-Cummings block."""
    jc = _jc_functions(t, p, d, ops)
    half = 0.5j * d.delta
    b11 = np.diag(jc.cos_upper - half * jc.sinc_upper)
    b12 = -1j * p.g * jc.sinc_upper[:, None] * ops.a.mat
    b21 = -1j * p.g * jc.sinc_lower[:, None] * ops.a_dag.mat
    b22 = np.diag(jc.cos_lower + half * jc.sinc_lower)
    return block(b11, b12, b21, b22)


@dataclass(frozen=True)
class _CommFunctions:
    cos_ddag: np.ndarray
    sinc_ddag: np.ndarray
    cos_dagd: np.ndarray
    sinc_dagd: np.ndarray


def _hermitian_function_pair(mat, s):
    """cos(s sqrt(M)) and sin(s sqrt(M))/sqrt(M) for Hermitian PSD M.

    The cosine is built as I + Q (cos - 1) Q^dag so that s = 0 gives the
    identity exactly.
    """
    w, q = scipy.linalg.eigh(mat)
    w = np.clip(w, 0.0, None)
    cos = np.eye(mat.shape[0], dtype=complex) + (q * (_cos_sqrt(s, w) - 1.0)) @ q.conj().T
    sinc = (q * _sin_over_sqrt(s, w)) @ q.conj().T
    return cos, sinc


def _comm_functions(t, g, blocks: BlockOperators) -> _CommFunctions:
    s = g * t * t / 2
    D, Dd = blocks.D.mat, blocks.D_dag.mat
    c1, s1 = _hermitian_function_pair(D @ Dd, s)
    c2, s2 = _hermitian_function_pair(Dd @ D, s)
    return _CommFunctions(c1, s1, c2, s2)


def exp_comm(t, p: ModelParams, blocks: BlockOperators, verify=True) -> Operator:
    """exp(-(t^2/2)[A, B]) through functions of D D^dag and D^dag D."""
    cf = _comm_functions(t, p.g, blocks)
    D, Dd = blocks.D.mat, blocks.D_dag.mat
    out = block(cf.cos_ddag, cf.sinc_ddag @ D, -cf.sinc_dagd @ Dd, cf.cos_dagd)
    if verify:
        cutoff = blocks.D.dim
        ref = scipy.linalg.expm(-(t * t / 2) * blocks.comm_AB.mat)
        cols = _low_columns(cutoff)
        err = np.abs(out.mat[:, cols] - ref[:, cols]).max()
        if err > 1e-8:
            raise ConsistencyError(f"commutator factor deviates from expm by {err:.3e}")
    return out


def _low_columns(cutoff):
    keep = np.arange(max(1, cutoff // 4) + 1)
    return np.concatenate([keep, keep + cutoff])


def propagator(t, p: ModelParams, ops: OperatorSet, blocks: BlockOperators | None = None,
               verify=False) -> Operator:
    """Approximate propagator exp(-(t^2/2)[A,B]) exp(-itB) exp(-itA)."""
    if blocks is None:
        blocks = build_blocks(p, ops)
    d = derive(p)
    return exp_comm(t, p, blocks, verify=verify) @ exp_B(t, p, d, ops) @ exp_A(t, d, ops)


def propagator_components(t, p: ModelParams, ops: OperatorSet, blocks: BlockOperators | None = None,
                          tol=1e-10):
    """The four field-space blocks (U11, U12, U21, U22) from their explicit expressions.

    Each expression is assembled term by term and checked against the
    corresponding block of `propagator`; a mismatch raises `ConsistencyError`.
    """
    if blocks is None:
        blocks = build_blocks(p, ops)
    d = derive(p)
    g = p.g
    jc = _jc_functions(t, p, d, ops)
    cf = _comm_functions(t, g, blocks)
    a, ad = ops.a.mat, ops.a_dag.mat
    D, Dd = blocks.D.mat, blocks.D_dag.mat
    phase = cmath.exp(0.25j * t * d.alpha)
    squeeze = disentangled_squeeze(squeeze_coeffs(d.alpha, d.beta, t), ops)

    half = 0.5j * d.delta
    upper = np.diag(jc.cos_upper - half * jc.sinc_upper)
    lower = np.diag(jc.cos_lower + half * jc.sinc_lower)
    sinc_up = np.diag(jc.sinc_upper)
    sinc_lo = np.diag(jc.sinc_lower)

    u11 = cf.cos_ddag @ upper - 1j * g * cf.sinc_ddag @ D @ sinc_lo @ ad
    u12 = -1j * g * cf.cos_ddag @ sinc_up @ a + cf.sinc_ddag @ D @ lower
    u21 = -cf.sinc_dagd @ Dd @ upper - 1j * g * cf.cos_dagd @ sinc_lo @ ad
    u22 = 1j * g * cf.sinc_dagd @ Dd @ sinc_up @ a + cf.cos_dagd @ lower
    comps = tuple(Operator(phase * u @ squeeze) for u in (u11, u12, u21, u22))

    full = split_blocks(propagator(t, p, ops, blocks))
    for name, comp, ref in zip(("U11", "U12", "U21", "U22"), comps, full):
        err = np.abs(comp.mat - ref).max()
        if err > tol:
            raise ConsistencyError(f"{name} deviates from the block product by {err:.3e}")
    return comps


def is_unitary_on(u: Operator, cols, tol=1e-6):
    """Return ||U_S^dag U_S - I|| over the column subset S and whether it is within tol."""
    sub = np.asarray(u)[:, cols]
    err = float(np.abs(sub.conj().T @ sub - np.eye(len(cols))).max())
    return err, err <= tol
