"""Truncated Fock-space matrices for the cavity mode and the two-level atom.

Operators on the composite space are ordered atom-major: the excited-state
block comes first, then the ground-state block, each of length ``cutoff``.
A 2x2 block matrix of field operators therefore maps directly onto a dense
``(2*cutoff, 2*cutoff)`` array.
"""
from __future__ import annotations

from dataclasses import dataclass
from numbers import Number

import numpy as np
from scipy.special import gammaln

from .exceptions import ConfigError, UsageError

FIELD = "field"
COMPOSITE = "composite"

MIN_CUTOFF = 4


class Operator:
    """Dense immutable matrix tagged with the space it acts on.

    Arithmetic between operators of different spaces raises `UsageError`.
    """

    __slots__ = ("mat", "space")

    def __init__(self, mat, space=FIELD):
        if space not in (FIELD, COMPOSITE):
            raise UsageError(f"unknown operator space {space!r}")
        arr = np.array(mat, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise UsageError(f"operator matrix must be square, got shape {arr.shape}")
        if space == COMPOSITE and arr.shape[0] % 2:
            raise UsageError("composite operators need an even dimension")
        arr.setflags(write=False)
        self.mat = arr
        self.space = space

    @property
    def dim(self):
        return self.mat.shape[0]

    @property
    def cutoff(self):
        return self.dim if self.space == FIELD else self.dim // 2

    @property
    def dag(self):
        return Operator(self.mat.conj().T, self.space)

    def _check(self, other):
        if not isinstance(other, Operator):
            raise UsageError(f"cannot combine Operator with {type(other).__name__}")
        if other.space != self.space or other.dim != self.dim:
            raise UsageError(
                f"operator mismatch: {self.space}[{self.dim}] vs {other.space}[{other.dim}]"
            )

    def __add__(self, other):
        self._check(other)
        return Operator(self.mat + other.mat, self.space)

    def __sub__(self, other):
        self._check(other)
        return Operator(self.mat - other.mat, self.space)

    def __neg__(self):
        return Operator(-self.mat, self.space)

    def __mul__(self, scalar):
        if not isinstance(scalar, Number):
            return NotImplemented
        return Operator(scalar * self.mat, self.space)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        if not isinstance(scalar, Number):
            return NotImplemented
        return Operator(self.mat / scalar, self.space)

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.mat @ other.mat, self.space)
        vec = np.asarray(other)
        if vec.shape[0] != self.dim:
            raise UsageError(f"cannot apply {self.dim}-dim operator to shape {vec.shape}")
        return self.mat @ vec

    def __array__(self, dtype=None, copy=None):
        return self.mat if dtype is None else self.mat.astype(dtype)

    def __repr__(self):
        return f"Operator(space={self.space!r}, dim={self.dim})"


@dataclass(frozen=True)
class OperatorSet:
    """Ladder, number and su(1,1) operators for one truncation.

    The atom matrices are plain 2x2 arrays; combine them with field operators
    through `qubit_tensor`.
    """

    cutoff: int
    a: Operator
    a_dag: Operator
    n: Operator
    k_plus: Operator
    k_minus: Operator
    k3: Operator
    id: Operator
    sigma3: np.ndarray
    sigma_plus: np.ndarray
    sigma_minus: np.ndarray
    id2: np.ndarray

    @property
    def dim(self):
        """Dimension of the composite atom-field space."""
        return 2 * self.cutoff


def _frozen(arr):
    arr = np.array(arr, dtype=complex)
    arr.setflags(write=False)
    return arr


def make_operator_set(cutoff) -> OperatorSet:
    """Build the operator set on Fock levels ``0 .. cutoff-1``.

    Truncation is hard: ``a_dag`` annihilates the top level.

    >>> ops = make_operator_set(4)
    >>> ops.k3.mat.diagonal().real
    array([0.25, 0.75, 1.25, 1.75])
    """
    if isinstance(cutoff, bool) or not isinstance(cutoff, (int, np.integer)):
        raise ConfigError(f"cutoff must be an integer, got {cutoff!r}", key="cutoff")
    cutoff = int(cutoff)
    if cutoff < MIN_CUTOFF:
        raise ConfigError(f"cutoff must be >= {MIN_CUTOFF}, got {cutoff}", key="cutoff")

    a = np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), k=1).astype(complex)
    a_dag = a.conj().T
    n = np.diag(np.arange(cutoff, dtype=float)).astype(complex)
    ident = np.eye(cutoff, dtype=complex)
    # K+ band filled directly: one rounding per entry instead of two keeps the
    # su(1,1) relations within 1e-12 absolute up to cutoff ~128
    k_plus = np.zeros((cutoff, cutoff), dtype=complex)
    m = np.arange(2, cutoff)
    k_plus[m, m - 2] = np.sqrt(m * (m - 1.0)) / 2

    return OperatorSet(
        cutoff=cutoff,
        a=Operator(a),
        a_dag=Operator(a_dag),
        n=Operator(n),
        k_plus=Operator(k_plus),
        k_minus=Operator(k_plus.T),
        k3=Operator((n + 0.5 * ident) / 2),
        id=Operator(ident),
        sigma3=_frozen([[1, 0], [0, -1]]),
        sigma_plus=_frozen([[0, 1], [0, 0]]),
        sigma_minus=_frozen([[0, 0], [1, 0]]),
        id2=_frozen(np.eye(2)),
    )


def commutator(x: Operator, y: Operator) -> Operator:
    """Return ``x @ y - y @ x``.

    Plain 2x2 arrays are accepted too, for the atom algebra.
    """
    if isinstance(x, Operator) or isinstance(y, Operator):
        if not isinstance(x, Operator):
            raise UsageError("cannot take commutator of an array with an Operator")
        x._check(y)
        return Operator(x.mat @ y.mat - y.mat @ x.mat, x.space)
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape:
        raise UsageError(f"shape mismatch {x.shape} vs {y.shape}")
    return x @ y - y @ x


def qubit_tensor(q, f: Operator) -> Operator:
    """Tensor a 2x2 atom matrix with a field operator.

    Block ``(i, j)`` of the result is ``q[i, j] * f``.
    """
    if not isinstance(f, Operator) or f.space != FIELD:
        raise UsageError("qubit_tensor needs a field-space Operator as second factor")
    q = np.asarray(q, dtype=complex)
    if q.shape != (2, 2):
        raise UsageError(f"atom factor must be 2x2, got {q.shape}")
    return Operator(np.kron(q, f.mat), COMPOSITE)


def block(b11, b12, b21, b22) -> Operator:
    """Assemble a composite operator from four field-space blocks."""
    mats = []
    for b in (b11, b12, b21, b22):
        if isinstance(b, Operator):
            if b.space != FIELD:
                raise UsageError("blocks must be field-space operators")
            b = b.mat
        mats.append(np.asarray(b, dtype=complex))
    return Operator(np.block([[mats[0], mats[1]], [mats[2], mats[3]]]), COMPOSITE)


def split_blocks(op: Operator):
    """Inverse of `block`: return the four field-space blocks as arrays."""
    if op.space != COMPOSITE:
        raise UsageError("split_blocks needs a composite operator")
    c = op.cutoff
    m = op.mat
    return m[:c, :c], m[:c, c:], m[c:, :c], m[c:, c:]


def interior(mat, cutoff, margin=2):
    """Restrict to rows/columns with Fock index <= ``cutoff - 1 - margin``.

    Works for field-space (``cutoff``) and composite (``2*cutoff``) arrays;
    for composite ones the interior of both atom blocks is kept.
    """
    m = np.asarray(mat)
    keep = np.arange(cutoff - margin)
    if m.shape[0] == 2 * cutoff:
        keep = np.concatenate([keep, keep + cutoff])
    elif m.shape[0] != cutoff:
        raise UsageError(f"array of size {m.shape[0]} does not match cutoff {cutoff}")
    return m[np.ix_(keep, keep)]


def composite_index(atom, n, cutoff):
    """Flat index of ``|atom, n>`` with ``atom`` in {'e', 'g'}."""
    if atom not in ("e", "g"):
        raise UsageError(f"atom state must be 'e' or 'g', got {atom!r}")
    if not 0 <= n < cutoff:
        raise UsageError(f"Fock level {n} outside 0..{cutoff - 1}")
    return n if atom == "e" else cutoff + n


def fock_state(n, cutoff):
    vec = np.zeros(cutoff, dtype=complex)
    if not 0 <= n < cutoff:
        raise UsageError(f"Fock level {n} outside 0..{cutoff - 1}")
    vec[n] = 1.0
    return vec


def coherent_state(alpha, cutoff):
    """Truncated coherent state, renormalized on the retained levels."""
    if alpha == 0:
        return fock_state(0, cutoff)
    n = np.arange(cutoff)
    log_amp = n * np.log(abs(alpha)) - 0.5 * gammaln(n + 1) - abs(alpha) ** 2 / 2
    vec = np.exp(log_amp + 1j * np.angle(alpha) * n)
    return vec / np.linalg.norm(vec)


def product_state(atom, field_vec):
    """Composite state ``|atom> (x) field_vec``."""
    field_vec = np.asarray(field_vec, dtype=complex)
    zeros = np.zeros_like(field_vec)
    if atom == "e":
        return np.concatenate([field_vec, zeros])
    if atom == "g":
        return np.concatenate([zeros, field_vec])
    raise UsageError(f"atom state must be 'e' or 'g', got {atom!r}")


def basis_state(atom, n, cutoff):
    """Composite basis vector ``|atom, n>``."""
    return product_state(atom, fock_state(n, cutoff))


def check_normalized(state, tol=1e-10):
    """Return the state as a complex array, raising if its norm is not 1."""
    state = np.asarray(state, dtype=complex)
    drift = abs(np.linalg.norm(state) - 1.0)
    if drift > tol:
        raise UsageError(f"state norm deviates from 1 by {drift:.3e}")
    return state
