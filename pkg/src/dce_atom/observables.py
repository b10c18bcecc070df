"""Photon statistics, atomic excitation and fidelity of composite states."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import UsageError

LEAK_FRACTION = 0.1


@dataclass(frozen=True)
class ObservableRecord:
    t: float
    n_mean: float
    p_excited: float
    photon_dist: np.ndarray
    norm_leak: float


def _split(state, cutoff):
    state = np.asarray(state, dtype=complex)
    if state.ndim != 1 or state.size % 2:
        raise UsageError(f"composite state must have even length, got shape {state.shape}")
    if cutoff is None:
        cutoff = state.size // 2
    if state.size != 2 * cutoff:
        raise UsageError(f"state length {state.size} does not match cutoff {cutoff}")
    return state[:cutoff], state[cutoff:]


def leak_levels(cutoff):
    """Number of top Fock levels watched for truncation leakage."""
    return max(1, math.ceil(LEAK_FRACTION * cutoff))


def photon_distribution(state, cutoff=None):
    excited, ground = _split(state, cutoff)
    return np.abs(excited) ** 2 + np.abs(ground) ** 2


def measure(state, t, cutoff=None) -> ObservableRecord:
    """Observables of a composite state, with the atom traced out for photon quantities."""
    excited, _ = _split(state, cutoff)
    dist = photon_distribution(state, cutoff)
    levels = np.arange(dist.size)
    return ObservableRecord(
        t=float(t),
        n_mean=float(levels @ dist),
        p_excited=float(np.sum(np.abs(excited) ** 2)),
        photon_dist=dist,
        norm_leak=float(dist[-leak_levels(dist.size):].sum()),
    )


def fidelity(s1, s2):
    """|<s1|s2>|^2 normalized by both norms, clipped to [0, 1]."""
    s1 = np.asarray(s1, dtype=complex)
    s2 = np.asarray(s2, dtype=complex)
    if s1.shape != s2.shape:
        raise UsageError(f"state shapes differ: {s1.shape} vs {s2.shape}")
    n1 = np.vdot(s1, s1).real
    n2 = np.vdot(s2, s2).real
    if n1 == 0 or n2 == 0:
        raise UsageError("fidelity is undefined for a zero-norm state")
    value = abs(np.vdot(s1, s2)) ** 2 / (n1 * n2)
    return float(min(1.0, max(0.0, value)))


def odd_probability(dist):
    return float(np.asarray(dist)[1::2].sum())
