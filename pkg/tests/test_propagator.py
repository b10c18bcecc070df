import cmath
import itertools
import math

import numpy as np
import pytest
import scipy.linalg

from dce_atom.exceptions import ConsistencyError
from dce_atom.model import ModelParams, build_blocks, derive
from dce_atom.observables import measure, odd_probability
from dce_atom.operators import basis_state, make_operator_set, split_blocks
from dce_atom.propagator import (
    _raising_exp,
    disentangled_squeeze,
    exp_A,
    exp_B,
    exp_comm,
    is_unitary_on,
    propagator,
    propagator_components,
    riccati_oracle,
    squeeze_coeffs,
)

ALPHAS = [-2.0, -0.5, 0.0, 0.5, 2.0]
BETAS = [0.01, 0.1, 0.5]

# Riccati system integrated with DOP853 at rtol 1e-13 (independent of the closed form)
FROZEN_RICCATI = {
    (1.0, 0.1, 2.0): (0.09180712262445087 - 0.13964154683436425j,
                      -0.028325721446124583 - 1.9784054504866717j),
    (-2.0, 0.5, 2.0): (-0.06906617767204898 + 0.4902703958081339j,
                       -0.2812166158396812 + 3.4214980319522437j),
}


def test_coefficients_at_resonance():
    sc = squeeze_coeffs(0.0, 0.5, 1.0)
    assert sc.f == pytest.approx(math.tanh(0.5), abs=1e-15)
    assert sc.g_coef == pytest.approx(-2 * math.log(math.cosh(0.5)), abs=1e-15)
    assert sc.h == -sc.f


@pytest.mark.parametrize("alpha,beta", [(0.3, 0.2), (-2, 0.01), (1, 0.5), (0, 0)])
def test_coefficients_vanish_at_zero_time(alpha, beta):
    sc = squeeze_coeffs(alpha, beta, 0.0)
    assert sc.f == 0 and sc.g_coef == 0 and sc.h == 0


def test_pure_rotation_limit(ops8):
    sc = squeeze_coeffs(2.0, 0.0, 0.7)
    assert sc.f == 0 and sc.h == 0
    assert sc.g_coef == pytest.approx(-1.4j, abs=1e-15)
    # exp(g K3) must reproduce exp(-i t alpha K3)
    lhs = np.exp(sc.g_coef * ops8.k3.mat.diagonal())
    rhs = np.diag(scipy.linalg.expm(-0.7j * 2.0 * ops8.k3.mat))
    assert np.allclose(lhs, rhs, atol=1e-14)


@pytest.mark.parametrize("key", sorted(FROZEN_RICCATI))
def test_coefficients_match_frozen_riccati(key):
    alpha, beta, t = key
    f_ref, g_ref = FROZEN_RICCATI[key]
    sc = squeeze_coeffs(alpha, beta, t)
    assert abs(sc.f - f_ref) < 1e-10 and abs(sc.g_coef - g_ref) < 1e-10


@pytest.mark.parametrize("alpha,beta", list(itertools.product(ALPHAS, BETAS)))
def test_coefficients_match_riccati_integration(alpha, beta):
    grid = np.linspace(0, 2, 9)
    f, g, h = riccati_oracle(alpha, beta, grid)
    for k, t in enumerate(grid):
        sc = squeeze_coeffs(alpha, beta, t)
        assert abs(sc.f - f[k]) < 1e-8
        assert abs(sc.g_coef - g[k]) < 1e-8
        assert abs(sc.h - h[k]) < 1e-8
        assert sc.h == -sc.f


def test_riccati_resonance_and_start():
    f, g, h = riccati_oracle(0.0, 0.5, [0.0, 1.0])
    assert f[0] == 0 and g[0] == 0 and h[0] == 0
    assert abs(f[1] - math.tanh(0.5)) < 1e-8


@pytest.mark.parametrize("alpha,beta,t", [(0.5, 0.1, 1.3), (2.0, 0.5, 1.9), (1.0, 0.5, 0.8), (-3.0, 0.2, 7.0)])
def test_branch_independence(alpha, beta, t):
    a = squeeze_coeffs(alpha, beta, t)
    b = squeeze_coeffs(alpha, beta, t, nu_sign=-1)
    assert b.nu == -a.nu
    assert abs(a.f - b.f) < 1e-14 and abs(a.g_coef - b.g_coef) < 1e-14


def test_degenerate_nu_series_continuity():
    # alpha^2 = 4 beta^2 exactly, and slightly off on either side
    at = squeeze_coeffs(1.0, 0.5, 1.5)
    assert at.nu == 0
    for beta in (0.5 + 1e-9, 0.5 - 1e-9):
        near = squeeze_coeffs(1.0, beta, 1.5)
        assert abs(near.f - at.f) < 1e-8 and abs(near.g_coef - at.g_coef) < 1e-8


def test_winding_branch_over_long_time():
    # the denominator circles the origin several times; g must stay continuous
    grid = np.linspace(0, 12, 7)
    f, g, _ = riccati_oracle(2.0, 0.2, grid)
    for k, t in enumerate(grid):
        assert abs(squeeze_coeffs(2.0, 0.2, t).g_coef - g[k]) < 1e-7


def test_raising_series_matches_expm():
    ops = make_operator_set(16)
    for coef in (0.3 - 0.4j, 0.9, 0.0):
        ref = scipy.linalg.expm(coef * ops.k_plus.mat)
        assert np.abs(_raising_exp(coef, 16) - ref).max() < 1e-13


def _derived(alpha, beta):
    # parameters with the requested alpha and beta at omega0 = 3
    eta = 6.0 - alpha
    p = ModelParams(omega0=3.0, epsilon=4 * beta / eta, eta=eta, omega_atom=1.0, g=0.0)
    d = derive(p)
    assert d.alpha == pytest.approx(alpha) and d.beta == pytest.approx(beta)
    return p, d


def test_exp_A_identity_at_zero(ops8):
    _, d = _derived(0.2, 0.05)
    assert np.array_equal(exp_A(0.0, d, ops8).mat, np.eye(16))


def test_exp_A_matches_expm_low_columns():
    ops = make_operator_set(128)
    p, d = _derived(0.2, 0.05)
    ref = scipy.linalg.expm(-1.5j * build_blocks(p, ops).A.mat)
    ours = exp_A(1.5, d, ops).mat
    cols = np.r_[0:33, 128:161]
    assert np.abs(ours[:, cols] - ref[:, cols]).max() < 1e-8


@pytest.mark.parametrize("alpha,beta,t", [(a, b, t) for a in ALPHAS for b in BETAS for t in (0.25, 1.0, 2.0)])
def test_exp_A_against_converged_expm(alpha, beta, t):
    """Columns n <= 32 at cutoff 128 against a reference at cutoff 448.

    The disentangled product is exact on the retained levels, so the check is
    against a truncation-converged dense exponential.
    """
    small, big = 128, 448
    ops = make_operator_set(small)
    _, d = _derived(alpha, beta)
    field = cmath.exp(0.25j * t * d.alpha) * disentangled_squeeze(squeeze_coeffs(alpha, beta, t), ops)
    A_big = alpha / 2 * np.diag(np.arange(big)) + 1j * beta * (
        make_operator_set(big).k_plus.mat - make_operator_set(big).k_minus.mat)
    ref = scipy.linalg.expm(-1j * t * A_big)[:small, :33]
    assert np.abs(field[:, :33] - ref).max() < 1e-8


def test_exp_A_independent_of_coupling(ops8):
    p, d = _derived(0.4, 0.1)
    u1 = exp_A(0.9, derive(p), ops8).mat
    u2 = exp_A(0.9, derive(p.replace(g=0.7)), ops8).mat
    assert np.array_equal(u1, u2)


def test_exp_A_squeezed_vacuum_parity_and_photons():
    ops = make_operator_set(128)
    _, d = _derived(0.0, 0.5)
    psi = exp_A(2.0, d, ops).mat @ basis_state("g", 0, 128)
    rec = measure(psi, 2.0)
    assert odd_probability(rec.photon_dist) < 1e-12
    assert rec.n_mean == pytest.approx(math.sinh(1.0) ** 2, abs=1e-6)


def test_exp_B_cases(ops64):
    p = ModelParams(1, 0.05, 2.0, 1.3, 0.07)
    d = derive(p)
    assert np.array_equal(exp_B(0.0, p, d, ops64).mat, np.eye(128))
    p0 = p.replace(g=0.0)
    u = exp_B(1.7, p0, derive(p0), ops64).mat
    phases = np.r_[np.full(64, np.exp(-1.7j * d.delta / 2)), np.full(64, np.exp(1.7j * d.delta / 2))]
    assert np.abs(u - np.diag(phases)).max() < 1e-15


def test_exp_B_vacuum_rabi(ops64):
    p = ModelParams(1, 0.0, 2.0, 1.0, 0.3)  # delta = 0
    t = 2.2
    psi = exp_B(t, p, derive(p), ops64).mat @ basis_state("e", 0, 64)
    expected = math.cos(0.3 * t) * basis_state("e", 0, 64) - 1j * math.sin(0.3 * t) * basis_state("g", 1, 64)
    assert np.abs(psi - expected).max() < 1e-14
    ref = scipy.linalg.expm(-1j * t * build_blocks(p, ops64).B.mat) @ basis_state("e", 0, 64)
    assert np.abs(psi - ref).max() < 1e-12


def test_exp_comm_limits(ops8):
    p = ModelParams(1, 0.05, 2.0, 1.0, 0.05)
    b = build_blocks(p, ops8)
    assert np.array_equal(exp_comm(0.0, p, b).mat, np.eye(16))
    p0 = p.replace(g=0.0)
    assert np.abs(exp_comm(3.0, p0, build_blocks(p0, ops8)).mat - np.eye(16)).max() < 1e-15


def test_exp_comm_matches_expm():
    ops = make_operator_set(128)
    p = ModelParams(1, 0.05, 2.0, 1.0, 0.05)
    b = build_blocks(p, ops)
    ref = scipy.linalg.expm(-0.5 * b.comm_AB.mat)
    cols = np.r_[0:33, 128:161]
    assert np.abs(exp_comm(1.0, p, b, verify=False).mat[:, cols] - ref[:, cols]).max() < 1e-8


def test_propagator_limits(ops8):
    p = ModelParams(1, 0.05, 2.1, 1.0, 0.05)
    assert np.array_equal(propagator(0.0, p, ops8).mat, np.eye(16))
    p0 = p.replace(g=0.0)
    d = derive(p0)
    u = propagator(1.2, p0, ops8).mat
    assert np.abs(u - exp_B(1.2, p0, d, ops8).mat @ exp_A(1.2, d, ops8).mat).max() < 1e-15
    c = 8
    assert not u[:c, c:].any() and not u[c:, :c].any()


def test_propagator_third_order_error(ops64, params):
    p = params.replace(g=0.05)
    b = build_blocks(p, ops64)
    psi = basis_state("g", 0, 64)
    ts = np.logspace(-3, -1, 7)
    errs = [np.linalg.norm(propagator(t, p, ops64, b) @ psi - scipy.linalg.expm(-1j * t * b.H_hat.mat) @ psi)
            for t in ts]
    slope = np.polyfit(np.log(ts), np.log(errs), 1)[0]
    assert abs(slope - 3) < 0.3


def test_propagator_unitary_low_columns(ops64):
    p = ModelParams(1, 0.1, 2.2, 0.9, 0.1)
    err, ok = is_unitary_on(propagator(1.5, p, ops64), np.r_[0:17, 64:81])
    assert ok and err < 1e-10


@pytest.mark.parametrize("t", [0.0, 0.6, 2.5])
def test_components_match_blocks(ops64, t):
    p = ModelParams(1, 0.07, 2.05, 1.2, 0.08)
    comps = propagator_components(t, p, ops64)
    for comp, ref in zip(comps, split_blocks(propagator(t, p, ops64))):
        assert np.abs(comp.mat - ref).max() < 1e-10


def test_components_trivial_cases(ops8):
    p = ModelParams(1, 0.05, 2.0, 1.1, 0.0)
    u11, u12, u21, u22 = propagator_components(1.3, p, ops8)
    assert np.abs(u12.mat).max() == 0 and np.abs(u21.mat).max() == 0
    u11, u12, u21, u22 = propagator_components(0.0, p.replace(g=0.3), ops8)
    assert np.array_equal(u11.mat, np.eye(8)) and np.array_equal(u22.mat, np.eye(8))
    assert not u12.mat.any() and not u21.mat.any()


def test_components_flag_mismatch(ops8):
    with pytest.raises(ConsistencyError):
        propagator_components(1.0, ModelParams(1, 0.05, 2.0, 1.0, 0.1), ops8, tol=-1.0)
