import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kqmolsa.distance import (
    MinimizerOptions,
    NonPDError,
    min_distance,
    params_to_mobius,
    raw_distance,
    sanitize,
    scale_optimum,
    sym_power_rep,
)
from kqmolsa.mobius import MobiusMap
from kqmolsa.synthetic import random_sl2

E = np.e


def random_hpd(rng, n, cond=10.0):
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    Q, _ = np.linalg.qr(A)
    ev = np.exp(rng.uniform(0, np.log(cond), size=n))
    return (Q * ev) @ Q.conj().T


hpd_seeds = st.integers(0, 2**31)


# --- raw distance --------------------------------------------------------------


def test_equal_matrices_zero():
    M = np.diag([1.0, 2.0, 3.0])
    assert raw_distance(M, M, 1) == pytest.approx(0.0, abs=1e-14)


def test_raw_distance_k1_closed_form():
    assert raw_distance(np.eye(3), np.diag([E, 1, 1 / E]), 1) == pytest.approx(np.sqrt(2))


def test_raw_distance_k2_closed_form():
    assert raw_distance(np.eye(5), E * np.eye(5), 2) == pytest.approx(2**-1.5 * np.sqrt(5))
    assert raw_distance(np.eye(5), E * np.eye(5), 2) == pytest.approx(0.79057, abs=1e-5)


def test_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        raw_distance(np.eye(3), np.eye(5), 1)


@settings(max_examples=40, deadline=None)
@given(seed=hpd_seeds)
def test_raw_distance_is_a_metric(seed):
    rng = np.random.default_rng(seed)
    A, B, C = (random_hpd(rng, 3) for _ in range(3))
    dab, dba = raw_distance(A, B, 1), raw_distance(B, A, 1)
    assert dab == pytest.approx(dba, rel=1e-9, abs=1e-12)
    assert dab <= raw_distance(A, C, 1) + raw_distance(C, B, 1) + 1e-9


@settings(max_examples=40, deadline=None)
@given(seed=hpd_seeds)
def test_raw_distance_congruence_invariant(seed):
    rng = np.random.default_rng(seed)
    A, B = random_hpd(rng, 3), random_hpd(rng, 3)
    G = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    assert raw_distance(G.conj().T @ A @ G, G.conj().T @ B @ G, 1) == pytest.approx(raw_distance(A, B, 1), rel=1e-6)


# --- scale ---------------------------------------------------------------------


def test_scale_of_doubled_matrix(rng):
    M = random_hpd(rng, 3)
    p = scale_optimum(M, 2 * M, 1)
    assert p == pytest.approx(-np.log(2))
    assert raw_distance(M, np.exp(p) * 2 * M, 1) == pytest.approx(0.0, abs=1e-12)


def test_scale_trivial_cases():
    assert scale_optimum(np.eye(3), np.eye(3), 1) == pytest.approx(0.0, abs=1e-15)
    assert scale_optimum(np.eye(3), np.diag([E, 1, 1 / E]), 1) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("c", [1e-3, 1.0, 1e3])
def test_scale_quotient(c, rng):
    M = random_hpd(rng, 3)
    res = min_distance(M, c * M, 1)
    assert res.distance == pytest.approx(0.0, abs=1e-8)
    assert res.scale == pytest.approx(-np.log(c), abs=1e-9)


# --- representation ------------------------------------------------------------


def test_identity_representation():
    assert np.allclose(sym_power_rep(MobiusMap.identity(), 1), np.eye(3))
    assert np.allclose(sym_power_rep(MobiusMap.identity(), 2), np.eye(5))


@pytest.mark.parametrize("t", [0.5, 2.0, 1.3 + 0.4j])
def test_diagonal_representation(t):
    rep = sym_power_rep(MobiusMap(t, 0, 0, 1 / t), 1)
    assert np.allclose(rep, np.diag([t**-2, 1, t**2]))


@settings(max_examples=40, deadline=None)
@given(seed=hpd_seeds, k=st.sampled_from([1, 2]))
def test_representation_reverses_composition(seed, k):
    rng = np.random.default_rng(seed)
    w1, w2 = random_sl2(rng), random_sl2(rng)
    lhs = sym_power_rep(w1 @ w2, k)
    assert np.allclose(lhs, sym_power_rep(w2, k) @ sym_power_rep(w1, k), rtol=1e-10, atol=1e-10 * np.abs(lhs).max())
    # squares agree in either convention
    assert np.allclose(sym_power_rep(w1 @ w1, k), sym_power_rep(w1, k) @ sym_power_rep(w1, k), atol=1e-10 * np.abs(lhs).max())


def test_representation_matches_substitution(rng):
    # oracle: evaluate (gamma z + delta)^2k s(w(z)) on sample points and fit monomials
    k = 2
    w = random_sl2(rng)
    rep = sym_power_rep(w, k)
    z = np.exp(2j * np.pi * np.arange(5) / 5) * 0.7
    V = z[:, None] ** np.arange(5)[None, :]
    for j in range(5):
        vals = (w.gamma * z + w.delta) ** (2 * k) * w(z) ** j
        assert np.allclose(np.linalg.solve(V, vals), rep[:, j])


def test_params_have_unit_determinant(rng):
    for _ in range(10):
        m = params_to_mobius(rng.normal(size=6) + np.array([2, 0, 0, 0, 0, 0]))
        assert m.det == pytest.approx(1.0)


# --- sanitize ------------------------------------------------------------------


def test_sanitize_keeps_good_matrix():
    M = np.diag([1.0, 2.0, 3.0]).astype(complex)
    H, f = sanitize(M, 1)
    assert f == 1 and np.allclose(H, M)


def test_sanitize_scales_small_matrix():
    H, f = sanitize(1e-4 * np.eye(3), 1)
    assert f == 10 and np.allclose(H, 1e-3 * np.eye(3))


def test_sanitize_negative_eigenvalue():
    with pytest.raises(NonPDError):
        sanitize(np.diag([1.0, -0.1, 2.0]), 1)


def test_sanitize_gives_up_after_ladder():
    with pytest.raises(NonPDError):
        sanitize(1e-8 * np.eye(3), 1)


# --- minimization --------------------------------------------------------------


def test_identical_matrices_align_at_identity(rng):
    M = random_hpd(rng, 3)
    res = min_distance(M, M, 1)
    assert res.distance == pytest.approx(0.0, abs=1e-8)
    th = sym_power_rep(res.mobius, 1)
    # the optimum may be any stabiliser of M; the transformed matrix equals M up to scale
    assert np.allclose(th.conj().T @ M @ th * np.exp(res.scale), M, atol=1e-4 * np.abs(M).max())


def test_orbit_members_are_close(rng):
    M = random_hpd(rng, 3, cond=20)
    for _ in range(5):
        th = sym_power_rep(random_sl2(rng), 1)
        assert min_distance(M, th.conj().T @ M @ th, 1).distance <= 1e-2


def test_minimum_never_exceeds_raw_distance(rng):
    for _ in range(5):
        A, B = random_hpd(rng, 3), random_hpd(rng, 3)
        res = min_distance(A, B, 1)
        raw_scaled = raw_distance(A, np.exp(scale_optimum(A, B, 1)) * B, 1)
        assert res.distance <= raw_scaled + 1e-12


def test_powell_option(rng):
    M = random_hpd(rng, 3)
    th = sym_power_rep(random_sl2(rng), 1)
    res = min_distance(M, th.conj().T @ M @ th, 1, MinimizerOptions(method="powell"))
    assert res.distance <= 1e-2


def test_unknown_minimizer():
    with pytest.raises(ValueError):
        MinimizerOptions(method="bfgs")


def test_seeded_runs_are_deterministic(rng):
    A, B = random_hpd(rng, 3), random_hpd(rng, 3)
    r1 = min_distance(A, B, 1, MinimizerOptions(seed=3))
    r2 = min_distance(A, B, 1, MinimizerOptions(seed=3))
    assert r1.distance == r2.distance and np.array_equal(r1.mobius_params, r2.mobius_params)
