import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_l1_opt, brute_weighted_median
from smallloss.instances import regression_data
from smallloss.lewis_l1 import (
    LewisConvergenceError,
    LewisOracle,
    exact_l1_opt,
    l1_objective,
    l1_sensitivity_audit,
    l1_solve,
    lewis_weights,
    offline_l1_oracle,
    sample_count,
    vertex_opt_2d,
    weighted_median,
)


def fixed_point_gap(A, w):
    """max_i |w_i^2 - a_i^T (A^T W^-1 A)^-1 a_i| with an explicit solve (full-rank A only)."""
    gram = A.T @ np.diag(1 / w) @ A
    return float(np.max(np.abs(w ** 2 - np.einsum("ij,ij->i", A, np.linalg.solve(gram, A.T).T))))


def test_lewis_examples():
    st_ = lewis_weights(np.eye(4))
    np.testing.assert_allclose(st_.w, 1.0, atol=1e-12)
    st_ = lewis_weights(np.array([[2.0], [2.0]]))
    np.testing.assert_allclose(st_.w, [0.5, 0.5], atol=1e-12)
    assert st_.w.sum() == pytest.approx(1.0) and st_.r == 1
    A = np.random.default_rng(0).standard_normal((8, 3))
    st_ = lewis_weights(A)
    assert abs(st_.w.sum() - 3) <= 1e-8
    assert fixed_point_gap(A, st_.w) <= 1e-9
    assert st_.residual <= 1e-9


def test_lewis_errors():
    with pytest.raises(ValueError):
        lewis_weights(np.array([[1.0, 0.0], [0.0, 0.0]]))
    A = np.random.default_rng(1).standard_normal((30, 4))
    with pytest.raises(LewisConvergenceError) as info:
        lewis_weights(A, max_iter=1)
    assert info.value.w.shape == (30,)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 32), st.integers(1, 6))
def test_lewis_weight_invariants(seed, t, d):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((t, d))
    s = lewis_weights(A)
    assert np.all(s.w > 0)
    assert abs(s.w.sum() - s.r) <= 1e-8
    assert s.r == np.linalg.matrix_rank(A)
    if t >= 2:
        sub = lewis_weights(A[1:])
        assert np.all(s.w[1:] <= sub.w + 1e-8)


def test_lewis_rank_deficient():
    rng = np.random.default_rng(2)
    A = rng.standard_normal((10, 2)) @ rng.standard_normal((2, 4))
    s = lewis_weights(A)
    assert s.r == 2 and abs(s.w.sum() - 2) <= 1e-8


def test_l1_solve_examples():
    A = np.ones((3, 1))
    b = np.array([0.0, 1.0, 10.0])
    assert l1_solve(A, b)[0] == 1.0
    assert l1_solve(A, b, [1, 3, 1])[0] == 1.0
    assert weighted_median(b, [1, 1, 1]) == brute_weighted_median(b, [1, 1, 1])[0] == 1.0
    rng = np.random.default_rng(3)
    A = rng.standard_normal((12, 3))
    theta0 = rng.standard_normal(3)
    theta = l1_solve(A, A @ theta0)
    assert l1_objective(A, A @ theta0, theta) <= 1e-9
    with pytest.raises(ValueError):
        l1_solve(A, A @ theta0, np.zeros(12))


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 15))
def test_weighted_median_oracle(seed, t):
    rng = np.random.default_rng(seed)
    v = np.round(rng.standard_normal(t), 2)
    w = rng.integers(1, 4, size=t).astype(float)
    got = weighted_median(v, w)
    ref, best = brute_weighted_median(v, w)
    assert got == ref
    a = rng.uniform(0.5, 2, size=t) * rng.choice([-1, 1], size=t)
    theta = l1_solve(a[:, None], a * v, w)
    assert l1_objective(a[:, None], a * v, theta, w) <= brute_weighted_median(v, w * np.abs(a))[1] * (1 + 1e-12) + 1e-12


@pytest.mark.parametrize("d", [2, 3])
def test_l1_solve_against_vertex_enumeration(d):
    rng = np.random.default_rng(10 + d)
    for _ in range(30):
        t = int(rng.integers(d, 14))
        A = rng.standard_normal((t, d))
        b = rng.standard_normal(t)
        w = rng.uniform(0.1, 3, size=t)
        _, best = brute_l1_opt(A, b, w)
        got = l1_objective(A, b, l1_solve(A, b, w), w)
        assert got <= best * (1 + 1e-8) + 1e-12
        if d == 2:
            assert vertex_opt_2d(A, b, w)[1] == pytest.approx(best, rel=1e-10)


def test_box_constrained_solvers_agree():
    rng = np.random.default_rng(4)
    for _ in range(30):
        A, b = regression_data(20, 2, rng)
        b = b + 1.5  # push the unconstrained optimum outside the box
        th, val = vertex_opt_2d(A, b, box=1.0)
        lp = l1_solve(A, b, box=1.0)
        assert np.all(np.abs(lp) <= 1.0)
        assert l1_objective(A, b, lp) == pytest.approx(val, rel=1e-8)


def test_offline_oracle_examples():
    A = np.array([[2.0]])
    b = np.array([1.0])
    for seed in range(5):
        assert offline_l1_oracle(A, b, 0.5, seed)[0] == 0.5
    with pytest.raises(ValueError):
        offline_l1_oracle(A, b, 0.0, 0)


def test_offline_oracle_approximation_d1():
    rng = np.random.default_rng(77)
    A, b = regression_data(64, 1, rng)
    _, opt = exact_l1_opt(A, b, box=1.0)
    ref, ref_val = brute_weighted_median(b / A[:, 0], np.abs(A[:, 0]))
    assert opt == pytest.approx(ref_val, rel=1e-12)
    losses = [l1_objective(A, b, offline_l1_oracle(A, b, 0.5, s, box=1.0)) for s in range(200)]
    assert np.mean(losses) <= 1.5 * opt + 1.0


def test_generated_losses_in_range():
    rng = np.random.default_rng(5)
    for d in (1, 2, 3):
        A, b = regression_data(200, d, rng)
        for theta in rng.uniform(-1, 1, size=(50, d)):
            assert np.all(np.abs(A @ theta - b) <= 1.0)


def test_sample_count():
    assert sample_count(2, 0.5, 100, 0.5) == int(np.ceil(0.5 * 2 / 0.25 * np.log(2 * 100 / 0.5)))


def test_sensitivity_examples():
    rep = l1_sensitivity_audit(np.eye(3))
    np.testing.assert_allclose(rep.per_row, 2 / 3, atol=1e-9)
    assert rep.average == pytest.approx(2 / 3)
    rep = l1_sensitivity_audit(np.array([[1.0], [1.0]]))
    np.testing.assert_allclose(rep.per_row, 1.0, atol=1e-9)
    np.testing.assert_allclose(rep.identity, 1.0, atol=1e-9)


def test_sensitivity_random():
    rng = np.random.default_rng(6)
    for _ in range(100):
        A = rng.standard_normal((10, 3))
        rep = l1_sensitivity_audit(A, eps=0.5, T=10)
        assert np.all(np.abs(rep.per_row - rep.identity) <= 1e-6)
        assert rep.average <= 2 / 10 + 1e-12
        assert rep.monotone
        m = sample_count(3, 0.5, 10)
        assert rep.tv_bound_average <= 8 * m / (0.5 * 10) + 1e-9


def test_oracle_wrapper():
    oracle = LewisOracle(2, 10)
    assert np.array_equal(oracle.initial_decision, np.zeros(2))
    rng = np.random.default_rng(8)
    A, b = regression_data(10, 2, rng)
    prefix = [(A[i], b[i]) for i in range(10)]
    theta, val = oracle.exact_opt(prefix)
    assert val == pytest.approx(vertex_opt_2d(A, b, box=1.0)[1])
    sol = oracle.solve(prefix, 0.5, np.random.default_rng(0))
    assert np.all(np.abs(sol) <= 1.0)
