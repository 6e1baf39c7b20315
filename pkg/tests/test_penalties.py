import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparseprox.errors import ActiveSetOverflowError
from sparseprox.oracles import (
    active_patterns_brute,
    project_l0_brute,
    prox_top_k_brute,
    t_k_reference,
)
from sparseprox.penalties import (
    IndicatorL0Ball,
    TopKPenalty,
    active_set_enumerate,
    exact_penalty_bound,
    project_l0_ball,
    prox_top_k_penalty,
    soft_threshold,
    t_k_value,
    top_k_norm,
    top_k_subgradient,
)

# lattice floats keep every sum exact, so equality assertions are literal
lattice = st.integers(min_value=-256, max_value=256).map(lambda k: k / 32.0)


def vectors(max_dim=8):
    return st.lists(lattice, min_size=1, max_size=max_dim).map(np.array)


def test_top_k_norm_examples():
    assert top_k_norm(np.array([3.0, -1.0, 2.0]), 2) == 5.0
    assert top_k_norm(np.array([4.0, 1.0]), 0) == 0.0
    assert top_k_norm(np.array([1.0, 1.0, 1.0]), 3) == 3.0


def test_t_k_examples():
    assert t_k_value(np.array([3.0, -1.0, 2.0]), 2) == 1.0
    assert t_k_value(np.zeros(5), 3) == 0.0
    x = np.array([2.0, 0.0, -1.0, 0.0])
    assert t_k_value(x, 2) == 0.0  # exactly K nonzeros


def test_t_k_out_of_range():
    with pytest.raises(ValueError):
        t_k_value(np.ones(3), 4)
    with pytest.raises(ValueError):
        top_k_norm(np.ones(3), -1)


def test_soft_threshold_arms():
    assert soft_threshold(2.5, 1.0) == 1.5
    assert soft_threshold(0.5, 1.0) == 0.0
    assert soft_threshold(-3.0, 1.0) == -2.0
    np.testing.assert_array_equal(
        soft_threshold(np.array([2.5, 0.5, -3.0]), 1.0), [1.5, 0.0, -2.0]
    )


def test_prox_examples():
    np.testing.assert_array_equal(
        prox_top_k_penalty(np.array([3.0, 0.5, -2.0]), 1.0, 1), [3.0, 0.0, -1.0]
    )
    y = np.array([0.3, -1.2, 2.0])
    np.testing.assert_array_equal(prox_top_k_penalty(y, 0.0, 1), y)
    np.testing.assert_array_equal(prox_top_k_penalty(y, 5.0, 3), y)


def test_prox_k0_equals_soft_threshold():
    y = np.array([2.5, 0.5, -3.0, 0.0])
    np.testing.assert_array_equal(
        prox_top_k_penalty(y, 1.0, 0), soft_threshold(y, 1.0)
    )


def test_prox_respects_exclusions():
    y = np.array([0.2, 3.0, 0.5, -2.0])
    out = prox_top_k_penalty(y, 1.0, 1, excluded=(0,))
    # index 0 untouched, K largest among the rest kept, others shrunk
    np.testing.assert_array_equal(out, [0.2, 3.0, 0.0, -1.0])


@settings(max_examples=200, deadline=None)
@given(vectors(), st.floats(0.0, 3.0), st.data())
def test_prox_matches_brute_force(y, tau, data):
    K = data.draw(st.integers(0, len(y)))
    fast = prox_top_k_penalty(y, tau, K)
    _, best_obj = prox_top_k_brute(y, tau, K)
    fast_obj = tau * t_k_reference(fast, K) + 0.5 * float(np.sum((fast - y) ** 2))
    assert fast_obj <= best_obj + 1e-12


@settings(max_examples=200, deadline=None)
@given(vectors(), st.data())
def test_t_k_zero_iff_k_sparse(x, data):
    K = data.draw(st.integers(0, len(x)))
    assert (t_k_value(x, K) == 0.0) == (np.count_nonzero(x) <= K)


def test_subgradient_examples():
    lam = 2.0
    np.testing.assert_array_equal(
        top_k_subgradient(np.array([3.0, -1.0, 2.0]), 2, scale=lam),
        [lam, 0.0, lam],
    )
    np.testing.assert_array_equal(
        top_k_subgradient(np.zeros(3), 2, policy="canonical"), np.zeros(3)
    )
    np.testing.assert_array_equal(
        top_k_subgradient(np.array([5.0, 5.0, 0.0]), 1, policy="index_order"),
        [1.0, 0.0, 0.0],
    )
    np.testing.assert_array_equal(
        top_k_subgradient(np.zeros(2), 1, policy="extreme_negative"), [-1.0, 0.0]
    )


def test_subgradient_attains_norm_under_canonical():
    rng = np.random.Generator(np.random.Philox(9))
    for _ in range(100):
        p = int(rng.integers(1, 9))
        x = rng.standard_normal(p)
        x[rng.random(p) < 0.3] = 0.0
        K = int(rng.integers(0, p + 1))
        v = top_k_subgradient(x, K)
        assert float(v @ x) == pytest.approx(top_k_norm(x, K), abs=1e-12)


def test_subgradient_inequality_500_pairs():
    # top_k_norm(y) >= top_k_norm(x) + <v, y - x> for the canonical subgradient
    rng = np.random.Generator(np.random.Philox(10))
    for _ in range(500):
        p = int(rng.integers(1, 9))
        K = int(rng.integers(0, p + 1))
        x = rng.standard_normal(p)
        x[rng.random(p) < 0.25] = 0.0
        y = rng.standard_normal(p)
        v = top_k_subgradient(x, K)
        lhs = top_k_norm(y, K)
        rhs = top_k_norm(x, K) + float(v @ (y - x))
        assert lhs >= rhs - 1e-10


def test_active_set_examples():
    pats = active_set_enumerate(np.array([3.0, 1.0, 0.5]), 1)
    assert len(pats) == 1
    np.testing.assert_array_equal(pats[0].entries, [1, 0, 0])

    pats = active_set_enumerate(np.array([2.0, 2.0, 1.0]), 1)
    assert [tuple(p.entries) for p in pats] == [(1, 0, 0), (0, 1, 0)]

    pats = active_set_enumerate(np.array([1.0, 0.0, 0.0, 0.0]), 2)
    assert len(pats) == 6
    assert all(p.entries[0] == 1 for p in pats)


def test_active_set_k0():
    pats = active_set_enumerate(np.array([1.0, -2.0]), 0)
    assert len(pats) == 1
    np.testing.assert_array_equal(pats[0].entries, [0, 0])


def test_active_set_cap_overflow():
    with pytest.raises(ActiveSetOverflowError):
        active_set_enumerate(np.zeros(20), 10, cap=100)


def test_active_set_matches_brute_force():
    rng = np.random.Generator(np.random.Philox(12))
    for _ in range(100):
        p = int(rng.integers(1, 9))
        K = int(rng.integers(0, p + 1))
        # lattice values with deliberate zeros and ties
        x = rng.integers(-4, 5, size=p) / 2.0
        fast = {tuple(int(v) for v in pat.entries) for pat in active_set_enumerate(x, K)}
        brute = active_patterns_brute(x, K)
        assert fast == brute


def test_active_set_relaxed_matches_brute_force():
    rng = np.random.Generator(np.random.Philox(13))
    for _ in range(50):
        p = int(rng.integers(1, 8))
        K = int(rng.integers(0, p + 1))
        x = rng.integers(-4, 5, size=p) / 2.0
        delta = float(rng.integers(0, 5)) / 2.0
        fast = {
            tuple(int(v) for v in pat.entries)
            for pat in active_set_enumerate(x, K, delta=delta, cap=10_000)
        }
        brute = active_patterns_brute(x, K, delta=delta)
        assert fast == brute


def test_active_set_delta_zero_attains_norm_exactly():
    rng = np.random.Generator(np.random.Philox(14))
    for _ in range(100):
        p = int(rng.integers(1, 9))
        K = int(rng.integers(0, p + 1))
        x = rng.integers(-64, 65, size=p) / 32.0
        pats = active_set_enumerate(x, K)
        assert len(pats) >= 1
        for pat in pats:
            assert float(pat.as_float() @ x) == top_k_norm(x, K)


def test_project_l0_examples():
    np.testing.assert_array_equal(
        project_l0_ball(np.array([3.0, -1.0, 2.0]), 2), [3.0, 0.0, 2.0]
    )
    z = np.array([0.1, -0.7])
    np.testing.assert_array_equal(project_l0_ball(z, 2), z)
    np.testing.assert_array_equal(project_l0_ball(np.zeros(3), 1), np.zeros(3))


@settings(max_examples=150, deadline=None)
@given(vectors(), st.data())
def test_projection_is_optimal(z, data):
    kappa = data.draw(st.integers(0, len(z)))
    fast = project_l0_ball(z, kappa)
    assert np.count_nonzero(fast) <= kappa
    _, best_d = project_l0_brute(z, kappa)
    assert float(np.sum((fast - z) ** 2)) <= best_d + 1e-12


def test_exact_penalty_bound_examples():
    b = exact_penalty_bound(0.0, 0.0, 0.0, 0.0, 0.0, margin=0.01)
    assert b.lambda1_min == 0.0 and b.lambda2_min == 0.0

    b = exact_penalty_bound(1.0, 0.0, 2.0, 1.0, 0.0, margin=0.0)
    assert b.lambda1_min == 4.0  # 1 + 2 * 1.5

    b = exact_penalty_bound(1.0, 0.0, 0.5, 1.0, 0.0, lambda1_floor=10.0, margin=0.25)
    assert b.lambda1_min == 10.0 * 1.25


def test_exact_penalty_bound_rejects_negative():
    with pytest.raises(ValueError):
        exact_penalty_bound(-1.0, 0.0, 0.0, 0.0, 0.0)


def test_top_k_penalty_object():
    pen = TopKPenalty(lam=2.0, K=1, p=3, excluded=(0,))
    x = np.array([9.0, 3.0, -1.0])
    assert pen.value(x) == 2.0 * 1.0  # smallest non-excluded magnitude
    out = pen.prox(np.array([9.0, 3.0, -1.0]), 0.5)  # tau = 1.0
    np.testing.assert_array_equal(out, [9.0, 3.0, 0.0])
    w = pen.l1_weights()
    np.testing.assert_array_equal(w, [0.0, 2.0, 2.0])
    grads, pats = pen.active_gradients(x)
    assert len(grads) == 1
    np.testing.assert_array_equal(grads[0], [0.0, 2.0, 0.0])


def test_top_k_penalty_zero_lambda():
    pen = TopKPenalty(lam=0.0, K=1, p=2)
    y = np.array([0.3, -0.4])
    np.testing.assert_array_equal(pen.prox(y, 10.0), y)
    assert pen.value(y) == 0.0


def test_indicator_ball():
    ball = IndicatorL0Ball(kappa=1, p=3)
    assert ball.value(np.array([1.0, 0.0, 0.0])) == 0.0
    assert ball.value(np.array([1.0, 2.0, 0.0])) == np.inf
    np.testing.assert_array_equal(
        ball.prox(np.array([1.0, -3.0, 2.0]), 0.7), [0.0, -3.0, 0.0]
    )
