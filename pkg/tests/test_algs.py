import numpy as np
import pytest

from lowrank_pe.algs import (Alg1State, Alg2State, EbaState, EstimatorError, InsufficientDataError,
                             RandomSampler, SpannerRoundRobin, StrategySpec, UniformRoundRobin,
                             alg1_recommend, alg2_recommend, beta_bound, build_strategy,
                             diagnostics, eba_recommend, estimate_seed, gram_matrix, schedule_arm)
from lowrank_pe.spanner import basis_from_indices, exact_spanner


def test_uniform_round_robin():
    s = UniformRoundRobin(3)
    assert [schedule_arm(s, t) for t in range(1, 7)] == [0, 1, 2, 0, 1, 2]
    np.testing.assert_array_equal(s.arms(6), [0, 1, 2, 0, 1, 2])


def test_spanner_round_robin():
    s = SpannerRoundRobin((4, 8))  # arms 5 and 9, 1-based
    assert [schedule_arm(s, t) for t in range(1, 5)] == [4, 8, 4, 8]
    np.testing.assert_array_equal(s.arms(4), [4, 8, 4, 8])


def test_schedule_rejects_round_zero():
    with pytest.raises(ValueError):
        schedule_arm(UniformRoundRobin(2), 0)


def test_random_sampler_reproducible_and_uniform():
    s = RandomSampler(5)
    a = s.arms(100_000, np.random.default_rng(1))
    np.testing.assert_array_equal(a, s.arms(100_000, np.random.default_rng(1)))
    freq = np.bincount(a, minlength=5) / a.size
    sigma = np.sqrt(0.2 * 0.8 / a.size)
    assert np.all(np.abs(freq - 0.2) < 3 * sigma)


def test_eba_examples():
    st = EbaState(2)
    st.sums[:] = [1, 2]
    st.counts[:] = [2, 2]
    assert eba_recommend(st) == 1
    st.sums[:] = [1, 1]
    assert eba_recommend(st) == 0
    st = EbaState(3)
    for arm, r in enumerate([0.9, 0.8, -1]):
        st.observe(arm, r)
    assert eba_recommend(st) == 0
    with pytest.raises(InsufficientDataError):
        eba_recommend(EbaState(2))


def test_estimate_seed_examples():
    assert estimate_seed(np.ones((3, 1)), np.full(3, 1 / 3), 1, 0.3) == pytest.approx([0.3])
    U = np.array([[1.0, 0.0], [1.0, 1.0]])
    p = np.array([0.5, 0.5])
    np.testing.assert_allclose(gram_matrix(U, p), [[1, 0.5], [0.5, 0.5]])
    np.testing.assert_allclose(estimate_seed(U, p, 0, 1.0), [2, -2], atol=1e-14)
    v = np.array([1.0, 0.0])
    avg = sum(p[i] * estimate_seed(U, p, i, U[i] @ v) for i in range(2))
    np.testing.assert_allclose(avg, v, atol=1e-14)


def test_estimate_seed_singular():
    with pytest.raises(EstimatorError):
        estimate_seed(np.array([[1.0, 1.0], [2.0, 2.0]]), [0.5, 0.5], 0, 1.0)


def test_alg1_examples():
    st = Alg1State(np.eye(2), [0.5, 0.5])
    st.t, st.sum_U, st.sum_vhat = 1, np.eye(2), np.array([0.4, 0.1])
    assert alg1_recommend(st) == 0
    U = np.array([[1, 0], [0, 1], [0.5, 0.5]])
    st = Alg1State(U, np.full(3, 1 / 3))
    st.t, st.sum_U, st.sum_vhat = 2, 2 * U, np.array([0.8, 0.2])
    assert alg1_recommend(st) == 0
    st.sum_vhat = np.zeros(2)
    assert alg1_recommend(st) == 0
    with pytest.raises(InsufficientDataError):
        alg1_recommend(Alg1State(U, np.full(3, 1 / 3)))


def test_alg1_batch_equals_sequential():
    rng = np.random.default_rng(2)
    support = rng.uniform(-1, 1, (3, 6, 2))
    p = np.full(6, 1 / 6)
    arms, kidx = rng.integers(0, 6, 50), rng.integers(0, 3, 50)
    rewards = rng.uniform(-1, 1, 50)
    a, b = Alg1State(support, p), Alg1State(support, p)
    a.observe_batch(arms, rewards, kidx)
    for i, k, r in zip(arms, kidx, rewards):
        b.observe(support[k], int(i), float(r))
    np.testing.assert_allclose(a.sum_vhat, b.sum_vhat, atol=1e-12)
    np.testing.assert_allclose(a.sum_U, b.sum_U, atol=1e-12)
    assert a.recommend() == b.recommend()


def test_alg2_examples():
    U = np.array([[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]])
    st = Alg2State(U, basis_from_indices(U, [0, 1]))
    st.observe(0, 0.4)
    st.observe(1, 0.1)
    assert alg2_recommend(U, st) == 0
    with pytest.raises(InsufficientDataError):
        alg2_recommend(U, Alg2State(U, basis_from_indices(U, [0, 1])))
    with pytest.raises(ValueError):
        st.observe(2, 0.0)


def test_alg2_inverse_round_trip():
    rng = np.random.default_rng(3)
    U = rng.uniform(-1, 1, (8, 3))
    basis = exact_spanner(U)
    st = Alg2State(U, basis)
    w = rng.uniform(-1, 1, 3)
    lhat = basis.V @ w
    for j, arm in enumerate(basis.indices):
        st.observe(arm, lhat[j])
    np.testing.assert_allclose(st.estimated_seed(), w, atol=1e-12)


def test_alg2_square_kernel_equals_eba():
    rng = np.random.default_rng(4)
    U = rng.uniform(-1, 1, (4, 4))
    basis = exact_spanner(U)
    a2, eba = Alg2State(U, basis), EbaState(4)
    for arm, r in zip(rng.integers(0, 4, 40), rng.choice([-0.5, 0.0, 0.5], 40)):
        a2.observe(int(arm), float(r))
        eba.observe(int(arm), float(r))
        if np.all(eba.counts > 0):
            assert alg2_recommend(U, a2) == eba_recommend(eba)


def test_tie_break_independent_of_insertion_order():
    rewards = {0: 0.5, 1: 0.5, 2: 0.1}
    for order in ([0, 1, 2], [2, 1, 0], [1, 2, 0]):
        st = EbaState(3)
        for arm in order:
            st.observe(arm, rewards[arm])
        assert eba_recommend(st) == 0


def test_diagnostics_examples():
    a, lam = diagnostics(np.eye(2), [0.5, 0.5], np.eye(2))
    assert a == pytest.approx(2.0) and lam == pytest.approx(0.5)
    rows = np.array([[1.0, 0.0], [0.6, 0.8]])
    U = np.sqrt(2) * np.eye(2)
    a, lam = diagnostics(U, [0.5, 0.5], rows)
    assert lam == pytest.approx(1.0)
    assert a == pytest.approx(max(r @ s for r in rows for s in rows))


def test_alpha_bound_on_binary_rows():
    rng = np.random.default_rng(5)
    for _ in range(30):
        d = int(rng.integers(2, 5))
        U = rng.integers(0, 2, (12, d)).astype(float)
        try:
            a, lam = diagnostics(U, np.full(12, 1 / 12), U)
        except EstimatorError:
            continue
        assert a <= d / lam + 1e-9


def test_beta_bound():
    support = np.array([[[3.0, 4.0], [0.0, 1.0]]])
    assert beta_bound(support, np.array([[1.0, 0.0], [0.0, 2.0]])) == pytest.approx(10.0)


def test_build_strategy():
    U = np.array([[1.0, 0.0], [0.0, 1.0], [0.9, 0.9]])
    s = build_strategy(StrategySpec("alg2", spanner="approx", C=2.0), U[None])
    assert isinstance(s.sampler, SpannerRoundRobin)
    assert StrategySpec("alg2", spanner="approx", C=2.0).display == "alg2_approx_C2"
    with pytest.raises(ValueError):
        build_strategy(StrategySpec("alg2"), np.stack([U, U]), fixed=False)
    with pytest.raises(ValueError):
        StrategySpec("ucb")
