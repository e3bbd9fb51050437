import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from actsel.clustering import Clustering, kmeans
from actsel.errors import BudgetExceedsPool, ConfigError, DimMismatch, EmptyRemaining, LengthMismatch
from actsel.selectors import (
    STRATEGIES,
    FisherState,
    JsState,
    RandomState,
    aux_source,
    base_strategy,
    cluster_distribution,
    cluster_distributions,
    entropy,
    fisher_gain,
    fisher_select_next,
    js_divergence,
    js_select_next,
    make_selector,
    random_select_next,
    select_batch,
    sherman_morrison_update,
)


def fixed_clustering(centers, n=1):
    centers = np.asarray(centers, dtype=float)
    return Clustering(centers, np.zeros(n, dtype=int), 0.0, 0)


# --- distributions and measures -----------------------------------------------------


def test_equidistant_is_uniform():
    centers = [[1, 0], [-1, 0], [0, 1], [0, -1]]
    np.testing.assert_allclose(cluster_distribution([0, 0], centers), [0.25] * 4, atol=1e-15)


def test_softmax_two_clusters():
    # distances (0, 1): 1/(1+e^-1), e^-1/(1+e^-1)
    p = cluster_distribution([0.0], [[0.0], [1.0]])
    np.testing.assert_allclose(p, [0.7310585786300049, 0.2689414213699951], atol=1e-12)
    assert p[0] == pytest.approx(0.7311, abs=1e-4)


def test_softmax_stable_for_large_distances():
    p = cluster_distribution([0.0], [[0.0], [1000.0]])
    assert np.isfinite(p).all()
    np.testing.assert_allclose(p, [1.0, 0.0], atol=1e-300)


def test_distribution_dim_mismatch():
    with pytest.raises(DimMismatch):
        cluster_distribution([0.0, 1.0], [[0.0]])


def test_row_wise_matches_single():
    rng = np.random.default_rng(0)
    X, C = rng.normal(size=(20, 3)), rng.normal(size=(5, 3))
    P = cluster_distributions(X, C)
    for x, p in zip(X, P):
        np.testing.assert_allclose(p, cluster_distribution(x, C), rtol=1e-12)
        np.testing.assert_allclose(p, oracles.softmax_neg_dist(x, C), rtol=1e-12)


def test_entropy_values():
    assert entropy([0.25] * 4) == pytest.approx(math.log(4), abs=1e-12)
    assert entropy([1.0, 0.0, 0.0]) == 0.0
    assert entropy([0.5, 0.5]) == pytest.approx(0.6931, abs=1e-4)


def test_js_values():
    assert js_divergence([0.3, 0.7], [0.3, 0.7]) == 0.0
    assert js_divergence([1, 0], [0, 1]) == pytest.approx(math.log(2), abs=1e-12)
    # 0.5 * (0.1438 + 0.2877)
    assert js_divergence([0.5, 0.5], [1, 0]) == pytest.approx(0.2158, abs=1e-4)
    assert js_divergence([0.5, 0.5], [1, 0]) == pytest.approx(oracles.js([0.5, 0.5], [1, 0]), abs=1e-15)
    with pytest.raises(LengthMismatch):
        js_divergence([1.0], [0.5, 0.5])


simplex = st.lists(st.floats(0, 1), min_size=2, max_size=8).filter(lambda v: sum(v) > 1e-6).map(
    lambda v: [x / sum(v) for x in v]
)


@settings(max_examples=300, deadline=None)
@given(simplex)
def test_entropy_bounds(p):
    h = entropy(p)
    assert -1e-12 <= h <= math.log(len(p)) + 1e-12


@settings(max_examples=300, deadline=None)
@given(st.integers(2, 8).flatmap(lambda k: st.tuples(*[st.lists(st.floats(0, 1), min_size=k, max_size=k)] * 2)))
def test_js_bounds_and_symmetry(pair):
    p, q = (np.asarray(v) + 1e-9 for v in pair)
    p, q = p / p.sum(), q / q.sum()
    a, b = js_divergence(p, q), js_divergence(q, p)
    assert a == b
    assert 0.0 <= a <= math.log(2)


# --- JS selection ---------------------------------------------------------------------


def test_js_first_pick_is_equidistant_candidate():
    centers = [[0.0, 0.0], [4.0, 0.0]]
    X = np.array([[0.5, 0.0], [2.0, 0.0], [4.0, 1.0]])
    # brute-force scores: only the middle point has the uniform (max-entropy) distribution
    scores = [oracles.entropy(oracles.softmax_neg_dist(x, centers)) for x in X]
    assert int(np.argmax(scores)) == 1
    state = JsState(cluster_distributions(X, centers))
    assert js_select_next(state, {0, 1, 2}) == 1
    assert state.selected == [1]


def test_js_lambda_zero_is_entropy_ranking():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(30, 4))
    clustering = kmeans(X, 4, seed=0)
    picks = select_batch("js", X, clustering, budget=10, lam=0.0)
    P = cluster_distributions(X, clustering.centers)
    h = [entropy(p) for p in P]
    expected = sorted(range(30), key=lambda i: (-h[i], i))[:10]
    assert picks == expected


def test_js_identical_rows_lowest_index():
    X = np.array([[1.0, 1.0], [5.0, 5.0], [1.0, 1.0]])
    state = JsState(cluster_distributions(X, [[0.0, 0.0], [2.0, 2.0]]))
    assert js_select_next(state, [2, 0, 1]) == 0


def test_js_running_mean_matches_recomputation():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(600, 3))
    state = JsState(cluster_distributions(X, rng.normal(size=(6, 3))), lam=2.0)
    remaining = set(range(600))
    for _ in range(300):
        remaining.discard(js_select_next(state, remaining))
        np.testing.assert_allclose(state.mean_selected, state.distributions[state.selected].mean(0), atol=1e-9)
    assert len(set(state.selected)) == 300


def test_js_empty_remaining():
    with pytest.raises(EmptyRemaining):
        js_select_next(JsState(np.ones((2, 2)) / 2), set())


@pytest.mark.parametrize("seed", range(10))
def test_js_greedy_oracle(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(40, 3)) * 2
    clustering = kmeans(X, 5, seed=seed)
    lam = float(rng.uniform(0, 3))
    got = select_batch("js", X, clustering, budget=12, lam=lam)
    assert got == oracles.greedy_js(X, clustering.centers, 12, lam)


def test_js_toy_six_points():
    X = np.array([[0, 0], [0.3, 0], [0, 0.4], [6, 6], [6.2, 6], [3, 3]], dtype=float)
    clustering = kmeans(X, 2, seed=0)
    got = select_batch("js", X, clustering, budget=3, lam=1.0)
    assert got == oracles.greedy_js(X, clustering.centers, 3, 1.0)
    assert got[0] == 5  # the midpoint


# --- Fisher ----------------------------------------------------------------------------


def test_fisher_gain_values():
    assert fisher_gain([0.0, 0.0, 0.0], FisherState.initial(3)) == 0.0
    x = np.array([1.0, 1.0, 1.0])  # |x|^2 = 3
    assert fisher_gain(x, FisherState.initial(3)) == pytest.approx(math.log(4), abs=1e-12)
    st_ = FisherState(np.diag([2.0, 0.5]))
    assert fisher_gain([1.0, 1.0], st_) == pytest.approx(1.2528, abs=1e-4)
    assert fisher_gain([1.0, 1.0], st_) == pytest.approx(math.log(3.5), abs=1e-12)
    with pytest.raises(DimMismatch):
        fisher_gain([1.0], st_)


def test_sherman_morrison_examples():
    s = FisherState(np.diag([2.0, 0.5]))
    assert np.array_equal(sherman_morrison_update(s, [0.0, 0.0]).lambda_inv, s.lambda_inv)
    out = sherman_morrison_update(FisherState.initial(2), [1.0, 0.0])
    np.testing.assert_allclose(out.lambda_inv, np.diag([0.5, 1.0]), atol=1e-15)
    with pytest.raises(DimMismatch):
        sherman_morrison_update(s, [1.0])


def test_sherman_morrison_twenty_updates():
    rng = np.random.default_rng(11)
    xs = rng.normal(size=(20, 4))
    s = FisherState.initial(4)
    for x in xs:
        s = sherman_morrison_update(s, x)
    np.testing.assert_allclose(s.lambda_inv, oracles.direct_inverse(xs, 4), atol=1e-8, rtol=0)
    assert np.array_equal(s.lambda_inv, s.lambda_inv.T)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.integers(0, 40), st.integers(0, 2**32 - 1))
def test_positive_definite_preserved(d, steps, seed):
    rng = np.random.default_rng(seed)
    s = FisherState.initial(d)
    for _ in range(steps):
        s = sherman_morrison_update(s, rng.normal(size=d) * rng.uniform(0, 10))
    for _ in range(10):
        v = rng.normal(size=d)
        assert v @ s.lambda_inv @ v > 0
    assert np.abs(s.lambda_inv - s.lambda_inv.T).max() <= 1e-9


def test_fisher_first_pick_largest_norm():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(25, 4))
    s = FisherState.initial(4)
    assert fisher_select_next(s, X, range(25)) == int(np.argmax((X**2).sum(1)))


def test_fisher_duplicate_gain_drops():
    a = np.array([1.0, 2.0, 0.5])
    X = np.vstack([a, a, [0.1, 0.0, 0.0]])
    s = FisherState.initial(3)
    n2 = a @ a
    assert fisher_gain(a, s) == pytest.approx(math.log1p(n2))
    assert fisher_select_next(s, X, {0, 1, 2}) == 0
    assert fisher_gain(a, s) == pytest.approx(math.log1p(n2 / (1 + n2)), rel=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_fisher_greedy_oracle(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(50, 8))
    assert select_batch("fisher", X, budget=10) == oracles.greedy_fisher(X, 10)


# --- random / batch ----------------------------------------------------------------------


def test_random_singleton_and_determinism():
    assert random_select_next(None, {7}, np.random.default_rng(0)) == 7
    a = select_batch("random_uniform", np.zeros((50, 2)), budget=20, seed=9)
    b = select_batch("random_uniform", np.zeros((50, 2)), budget=20, seed=9)
    assert a == b and len(set(a)) == 20


def test_random_removes_from_set():
    rem = {1, 2, 3}
    st_ = RandomState()
    i = random_select_next(st_, rem, np.random.default_rng(0))
    assert i not in rem and st_.selected == [i]


def test_random_uniformity():
    rng = np.random.default_rng(1234)
    draws = 100_000
    counts = np.zeros(4)
    for _ in range(draws):
        counts[random_select_next(None, [0, 1, 2, 3], rng)] += 1
    sigma = math.sqrt(draws * 0.25 * 0.75)
    assert (np.abs(counts - draws / 4) <= 4 * sigma).all()


def test_random_empty():
    with pytest.raises(EmptyRemaining):
        random_select_next(None, [], np.random.default_rng(0))


@pytest.mark.parametrize("strategy", ["js", "fisher", "random_uniform"])
def test_batch_exhaustion_and_null(strategy):
    X = np.random.default_rng(0).normal(size=(12, 3))
    c = kmeans(X, 3)
    perm = select_batch(strategy, X, c, budget=12)
    assert sorted(perm) == list(range(12))
    assert select_batch(strategy, X, c, budget=0) == []
    with pytest.raises(BudgetExceedsPool):
        select_batch(strategy, X, c, budget=13)


def test_js_requires_clustering():
    with pytest.raises(ConfigError):
        make_selector("js", np.zeros((3, 2)))


def test_strategy_names():
    assert STRATEGIES == ("random_uniform", "js", "fisher", "metadata_js", "metadata_fisher", "user_js", "user_fisher")
    assert [base_strategy(s) for s in STRATEGIES] == ["random_uniform", "js", "fisher", "js", "fisher", "js", "fisher"]
    assert aux_source("metadata_js") == "metadata" and aux_source("user_fisher") == "user"
    assert aux_source("js") is None
    with pytest.raises(ConfigError):
        base_strategy("JS")
