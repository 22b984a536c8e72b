import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from membandit.adversaries import Bernoulli
from membandit.core import RngStream, play
from membandit.flat import (
    Exp3PState,
    Exp3SState,
    Exp3State,
    FlatPolicy,
    default_params,
    draw_index,
    exp3_default_gamma,
    exp3p_default_params,
    exp3s_default_params,
    make_state,
)
from membandit.harness.oracles import weak_regret


def _state(n, gamma, weights):
    s = Exp3State(n, gamma)
    s.weights = np.array(weights, dtype=float)
    return s


def test_probabilities_examples():
    np.testing.assert_allclose(_state(4, 0.1, [1, 1, 1, 1]).probabilities(), [0.25] * 4)
    np.testing.assert_allclose(_state(3, 1e-12, [2, 1, 1]).probabilities(), [0.5, 0.25, 0.25])
    np.testing.assert_allclose(
        _state(3, 0.2, [2, 1, 1]).probabilities(), [0.4666666666666667, 0.26666666666666666] + [0.26666666666666666]
    )


def test_exp3_update_example():
    s = Exp3State(4, 0.1)
    s.update(0, 1.0)
    assert s.weights[0] == pytest.approx(1.1051709180756477, rel=1e-12)
    np.testing.assert_array_equal(s.weights[1:], 1.0)


def test_exp3_zero_reward_leaves_state():
    s = _state(3, 0.3, [2.0, 0.5, 1.0])
    before = s.weights.copy()
    s.update(1, 0.0)
    np.testing.assert_array_equal(s.weights, before)


def test_exp3p_update_example():
    s = Exp3PState(2, gamma=0.2, eta=0.5, beta=0.1)
    np.testing.assert_allclose(s.probabilities(), [0.5, 0.5])
    s.update(0, 1.0)
    np.testing.assert_allclose(s.weights, [3.0041660239464334, 1.1051709180756477], rtol=1e-12)


def test_exp3p_zero_beta_keeps_unplayed():
    s = Exp3PState(3, gamma=0.2, eta=0.5, beta=0.0)
    s.update(2, 0.7)
    np.testing.assert_array_equal(s.weights[:2], 1.0)


def test_exp3s_update_example():
    s = Exp3SState(2, gamma=0.5, alpha=0.01)
    s.update(0, 1.0)
    np.testing.assert_allclose(s.weights, [1.6759040889847186, 1.0271828182845904], rtol=1e-12)


def test_exp3s_without_share_is_exp3():
    rng = np.random.default_rng(0)
    a, b = Exp3State(5, 0.2), Exp3SState(5, 0.2, alpha=0.0)
    for _ in range(200):
        arm, r = int(rng.integers(5)), float(rng.random())
        a.update(arm, r)
        b.update(arm, r)
    np.testing.assert_allclose(a.weights, b.weights, rtol=1e-12)


def test_default_gamma_examples():
    assert exp3_default_gamma(10, 1000) == pytest.approx(0.10729830131446737, rel=1e-12)
    assert exp3_default_gamma(10, 1) == 1.0
    assert exp3_default_gamma(2, 10**12) < 1e-5


def test_exp3p_defaults_example():
    beta, eta, gamma = exp3p_default_params(10, 10**4, 0.05)
    assert beta == pytest.approx(0.007278954160144187, rel=1e-10)
    assert eta == pytest.approx(0.004558599616578677, rel=1e-10)
    assert gamma == pytest.approx(0.050384522077974864, rel=1e-10)
    b4, e4, _ = exp3p_default_params(10, 4 * 10**4, 0.05)
    assert (b4, e4) == pytest.approx((beta / 2, eta / 2), rel=1e-12)
    near_one, _, _ = exp3p_default_params(10, 10**4, 1 - 1e-12)
    assert near_one == pytest.approx(math.sqrt(math.log(10) / 10**5), rel=1e-9)


def test_exp3s_defaults_example():
    gamma, alpha = exp3s_default_params(10, 10**4, 5)
    assert gamma == pytest.approx(0.23992629560940407, rel=1e-10)
    assert alpha * 10**4 == pytest.approx(1.0)


@pytest.mark.parametrize("fn, args", [
    (exp3_default_gamma, (1, 10)),
    (exp3_default_gamma, (3, 0)),
    (exp3p_default_params, (3, 10, 1.5)),
    (exp3s_default_params, (3, 10, 0.5)),
])
def test_default_params_reject_bad_input(fn, args):
    with pytest.raises(ValueError):
        fn(*args)


def test_gamma_range_checked():
    with pytest.raises(ValueError):
        Exp3State(3, 0.0)
    with pytest.raises(ValueError):
        Exp3State(3, 1.5)
    with pytest.raises(ValueError):
        make_state("hedge", 3, gamma=0.1)


def test_draw_index_lower_tie():
    cdf = np.array([0.25, 0.25, 0.75, 1.0])
    assert draw_index(cdf, 0.0) == 0
    assert draw_index(cdf, 0.25) == 2  # zero-mass arm 1 never drawn
    assert draw_index(cdf, 0.9999999) == 3
    assert draw_index(np.array([0.5, 0.9999999999]), 0.99999999999) == 1


@pytest.mark.parametrize("seed", range(10))
def test_importance_estimates_unbiased(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 8))
    s = _state(n, float(rng.uniform(0.05, 0.9)), rng.uniform(0.1, 5.0, n))
    r = rng.random(n)
    p = s.probabilities()
    draws = 100_000
    arms = draw_index(np.cumsum(p), rng.random(draws))
    est = np.zeros((draws, n))
    est[np.arange(draws), arms] = r[arms] / p[arms]
    mean, se = est.mean(axis=0), est.std(axis=0, ddof=1) / math.sqrt(draws)
    assert np.all(np.abs(mean - r) <= 3 * se + 1e-12)


_kinds = st.sampled_from(["exp3", "exp3p", "exp3s"])


def _fresh(kind, n, gamma):
    return make_state(kind, n, gamma=gamma, eta=0.05, beta=0.01, alpha=0.01)


@settings(max_examples=40, deadline=None)
@given(_kinds, st.integers(2, 8), st.floats(0.01, 1.0), st.integers(0, 2**32 - 1))
def test_probability_floor(kind, n, gamma, seed):
    s = _fresh(kind, n, gamma)
    rng = np.random.default_rng(seed)
    for _ in range(300):
        a = s.select(rng)
        s.update(a, float(rng.random()))
        assert s.probabilities().min() >= gamma / n - 1e-12


@pytest.mark.parametrize("kind", ["exp3", "exp3p", "exp3s"])
def test_renormalization_leaves_probabilities(kind):
    a, b = _fresh(kind, 5, 0.3), _fresh(kind, 5, 0.3)
    rng_a, rng_b = np.random.default_rng(9), np.random.default_rng(9)
    rewards = np.random.default_rng(1).random((10_000, 5))
    worst = 0.0
    for t in range(10_000):
        arm_a, arm_b = a.select(rng_a), b.select(rng_b)
        assert arm_a == arm_b
        a.update(arm_a, rewards[t, arm_a])
        b.update(arm_b, rewards[t, arm_b])
        b.renormalize()
        worst = max(worst, np.abs(a.probabilities() - b.probabilities()).max())
    assert worst <= 1e-9


def test_weights_stay_finite_on_long_runs():
    s = Exp3State(2, 0.5)
    for _ in range(20_000):
        s.select(np.random.default_rng(0))
        s.update(0, 1.0)
    assert np.all(np.isfinite(s.weights)) and s.weights.max() <= 1e100 * math.e


def test_flat_policy_ledger():
    p = FlatPolicy.tuned("exp3s", 7, 100, V=2)
    assert p.ledger.peak_words == p.footprint == 7
    p.release()
    assert p.ledger.live_words == 0
    assert default_params("exp3", 1, 10)["gamma"] == 1.0


def test_sanity_regret_bernoulli():
    T, n = 10_000, 5
    model = Bernoulli([0.9] + [0.1] * (n - 1), T, seed=0)
    bound = 2 * math.sqrt(2 * T * n * math.log(n))
    regrets = []
    for seed in range(10):
        trace = play(FlatPolicy.tuned("exp3", n, T), model, RngStream(seed).generator())
        regrets.append(weak_regret(trace, model)[-1])
    assert np.mean(regrets) <= bound
