import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aucpolicy.learn import ArmModel
from aucpolicy.policy import (CLASSIFIER, RANKER, ArmSuitePolicy, PolicyError, StochasticPolicy,
                              action_distribution, fixed_arm_policy, predict_deterministic, sample_action,
                              sample_actions, suite_from_weights)

ONE = np.array([1.0])


def constant_scores(values, kind=RANKER, thresholds=None, excluded=()):
    """Policy whose normalized score for arm a at x=(1,) is values[a] - threshold[a]."""
    return suite_from_weights(kind, [[v] for v in values], thresholds, excluded=excluded)


def test_examples():
    assert predict_deterministic(constant_scores([0.3, 0.7]), ONE) == 1
    assert predict_deterministic(constant_scores([0.5, 0.5, 0.5]), ONE) == 0
    assert predict_deterministic(constant_scores([0.1, 9.9, 0.2], excluded={1}), ONE) == 2


def test_ranker_subtracts_threshold_classifier_ignores_it():
    assert predict_deterministic(constant_scores([1.0, 2.0], thresholds=[0.0, 1.5]), ONE) == 0
    assert predict_deterministic(constant_scores([1.0, 2.0], CLASSIFIER, thresholds=[0.0, 1.5]), ONE) == 1


def test_classifier_uses_bias():
    p = suite_from_weights(CLASSIFIER, [[1.0, 0.0], [0.0, 3.0]], bias=True)
    assert predict_deterministic(p, ONE) == 1
    assert p.dimension == 1


def test_dimension_mismatch():
    with pytest.raises(PolicyError):
        predict_deterministic(constant_scores([1.0, 2.0]), np.array([1.0, 2.0]))


def test_all_excluded():
    with pytest.raises(PolicyError):
        constant_scores([1.0, 2.0], excluded={0, 1})


def test_untrainable_arms_auto_excluded():
    arms = [ArmModel.untrainable_arm(0, 1), *constant_scores([0.0, 5.0]).arms[1:]]
    p = ArmSuitePolicy(RANKER, arms)
    assert p.excluded == {0}
    assert predict_deterministic(p, ONE) == 1


@given(values=st.lists(st.integers(-50, 50), min_size=1, max_size=8), c=st.integers(-100, 100))
@settings(max_examples=100, deadline=None)
def test_common_shift_leaves_argmax(values, c):
    base = constant_scores(values)
    shifted = constant_scores(values, thresholds=[-c] * len(values))
    assert predict_deterministic(base, ONE) == predict_deterministic(shifted, ONE)


@given(values=st.lists(st.integers(-20, 20), min_size=2, max_size=6), data=st.data())
@settings(max_examples=100, deadline=None)
def test_raising_threshold_never_makes_arm_win(values, data):
    a = data.draw(st.integers(0, len(values) - 1))
    bump = data.draw(st.integers(1, 30))
    th = [0.0] * len(values)
    before = predict_deterministic(constant_scores(values, thresholds=th), ONE)
    th[a] += bump
    after = predict_deterministic(constant_scores(values, thresholds=th), ONE)
    if after == a:
        assert before == a


def test_epsilon_greedy_example():
    sp = StochasticPolicy(constant_scores([0, 0, 5, 0, 0]), 0.2)
    np.testing.assert_allclose(action_distribution(sp, ONE), [0.05, 0.05, 0.8, 0.05, 0.05], rtol=1e-15)


def test_epsilon_zero_and_one():
    np.testing.assert_array_equal(action_distribution(StochasticPolicy(constant_scores([1, 0]), 0.0), ONE), [1, 0])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sp = StochasticPolicy(constant_scores([1, 0]), 1.0)
    np.testing.assert_array_equal(action_distribution(sp, ONE), [0, 1])


def test_large_epsilon_warns():
    with pytest.warns(UserWarning):
        StochasticPolicy(constant_scores([1, 0, 0]), 0.9)


def test_single_arm_cannot_explore():
    with pytest.raises(PolicyError, match="no arms to explore"):
        StochasticPolicy(constant_scores([1.0]), 0.1)
    sp = StochasticPolicy(constant_scores([1.0]), 0.0)
    np.testing.assert_array_equal(action_distribution(sp, ONE), [1.0])


def test_exploration_reaches_excluded_arms():
    sp = StochasticPolicy(constant_scores([1, 2, 3], excluded={2}), 0.2)
    np.testing.assert_allclose(action_distribution(sp, ONE), [0.1, 0.8, 0.1])


@given(k=st.integers(2, 12), eps=st.floats(0, 1), seed=st.integers(0, 10**6))
@settings(max_examples=100, deadline=None)
def test_distribution_sums_to_one(k, eps, seed):
    rng = np.random.default_rng(seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sp = StochasticPolicy(suite_from_weights(RANKER, rng.standard_normal((k, 3))), eps)
    P = sp.probabilities(rng.standard_normal((20, 3)))
    assert np.all(P >= 0)
    np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-12)


def test_sampling_frequency():
    sp = StochasticPolicy(fixed_arm_policy(2, 5, 3), 0.2)
    X = np.zeros((100_000, 3))
    draws = sample_actions(sp, X, np.random.default_rng(0))
    assert abs((draws == 2).mean() - 0.8) <= 0.01
    counts = np.bincount(draws, minlength=5)
    assert all(abs(c / 1e5 - 0.05) < 0.005 for i, c in enumerate(counts) if i != 2)


def test_sample_action_greedy_and_reproducible():
    x = np.zeros(3)
    greedy = StochasticPolicy(fixed_arm_policy(1, 4, 3), 0.0)
    rng = np.random.default_rng(1)
    assert all(sample_action(greedy, x, rng) == 1 for _ in range(50))
    sp = StochasticPolicy(fixed_arm_policy(1, 4, 3), 0.5)
    first = [sample_action(sp, x, np.random.default_rng(7)) for _ in range(3)]
    assert len(set(first)) == 1
    a = sample_actions(sp, np.zeros((30, 3)), np.random.default_rng(7))
    b = sample_actions(sp, np.zeros((30, 3)), np.random.default_rng(7))
    np.testing.assert_array_equal(a, b)
