import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aucpolicy.learn import (LinearModel, Surrogate, TrainConfig, TrainingError, classification_measure,
                             empirical_aucl, learn_threshold, logistic_objective, logistic_objective_grad,
                             pair_gradient, surrogate_objective, surrogate_objective_grad,
                             surrogate_value_and_grad, surrogate_values, threshold_candidates,
                             train_logistic_classifier, train_ranker)
from aucpolicy.pipeline import BinaryTrainingSet

LN2 = math.log(2.0)


def scored_set(pos_scores, neg_scores):
    """1-D set whose scores under ``w = (1,)`` are the given values."""
    return (LinearModel(np.array([1.0]), 0),
            BinaryTrainingSet(0, np.asarray(pos_scores, float)[:, None], np.asarray(neg_scores, float)[:, None]))


def random_instance(rng, d_max=10, side_max=8):
    d = int(rng.integers(1, d_max + 1))
    s = BinaryTrainingSet(0, rng.standard_normal((int(rng.integers(1, side_max + 1)), d)),
                          rng.standard_normal((int(rng.integers(1, side_max + 1)), d)))
    return LinearModel(rng.standard_normal(d), 0), s


def separable_set(seed=0, n=100):
    rng = np.random.default_rng(seed)
    pos = rng.normal(0.0, 0.1, (n, 2)) + [1.0, 0.0]
    neg = rng.normal(0.0, 0.1, (n, 2)) + [0.0, 1.0]
    return BinaryTrainingSet(0, pos, neg)


# surrogates

def test_surrogate_examples():
    v, g = surrogate_value_and_grad("logistic", 0.0)
    assert v == pytest.approx(LN2) and g == -0.5
    assert surrogate_value_and_grad("hinge", 2.0) == (0.0, 0.0)
    v, g = surrogate_value_and_grad("logistic", 1000.0)
    assert 0.0 <= v < 1e-300 and math.isfinite(g)
    v, g = surrogate_value_and_grad("logistic", -1000.0)
    assert v == 1000.0 and g == -1.0


def test_hinge_kink_subgradient():
    assert surrogate_value_and_grad("hinge", 1.0) == (0.0, 0.0)
    assert surrogate_value_and_grad("hinge", 0.5) == (0.5, -1.0)


@given(st.floats(-700, 700), st.sampled_from(list(Surrogate)))
@settings(max_examples=200, deadline=None)
def test_vectorized_surrogate_matches_scalar(t, s):
    v, g = surrogate_values(s, np.array([t]))
    v0, g0 = surrogate_value_and_grad(s, t)
    assert v[0] == pytest.approx(v0, rel=1e-12, abs=1e-300)
    assert g[0] == pytest.approx(g0, rel=1e-12, abs=1e-300)


# empirical AUCL

def test_aucl_examples():
    assert empirical_aucl(*scored_set([5, 6], [1, 2])) == 0.0
    assert empirical_aucl(*scored_set([1, 2], [5, 6])) == 1.0
    assert empirical_aucl(*scored_set([2, 0], [1])) == 0.5


def test_aucl_ties_count_zero():
    assert empirical_aucl(*scored_set([1, 1], [1])) == 0.0


def test_aucl_empty_side():
    with pytest.raises(TrainingError):
        empirical_aucl(*scored_set([1.0], []))


@given(seed=st.integers(0, 2**32 - 1), k=st.integers(1, 12))
@settings(max_examples=60, deadline=None)
def test_aucl_invariant_under_duplicating_negatives(seed, k):
    rng = np.random.default_rng(seed)
    m, s = random_instance(rng)
    # coarse integer features so that ties actually occur
    s = BinaryTrainingSet(0, np.round(s.positives), np.round(s.negatives))
    dup = BinaryTrainingSet(0, s.positives, np.repeat(s.negatives, k, axis=0))
    assert empirical_aucl(m, dup) == empirical_aucl(m, s)


@given(seed=st.integers(0, 2**32 - 1), c=st.floats(1e-6, 1e6))
@settings(max_examples=60, deadline=None)
def test_aucl_scale_invariant(seed, c):
    rng = np.random.default_rng(seed)
    m, s = random_instance(rng)
    # integer weights and features keep every score difference exact
    m = LinearModel(np.round(m.weights * 3), 0)
    s = BinaryTrainingSet(0, np.round(s.positives * 3), np.round(s.negatives * 3))
    c = float(2.0 ** round(math.log2(c)))
    assert empirical_aucl(LinearModel(c * m.weights, 0), s) == empirical_aucl(m, s)


@given(seed=st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_aucl_matches_pair_enumeration(seed):
    rng = np.random.default_rng(seed)
    m, s = random_instance(rng)
    sp, sn = m.score(s.positives), m.score(s.negatives)
    brute = sum(1 for a in sp for b in sn if a - b < 0) / (len(sp) * len(sn))
    assert empirical_aucl(m, s) == pytest.approx(brute, abs=0)
    assert 0.0 <= empirical_aucl(m, s) <= 1.0


# objective

def test_objective_examples():
    rng = np.random.default_rng(0)
    s = BinaryTrainingSet(0, rng.standard_normal((3, 4)), rng.standard_normal((5, 4)))
    zero = LinearModel(np.zeros(4), 0)
    assert surrogate_objective(zero, s, "logistic", 0.0) == pytest.approx(LN2, rel=1e-14)
    assert surrogate_objective(zero, s, "hinge", 0.0) == 1.0
    one = BinaryTrainingSet(0, np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]]))
    got = surrogate_objective(LinearModel(np.array([1.0, -1.0]), 0), one, "logistic", 0.0)
    assert got == pytest.approx(0.12692801104297263, rel=1e-14)


def test_objective_regularizer():
    one = BinaryTrainingSet(0, np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]]))
    w = LinearModel(np.array([3.0, 4.0]), 0)
    base = surrogate_objective(w, one, "hinge", 0.0)
    assert surrogate_objective(w, one, "hinge", 0.5) == pytest.approx(base + 0.25 * 25.0)


def _finite_difference(f, w, h=1e-6):
    g = np.zeros_like(w)
    for i in range(len(w)):
        e = np.zeros_like(w)
        e[i] = h
        g[i] = (f(w + e) - f(w - e)) / (2 * h)
    return g


def _away_from_kink(m, s):
    t = (s.positives @ m.weights)[:, None] - (s.negatives @ m.weights)[None, :]
    return np.abs(t - 1.0).min() > 1e-3


@pytest.mark.parametrize("surrogate", list(Surrogate))
@pytest.mark.parametrize("lam", [0.0, 0.1])
@given(seed=st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_gradient_matches_finite_differences(surrogate, lam, seed):
    m, s = random_instance(np.random.default_rng(seed))
    if surrogate is Surrogate.HINGE and not _away_from_kink(m, s):
        return
    f = lambda w: surrogate_objective(LinearModel(w, 0), s, surrogate, lam)
    num = _finite_difference(f, m.weights)
    ana = surrogate_objective_grad(m, s, surrogate, lam)
    assert np.linalg.norm(ana - num) <= 1e-5 * max(np.linalg.norm(num), 1e-3)


@given(seed=st.integers(0, 2**32 - 1), surrogate=st.sampled_from(list(Surrogate)),
       lam=st.sampled_from([0.0, 0.1, 1.0]))
@settings(max_examples=50, deadline=None)
def test_pair_gradient_is_unbiased(seed, surrogate, lam):
    rng = np.random.default_rng(seed)
    m, s = random_instance(rng)  # at most 8 x 8 = 64 pairs
    mean = np.mean([pair_gradient(m.weights, p, n, surrogate, lam)
                    for p in s.positives for n in s.negatives], axis=0)
    np.testing.assert_allclose(mean, surrogate_objective_grad(m, s, surrogate, lam), rtol=1e-10, atol=1e-12)


@given(seed=st.integers(0, 2**32 - 1), lam=st.floats(0, 10))
@settings(max_examples=30, deadline=None)
def test_objective_non_negative(seed, lam):
    m, s = random_instance(np.random.default_rng(seed))
    for sur in Surrogate:
        assert surrogate_objective(m, s, sur, lam) >= 0.0


# ranker SGD

def test_first_step_gradient():
    x_pos, x_neg = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    np.testing.assert_array_equal(pair_gradient(np.zeros(2), x_pos, x_neg, "logistic", 0.0), [-0.5, 0.5])
    s = BinaryTrainingSet(0, x_pos[None], x_neg[None])
    w = train_ranker(s, TrainConfig(iterations=1, lam=0.0)).weights
    np.testing.assert_array_equal(w, [0.5, -0.5])


def test_two_steps_match_hand_schedule():
    s = BinaryTrainingSet(0, np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]]))
    lam = 0.1
    w = np.zeros(2)
    for k in (1, 2):
        w = w - pair_gradient(w, s.positives[0], s.negatives[0], "logistic", lam) / math.sqrt(k)
    got = train_ranker(s, TrainConfig(iterations=2, lam=lam)).weights
    np.testing.assert_allclose(got, w, rtol=1e-14)


@pytest.mark.parametrize("surrogate", list(Surrogate))
def test_ranker_separable(surrogate):
    s = separable_set()
    m = train_ranker(s, TrainConfig(iterations=10_000, surrogate=surrogate, seed=1))
    assert empirical_aucl(m, s) == 0.0
    baseline = surrogate_objective(LinearModel(np.zeros(2), 0), s, surrogate, 0.0)
    assert surrogate_objective(m, s, surrogate, 0.0) <= 0.1 * baseline


def test_ranker_deterministic():
    s = separable_set(3)
    a = train_ranker(s, TrainConfig(iterations=500, lam=0.1, seed=5)).weights
    b = train_ranker(s, TrainConfig(iterations=500, lam=0.1, seed=5)).weights
    c = train_ranker(s, TrainConfig(iterations=500, lam=0.1, seed=6)).weights
    assert a.tobytes() == b.tobytes()
    assert a.tobytes() != c.tobytes()


def test_ranker_rejects_empty_side():
    with pytest.raises(TrainingError, match="untrainable arm"):
        train_ranker(BinaryTrainingSet(0, np.ones((3, 2)), np.zeros((0, 2))), TrainConfig(iterations=10))


def test_ranker_approaches_regularized_optimum():
    scipy_opt = pytest.importorskip("scipy.optimize")
    rng = np.random.default_rng(4)
    s = BinaryTrainingSet(0, rng.normal(0.5, 1.0, (30, 3)), rng.normal(-0.5, 1.0, (40, 3)))
    lam = 0.1
    f = lambda w: surrogate_objective(LinearModel(w, 0), s, "logistic", lam)
    best = scipy_opt.minimize(f, np.zeros(3), method="BFGS").fun
    m = train_ranker(s, TrainConfig(iterations=200_000, lam=lam, seed=2))
    assert f(m.weights) - best < 1e-3


# classifier

def test_classifier_all_positive():
    s = BinaryTrainingSet(0, np.random.default_rng(0).standard_normal((20, 2)), np.zeros((0, 2)))
    m = train_logistic_classifier(s, TrainConfig(iterations=5_000))
    assert m.bias and np.all(m.score(s.positives) > 0)


def test_classifier_symmetric_instance():
    s = BinaryTrainingSet(0, np.array([[1.0]]), np.array([[-1.0]]))
    w = train_logistic_classifier(s, TrainConfig(iterations=20_000)).weights
    assert w[0] > 0
    assert abs(w[1]) < 0.05 * w[0]


def test_classifier_separable_against_full_batch_oracle():
    scipy_opt = pytest.importorskip("scipy.optimize")
    s = BinaryTrainingSet(0, np.ones((50, 1)), -np.ones((50, 1)))
    lam = 0.1
    m = train_logistic_classifier(s, TrainConfig(iterations=100_000, lam=lam, seed=3))
    assert np.all(np.isfinite(m.weights))
    X, y = s.stacked()
    assert np.all((m.score(X) > 0) == (y == 1))
    res = scipy_opt.minimize(logistic_objective, np.zeros(2), args=(s, lam), jac=logistic_objective_grad,
                             method="BFGS")
    assert logistic_objective(m.weights, s, lam) - res.fun < 1e-3
    np.testing.assert_allclose(m.weights, res.x, atol=0.05)


def test_classifier_gradient_matches_finite_differences():
    rng = np.random.default_rng(8)
    s = BinaryTrainingSet(0, rng.standard_normal((6, 3)), rng.standard_normal((4, 3)))
    w = rng.standard_normal(4)
    num = _finite_difference(lambda v: logistic_objective(v, s, 0.3), w)
    np.testing.assert_allclose(logistic_objective_grad(w, s, 0.3), num, rtol=1e-6, atol=1e-9)


def test_classifier_bias_not_penalized():
    s = BinaryTrainingSet(0, np.ones((1, 1)), -np.ones((1, 1)))
    w = np.array([0.0, 5.0])
    assert logistic_objective_grad(w, s, 1.0)[1] == logistic_objective_grad(w, s, 0.0)[1]


def test_classifier_rejects_empty_set():
    with pytest.raises(TrainingError):
        train_logistic_classifier(BinaryTrainingSet(0, np.zeros((0, 2)), np.zeros((0, 2))),
                                  TrainConfig(iterations=10))


# thresholds

def test_threshold_examples():
    assert learn_threshold(*scored_set([2, 3], [0, 1]), "f1") == 1.5
    assert learn_threshold(*scored_set([1, 3], [2, 4]), "f1") == 0.5
    assert learn_threshold(*scored_set([1, 3], [2, 4]), "recall") == 0.5


def test_threshold_candidates():
    np.testing.assert_array_equal(threshold_candidates(np.array([3.0, 1.0, 2.0, 1.0])), [0.5, 1.5, 2.5, 3.5])
    np.testing.assert_array_equal(threshold_candidates(np.array([2.0, 2.0])), [1.5, 2.5])


def test_measure_conventions():
    assert classification_measure("precision", 0, 0, 3) == 0.0
    assert classification_measure("f1", 0, 2, 3) == 0.0
    assert classification_measure("recall", 0, 0, 0) == 0.0
    with pytest.raises(ValueError):
        classification_measure("accuracy", 1, 1, 1)


def _brute_threshold(sp, sn, measure):
    # each distinct score as the cut (score >= v), then "nothing positive"
    cuts = sorted(set(sp) | set(sn)) + [math.inf]
    best, best_cut = -1.0, None
    for v in cuts:
        tp = sum(x >= v for x in sp)
        fp = sum(x >= v for x in sn)
        fn = len(sp) - tp
        val = float(classification_measure(measure, tp, fp, fn))
        if val > best:
            best, best_cut = val, v
    return best, best_cut


@pytest.mark.parametrize("measure", ["f1", "precision", "recall"])
@given(pos=st.lists(st.integers(-6, 6), min_size=1, max_size=12),
       neg=st.lists(st.integers(-6, 6), min_size=1, max_size=12))
@settings(max_examples=100, deadline=None)
def test_threshold_matches_brute_force(measure, pos, neg):
    m, s = scored_set(pos, neg)
    thr = learn_threshold(m, s, measure)
    best, cut = _brute_threshold(pos, neg, measure)
    tp = sum(x >= thr for x in pos)
    fp = sum(x >= thr for x in neg)
    assert float(classification_measure(measure, tp, fp, len(pos) - tp)) == best
    # same partition as the smallest optimal cut
    everything = pos + neg
    assert [x >= thr for x in everything] == [x >= cut for x in everything]
