"""Per-arm linear rankers (pairwise AUC surrogate) and logistic classifiers.

A ranker scores ``w . x`` with no bias, since a bias cancels in every
positive-minus-negative difference. A classifier scores ``w . [x, 1]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from . import _sgd
from .pipeline import BinaryTrainingSet


class TrainingError(ValueError):
    """Raised when an arm cannot be trained (an empty side)."""


class Surrogate(str, Enum):
    LOGISTIC = "logistic"
    HINGE = "hinge"

    @property
    def code(self) -> int:
        return _sgd.LOGISTIC if self is Surrogate.LOGISTIC else _sgd.HINGE


def surrogate_value_and_grad(s, t: float):
    """Return ``(l(t), l'(t))``.

    Logistic uses the overflow-safe split at ``t = 0``; the hinge
    subgradient at its kink ``t = 1`` is taken as 0.
    """
    s = Surrogate(s)
    t = float(t)
    if s is Surrogate.LOGISTIC:
        if t >= 0:
            e = math.exp(-t)
            return math.log1p(e), -e / (1.0 + e)
        return -t + math.log1p(math.exp(t)), -1.0 / (1.0 + math.exp(t))
    return max(0.0, 1.0 - t), (-1.0 if t < 1.0 else 0.0)


def surrogate_values(s, t: np.ndarray):
    """Vectorized ``(l(t), l'(t))``."""
    s = Surrogate(s)
    t = np.asarray(t, dtype=np.float64)
    if s is Surrogate.LOGISTIC:
        e = np.exp(-np.abs(t))
        value = np.maximum(-t, 0.0) + np.log1p(e)
        grad = np.where(t >= 0, -e / (1.0 + e), -1.0 / (1.0 + e))
        return value, grad
    return np.maximum(0.0, 1.0 - t), np.where(t < 1.0, -1.0, 0.0)


@dataclass(eq=False)
class LinearModel:
    weights: np.ndarray
    arm: int = 0
    trained: bool = True
    bias: bool = False

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if not np.all(np.isfinite(self.weights)):
            raise TrainingError(f"arm {self.arm}: non-finite weights")

    @property
    def dimension(self) -> int:
        return self.weights.shape[0] - int(self.bias)

    def score(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.dimension:
            raise ValueError(f"context dimension {X.shape[-1]} != model dimension {self.dimension}")
        if self.bias:
            return X @ self.weights[:-1] + self.weights[-1]
        return X @ self.weights


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 1_000_000
    lam: float = 0.0
    step_size_base: float = 1.0
    seed: int = 0
    surrogate: Surrogate = Surrogate.LOGISTIC

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")
        if self.step_size_base <= 0:
            raise ValueError("step_size_base must be positive")
        object.__setattr__(self, "surrogate", Surrogate(self.surrogate))


@dataclass(eq=False)
class ArmModel:
    """A trained model plus its score threshold. ``threshold is None`` marks
    an arm that could not be trained; the policy never picks it greedily."""

    model: LinearModel
    threshold: Optional[float] = 0.0
    lam: Optional[float] = None
    n_pos: int = 0
    n_neg: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def untrainable(self) -> bool:
        return self.threshold is None or not self.model.trained

    @classmethod
    def untrainable_arm(cls, arm: int, dimension: int, bias: bool = False, **kw) -> "ArmModel":
        return cls(LinearModel(np.zeros(dimension + int(bias)), arm, trained=False, bias=bias), None, **kw)


def _require_both_sides(s: BinaryTrainingSet):
    if s.n_pos == 0 or s.n_neg == 0:
        raise TrainingError(f"untrainable arm {s.arm}: {s.n_pos} positives, {s.n_neg} negatives")


def empirical_aucl(model: LinearModel, s: BinaryTrainingSet) -> float:
    """Fraction of (positive, negative) pairs with ``f(x+) - f(x-) < 0``.

    Ties count as correctly ordered. The count is exact and the division is
    done on Python integers, so duplicating any side leaves the result
    bit-identical.
    """
    _require_both_sides(s)
    sp = model.score(s.positives)
    sn = np.sort(model.score(s.negatives))
    # negatives scoring strictly above each positive
    wrong = int((s.n_neg - np.searchsorted(sn, sp, side="right")).sum())
    return wrong / (s.n_pos * s.n_neg)


def _pairwise_terms(w, s, surrogate, chunk=2048):
    sp = s.positives @ w
    sn = s.negatives @ w
    total = 0.0
    gpos = np.zeros(s.n_pos)
    gneg = np.zeros(s.n_neg)
    for lo in range(0, s.n_pos, chunk):
        t = sp[lo:lo + chunk, None] - sn[None, :]
        v, g = surrogate_values(surrogate, t)
        total += v.sum()
        gpos[lo:lo + chunk] = g.sum(axis=1)
        gneg += g.sum(axis=0)
    return total, gpos, gneg


def surrogate_objective(model: LinearModel, s: BinaryTrainingSet, surrogate, lam: float) -> float:
    """Mean surrogate over all pairs plus ``lam / 2 * ||w||^2`` (exact double sum)."""
    _require_both_sides(s)
    w = model.weights
    total, _, _ = _pairwise_terms(w, s, surrogate)
    return total / (s.n_pos * s.n_neg) + 0.5 * lam * float(w @ w)


def surrogate_objective_grad(model: LinearModel, s: BinaryTrainingSet, surrogate, lam: float) -> np.ndarray:
    """Exact gradient of :func:`surrogate_objective` with respect to ``w``."""
    _require_both_sides(s)
    w = model.weights
    _, gpos, gneg = _pairwise_terms(w, s, surrogate)
    grad = (gpos @ s.positives - gneg @ s.negatives) / (s.n_pos * s.n_neg)
    return grad + lam * w


def pair_gradient(w: np.ndarray, x_pos, x_neg, surrogate, lam: float) -> np.ndarray:
    """Stochastic gradient for one sampled pair: ``l'(t)(x+ - x-) + lam w``."""
    diff = np.asarray(x_pos, dtype=np.float64) - np.asarray(x_neg, dtype=np.float64)
    _, g = surrogate_value_and_grad(surrogate, float(w @ diff))
    return g * diff + lam * w


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def train_ranker(s: BinaryTrainingSet, cfg: TrainConfig, rng=None) -> LinearModel:
    """Pairwise SGD from ``w = 0`` with steps ``eta0 / sqrt(k)``.

    Each step samples one positive and one negative uniformly and
    independently. ``rng`` overrides ``cfg.seed`` when given.
    """
    _require_both_sides(s)
    gen = _rng(cfg.seed if rng is None else rng)
    pos_idx = gen.integers(0, s.n_pos, size=cfg.iterations)
    neg_idx = gen.integers(0, s.n_neg, size=cfg.iterations)
    w = _sgd.pairwise_sgd(np.ascontiguousarray(s.positives), np.ascontiguousarray(s.negatives),
                          pos_idx, neg_idx, float(cfg.lam), float(cfg.step_size_base), cfg.surrogate.code)
    return LinearModel(w, s.arm, trained=True, bias=False)


def with_bias(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return np.hstack([X, np.ones((X.shape[0], 1))])


def logistic_objective(w: np.ndarray, s: BinaryTrainingSet, lam: float) -> float:
    """Mean pointwise logistic loss with a bias column; the bias is not penalized."""
    X, y = s.stacked()
    ys = 2.0 * y - 1.0
    v, _ = surrogate_values(Surrogate.LOGISTIC, ys * (with_bias(X) @ w))
    return float(v.mean()) + 0.5 * lam * float(w[:-1] @ w[:-1])


def logistic_objective_grad(w: np.ndarray, s: BinaryTrainingSet, lam: float) -> np.ndarray:
    X, y = s.stacked()
    ys = 2.0 * y - 1.0
    Xb = with_bias(X)
    _, g = surrogate_values(Surrogate.LOGISTIC, ys * (Xb @ w))
    grad = (g * ys) @ Xb / len(ys)
    grad[:-1] += lam * w[:-1]
    return grad


def train_logistic_classifier(s: BinaryTrainingSet, cfg: TrainConfig, rng=None) -> LinearModel:
    """Pointwise logistic regression by SGD over single examples.

    Same step schedule and zero start as :func:`train_ranker`; a constant
    bias feature is appended and its weight is the last entry.
    """
    if len(s) == 0:
        raise TrainingError(f"untrainable arm {s.arm}: empty training set")
    X, y = s.stacked()
    Xb = np.ascontiguousarray(with_bias(X))
    ys = 2.0 * y - 1.0
    gen = _rng(cfg.seed if rng is None else rng)
    idx = gen.integers(0, len(ys), size=cfg.iterations)
    w = _sgd.pointwise_sgd(Xb, ys, idx, float(cfg.lam), float(cfg.step_size_base), _sgd.LOGISTIC)
    return LinearModel(w, s.arm, trained=True, bias=True)


MEASURES = ("f1", "precision", "recall")


def classification_measure(measure: str, tp, fp, fn):
    """Precision with nothing predicted positive is 0; F1 is 0 when TP is 0."""
    tp, fp, fn = (np.asarray(v, dtype=np.int64) for v in (tp, fp, fn))
    if measure == "precision":
        denom = tp + fp
        return np.where(denom > 0, tp / np.maximum(denom, 1), 0.0)
    if measure == "recall":
        denom = tp + fn
        return np.where(denom > 0, tp / np.maximum(denom, 1), 0.0)
    if measure == "f1":
        denom = 2 * tp + fp + fn
        return np.where(denom > 0, 2 * tp / np.maximum(denom, 1), 0.0)
    raise ValueError(f"unknown measure {measure!r}; expected one of {MEASURES}")


def threshold_candidates(scores: np.ndarray) -> np.ndarray:
    """Ascending candidates: one below the minimum, the midpoints between
    consecutive distinct scores, one above the maximum.

    The outer candidates sit half the adjacent gap (or 0.5 for a single
    distinct score) beyond the extremes.
    """
    u = np.unique(scores)
    if u.size == 1:
        return np.array([u[0] - 0.5, u[0] + 0.5])
    mids = (u[:-1] + u[1:]) / 2.0
    # keep each midpoint strictly above its lower neighbour
    mids = np.where(mids > u[:-1], mids, u[1:])
    return np.concatenate([[u[0] - (u[1] - u[0]) / 2.0], mids, [u[-1] + (u[-1] - u[-2]) / 2.0]])


def learn_threshold(model: LinearModel, s: BinaryTrainingSet, measure: str = "f1") -> float:
    """Threshold maximizing ``measure`` on the arm's own training set.

    Scores ``>= threshold`` count as positive. Among equally good candidates
    the smallest (most permissive) wins.
    """
    _require_both_sides(s)
    if measure not in MEASURES:
        raise ValueError(f"unknown measure {measure!r}; expected one of {MEASURES}")
    sp = np.sort(model.score(s.positives))
    sn = np.sort(model.score(s.negatives))
    cands = threshold_candidates(np.concatenate([sp, sn]))
    tp = s.n_pos - np.searchsorted(sp, cands, side="left")
    fp = s.n_neg - np.searchsorted(sn, cands, side="left")
    values = classification_measure(measure, tp, fp, s.n_pos - tp)
    return float(cands[int(np.argmax(values))])
