"""Policy evaluation: true CTR on labelled data, importance-weighted CTR on
logged bandit data, its Student-t lower confidence bound, and regret."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .data import BANDIT, FULL, DataError, Dataset
from .policy import ArmSuitePolicy, StochasticPolicy
from .stats import t_quantile

TRUE_CTR = "true_ctr"
IW_CTR = "iw_ctr"


@dataclass
class EvaluationReport:
    estimator: str
    point: float
    n: int
    lcb: Optional[float] = None
    delta: Optional[float] = None
    sample_std: float = 0.0
    policy_id: Optional[str] = None
    dataset_fingerprint: Optional[str] = None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "EvaluationReport":
        return cls(**d)


@dataclass
class RunningMoments:
    """Mergeable count/mean/M2 accumulator (Chan et al. pairwise update)."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def of(cls, values) -> "RunningMoments":
        v = np.asarray(values, dtype=np.float64)
        if v.size == 0:
            return cls()
        mean = float(v.mean())
        return cls(int(v.size), mean, float(((v - mean) ** 2).sum()))

    def merge(self, other: "RunningMoments") -> "RunningMoments":
        if other.count == 0:
            return RunningMoments(self.count, self.mean, self.m2)
        if self.count == 0:
            return RunningMoments(other.count, other.mean, other.m2)
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / n
        m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / n
        return RunningMoments(n, mean, m2)

    @property
    def sample_std(self) -> float:
        if self.count < 2:
            raise ValueError("sample standard deviation needs at least two values")
        return math.sqrt(self.m2 / (self.count - 1))


def lcb(values: Sequence[float], delta: float = 0.05) -> float:
    """``mean - std / sqrt(n) * t_{1-delta, n-1}`` with the 1/(n-1) sample std."""
    if not 0.0 < delta <= 0.5:
        raise ValueError(f"delta must lie in (0, 0.5], got {delta}")
    m = RunningMoments.of(values)
    if m.count < 2:
        raise ValueError("the lower confidence bound needs at least two values")
    return lcb_from_moments(m, delta)


def lcb_from_moments(m: RunningMoments, delta: float) -> float:
    std = m.sample_std
    if std == 0.0:
        return m.mean
    return m.mean - std / math.sqrt(m.count) * t_quantile(1.0 - delta, m.count - 1)


def true_ctr(p: ArmSuitePolicy, test: Dataset) -> EvaluationReport:
    """Fraction of test contexts whose greedy arm equals the true label."""
    if test.kind != FULL:
        raise DataError("true CTR needs full-information data")
    if test.n == 0:
        raise DataError("empty test set")
    hits = p.predict(test.X) == test.labels
    return EvaluationReport(TRUE_CTR, float(hits.mean()), test.n,
                            sample_std=float(hits.std(ddof=1)) if test.n > 1 else 0.0,
                            dataset_fingerprint=test.fingerprint())


def importance_weights(sp: StochasticPolicy, test: Dataset, clip: Optional[float] = None) -> np.ndarray:
    """Per-record ``r_i * pi(a_i | x_i) / propensity_i``."""
    if test.kind != BANDIT:
        raise DataError("importance weighting needs bandit data")
    if test.propensities is None or np.any(test.propensities <= 0):
        raise DataError("unlogged propensity")
    target = sp.probabilities(test.X)[np.arange(test.n), test.actions]
    ratio = target / test.propensities
    if clip is not None:
        ratio = np.minimum(ratio, clip)
    return test.rewards * ratio


def importance_weighted_ctr(sp: StochasticPolicy, test: Dataset, delta: float = 0.05,
                            clip: Optional[float] = None) -> EvaluationReport:
    if test.n == 0:
        raise DataError("empty test set")
    if test.n < 2:
        raise DataError("need at least two logged records for a standard deviation")
    X = importance_weights(sp, test, clip)
    m = RunningMoments.of(X)
    return EvaluationReport(IW_CTR, m.mean, m.count, lcb=lcb_from_moments(m, delta), delta=delta,
                            sample_std=m.sample_std, dataset_fingerprint=test.fingerprint())


def expected_ctr(sp: StochasticPolicy, X: np.ndarray, click_probs: np.ndarray) -> float:
    """Mean over contexts of ``sum_a pi(a|x) * P(click | x, a)`` (needs a ground-truth model)."""
    return float((sp.probabilities(X) * click_probs).sum(axis=1).mean())


@dataclass
class RegretLedger:
    T: int
    optimal_cum: int
    algo_cum: int
    regret: int
    comparator: str = "best_fixed_arm"


def regret_ledger(rewards: np.ndarray, chosen: Sequence[int], oracle: Optional[Sequence[int]] = None) -> RegretLedger:
    """Cumulative reward gap between a comparator and the chosen arms.

    The comparator is the best single arm in hindsight, or the per-round arms
    in ``oracle`` when given.
    """
    R = np.asarray(rewards)
    if R.size and not np.all((R == 0) | (R == 1)):
        raise ValueError("rewards must be 0/1")
    R = R.astype(np.int64)
    chosen = np.asarray(chosen, dtype=np.int64)
    if R.ndim != 2 or chosen.shape != (R.shape[0],):
        raise ValueError(f"shape mismatch: rewards {R.shape}, chosen {chosen.shape}")
    T, K = R.shape
    if T and (chosen.min() < 0 or chosen.max() >= K):
        raise ValueError("chosen arms out of range")
    algo = int(R[np.arange(T), chosen].sum())
    if oracle is not None:
        oracle = np.asarray(oracle, dtype=np.int64)
        if oracle.shape != (T,):
            raise ValueError("oracle column must have one arm per round")
        best, comparator = int(R[np.arange(T), oracle].sum()), "oracle"
    else:
        best, comparator = int(R.sum(axis=0).max()) if T else 0, "best_fixed_arm"
    return RegretLedger(T, best, algo, best - algo, comparator)
