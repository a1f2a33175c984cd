"""Synthetic sparse-click campaigns.

The proprietary campaign logs are not available, so this generator produces
logged bandit data with chosen per-arm click rates. Clicks follow a logistic
model per arm; each arm's intercept is calibrated by bisection so the mean
click probability over the drawn contexts hits its target rate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .data import BANDIT, Dataset
from .seeding import derive_rng

# Per-offer impressions and click rates of the bank and hotel campaigns.
BANK_IMPRESSIONS = (37750, 38254, 182191, 168789, 17291)
BANK_RATES = (0.0017, 0.0040, 0.0045, 0.0030, 0.0023)
HOTEL_IMPRESSIONS = (36164, 37944, 30871, 32765, 20719)
HOTEL_RATES = (0.081, 0.082, 0.078, 0.077, 0.055)


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


@dataclass(frozen=True)
class SyntheticBanditSpec:
    """Shape of a synthetic campaign.

    ``weight_scale`` is the expected norm of each arm's ground-truth weight
    vector, i.e. how much the context matters. ``logging_probs`` is the
    context-free arm distribution of the training log (uniform if omitted);
    the test log is always uniform.
    """

    num_arms: int = 5
    dimension: int = 20
    target_rates: Tuple[float, ...] = BANK_RATES
    n_train: int = 100_000
    n_test: int = 100_000
    seed: int = 0
    weight_scale: float = 2.0
    logging_probs: Optional[Tuple[float, ...]] = None
    noise_features: int = 0

    def __post_init__(self):
        if self.num_arms < 1 or self.dimension < 1:
            raise ValueError("num_arms and dimension must be positive")
        if len(self.target_rates) != self.num_arms:
            raise ValueError("need one target rate per arm")
        if not all(0.0 < r < 1.0 for r in self.target_rates):
            raise ValueError("target rates must lie in (0, 1)")
        if self.logging_probs is not None:
            p = np.asarray(self.logging_probs, dtype=np.float64)
            if p.shape != (self.num_arms,) or np.any(p <= 0) or abs(p.sum() - 1.0) > 1e-9:
                raise ValueError("logging_probs must be a positive distribution over the arms")


@dataclass(eq=False)
class ClickModel:
    weights: np.ndarray
    biases: np.ndarray

    def probabilities(self, X) -> np.ndarray:
        """Click probability of every arm, shape (n, K)."""
        return sigmoid(np.asarray(X) @ self.weights.T + self.biases)


@dataclass(eq=False)
class SyntheticBandit:
    train: Dataset
    test: Dataset
    model: ClickModel
    spec: SyntheticBanditSpec = field(repr=False, default=None)

    def test_click_probabilities(self) -> np.ndarray:
        return self.model.probabilities(self.test.X)


def calibrate_bias(scores: np.ndarray, target: float, tol: float = 1e-12, max_iter: int = 200) -> float:
    """Intercept ``b`` with ``mean(sigmoid(scores + b)) == target``.

    The mean is increasing in ``b``, so bisection on a bracket wide enough
    to hold any reachable rate is enough.
    """
    if not 0.0 < target < 1.0:
        raise ValueError(f"unachievable target rate {target}")
    lo, hi = -60.0 - float(scores.max()), 60.0 - float(scores.min())
    rate = lambda b: float(sigmoid(scores + b).mean())  # noqa: E731
    if not rate(lo) <= target <= rate(hi):
        raise ValueError(f"unachievable target rate {target}")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if rate(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    b = 0.5 * (lo + hi)
    if abs(rate(b) - target) > 0.05 * target:
        raise ValueError(f"unachievable target rate {target}")
    return b


def generate_synthetic_bandit(spec: SyntheticBanditSpec) -> SyntheticBandit:
    K, d = spec.num_arms, spec.dimension
    rng_w = derive_rng(spec.seed, "synthetic", "weights")
    informative = d - spec.noise_features
    if informative < 1:
        raise ValueError("noise_features must leave at least one informative feature")
    W = np.zeros((K, d))
    W[:, :informative] = rng_w.standard_normal((K, informative)) * spec.weight_scale / math.sqrt(informative)

    rng_x = derive_rng(spec.seed, "synthetic", "contexts")
    X_train = rng_x.standard_normal((spec.n_train, d))
    X_test = rng_x.standard_normal((spec.n_test, d))
    X_all = np.vstack([X_train, X_test])
    b = np.array([calibrate_bias(X_all @ W[a], spec.target_rates[a]) for a in range(K)])
    model = ClickModel(W, b)

    log_p = (np.full(K, 1.0 / K) if spec.logging_probs is None
             else np.asarray(spec.logging_probs, dtype=np.float64))
    train = _log(X_train, model, log_p, derive_rng(spec.seed, "synthetic", "train-log"))
    test = _log(X_test, model, np.full(K, 1.0 / K), derive_rng(spec.seed, "synthetic", "test-log"))
    return SyntheticBandit(train, test, model, spec)


def _log(X, model: ClickModel, arm_probs: np.ndarray, rng: np.random.Generator) -> Dataset:
    n = X.shape[0]
    actions = rng.choice(arm_probs.shape[0], size=n, p=arm_probs)
    p_click = model.probabilities(X)[np.arange(n), actions]
    rewards = (rng.random(n) < p_click).astype(np.int64)
    return Dataset(X, arm_probs.shape[0], BANDIT, actions=actions, rewards=rewards,
                   propensities=arm_probs[actions])
