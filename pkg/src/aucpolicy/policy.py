"""Deterministic one-vs-all policies over per-arm models, and epsilon-greedy
wrappers around them."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import FrozenSet, List, Sequence

import numpy as np

from .learn import ArmModel, LinearModel

RANKER = "ranker"
CLASSIFIER = "classifier"
KINDS = (RANKER, CLASSIFIER)


class PolicyError(ValueError):
    pass


@dataclass(eq=False)
class ArmSuitePolicy:
    """K per-arm models combined by an argmax.

    Rankers compete on ``w_a . x - s_a``; classifiers on their raw score
    (bias included) and ignore thresholds. Untrainable arms are excluded from
    the argmax. Ties go to the smallest arm index.
    """

    kind: str
    arms: List[ArmModel]
    excluded: FrozenSet[int] = field(default=frozenset())

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PolicyError(f"policy kind must be one of {KINDS}, got {self.kind!r}")
        self.excluded = frozenset(self.excluded) | {a for a, m in enumerate(self.arms) if m.untrainable}
        if not self.excluded <= set(range(len(self.arms))):
            raise PolicyError("excluded arms out of range")
        if len(self.excluded) == len(self.arms):
            raise PolicyError("every arm is excluded; no arm can be recommended")
        dims = {m.model.dimension for m in self.arms}
        if len(dims) != 1:
            raise PolicyError(f"arm models disagree on dimension: {sorted(dims)}")

    @property
    def num_arms(self) -> int:
        return len(self.arms)

    @property
    def dimension(self) -> int:
        return self.arms[0].model.dimension

    def scores(self, X) -> np.ndarray:
        """Normalized scores, shape (n, K); excluded arms get ``-inf``."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.dimension:
            raise PolicyError(f"context dimension {X.shape[1]} != policy dimension {self.dimension}")
        out = np.full((X.shape[0], self.num_arms), -np.inf)
        for a, m in enumerate(self.arms):
            if a in self.excluded:
                continue
            out[:, a] = m.model.score(X)
            if self.kind == RANKER:
                out[:, a] -= m.threshold
        return out

    def predict(self, X) -> np.ndarray:
        """Greedy arm for every row of ``X``; ``np.argmax`` picks the first maximum."""
        return np.argmax(self.scores(X), axis=1)


def predict_deterministic(p: ArmSuitePolicy, x) -> int:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise PolicyError("expected a single context vector")
    return int(p.predict(x)[0])


def epsilon_greedy_probs(greedy: np.ndarray, num_arms: int, epsilon: float) -> np.ndarray:
    """Rows of ``1 - eps`` on the greedy arm and ``eps / (K - 1)`` elsewhere."""
    greedy = np.atleast_1d(np.asarray(greedy, dtype=np.int64))
    if num_arms == 1:
        if epsilon > 0:
            raise PolicyError("no arms to explore")
        return np.ones((greedy.shape[0], 1))
    probs = np.full((greedy.shape[0], num_arms), epsilon / (num_arms - 1))
    probs[np.arange(greedy.shape[0]), greedy] = 1.0 - epsilon
    return probs


@dataclass(eq=False)
class StochasticPolicy:
    """Epsilon-greedy exploration on top of a deterministic policy.

    Exploration mass reaches every non-greedy arm, excluded ones included.
    """

    base: ArmSuitePolicy
    epsilon: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise PolicyError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        K = self.base.num_arms
        if K == 1 and self.epsilon > 0:
            raise PolicyError("no arms to explore")
        if K > 1 and self.epsilon > (K - 1) / K:
            warnings.warn(f"epsilon={self.epsilon} exceeds (K-1)/K; the greedy arm becomes the least likely",
                          stacklevel=2)

    @property
    def num_arms(self) -> int:
        return self.base.num_arms

    def probabilities(self, X) -> np.ndarray:
        return epsilon_greedy_probs(self.base.predict(X), self.num_arms, self.epsilon)


def action_distribution(sp: StochasticPolicy, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise PolicyError("expected a single context vector")
    return sp.probabilities(x)[0]


def sample_action(sp: StochasticPolicy, x, rng: np.random.Generator) -> int:
    probs = action_distribution(sp, x)
    return int(rng.choice(sp.num_arms, p=probs))


def sample_actions(sp: StochasticPolicy, X, rng: np.random.Generator) -> np.ndarray:
    """One draw per row of ``X`` by inverse CDF on a single uniform each."""
    probs = sp.probabilities(X)
    u = rng.random(probs.shape[0])[:, None]
    return np.minimum((u >= np.cumsum(probs, axis=1)).sum(axis=1), sp.num_arms - 1)


def fixed_arm_policy(arm: int, num_arms: int, dimension: int) -> ArmSuitePolicy:
    """A classifier-kind policy that always recommends ``arm``; used in tests and as a baseline."""
    arms = []
    for a in range(num_arms):
        w = np.zeros(dimension + 1)
        w[-1] = 1.0 if a == arm else 0.0
        arms.append(ArmModel(LinearModel(w, a, bias=True), 0.0))
    return ArmSuitePolicy(CLASSIFIER, arms)


def suite_from_weights(kind: str, weights: Sequence, thresholds=None, bias: bool = False,
                       excluded=()) -> ArmSuitePolicy:
    """Build a policy straight from weight vectors (mostly for tests and bundles)."""
    thresholds = [0.0] * len(weights) if thresholds is None else thresholds
    arms = [ArmModel(LinearModel(w, a, bias=bias), t) for a, (w, t) in enumerate(zip(weights, thresholds))]
    return ArmSuitePolicy(kind, arms, frozenset(excluded))
