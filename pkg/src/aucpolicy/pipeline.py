"""Moving data between supervised, bandit and per-arm binary forms."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .data import BANDIT, FULL, DataError, Dataset
from .seeding import derive_rng


@dataclass(frozen=True)
class ConversionConfig:
    seed: int
    num_arms: int

    def __post_init__(self):
        if self.num_arms < 1:
            raise ValueError("num_arms must be at least 1")


@dataclass(frozen=True, eq=False)
class BinaryTrainingSet:
    """Clicked (positive) and non-clicked (negative) contexts for one arm."""

    arm: int
    positives: np.ndarray
    negatives: np.ndarray

    def __post_init__(self):
        for name in ("positives", "negatives"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.ndim == 1:
                arr = arr.reshape(-1, 1) if arr.size else arr.reshape(0, 0)
            object.__setattr__(self, name, arr)
        if self.positives.size and self.negatives.size and self.positives.shape[1] != self.negatives.shape[1]:
            raise DataError("positives and negatives differ in dimension")

    @property
    def n_pos(self) -> int:
        return self.positives.shape[0]

    @property
    def n_neg(self) -> int:
        return self.negatives.shape[0]

    @property
    def dimension(self) -> int:
        return self.positives.shape[1] if self.n_pos else self.negatives.shape[1]

    def __len__(self):
        return self.n_pos + self.n_neg

    def stacked(self) -> Tuple[np.ndarray, np.ndarray]:
        """All contexts and their 0/1 labels, positives first."""
        d = self.dimension
        X = np.vstack([self.positives.reshape(-1, d), self.negatives.reshape(-1, d)])
        y = np.concatenate([np.ones(self.n_pos, dtype=np.int64), np.zeros(self.n_neg, dtype=np.int64)])
        return X, y


@dataclass(frozen=True)
class FeatureSelection:
    kept_indices: Tuple[int, ...]
    gains: Tuple[float, ...]

    def apply(self, data: Dataset) -> Dataset:
        idx = list(self.kept_indices)
        return data.with_features(data.X[:, idx], [data.feature_names[j] for j in idx])

    def to_dict(self) -> dict:
        return {"kept_indices": list(self.kept_indices), "gains": list(self.gains)}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSelection":
        return cls(tuple(int(i) for i in d["kept_indices"]), tuple(float(g) for g in d["gains"]))


def convert_supervised_to_bandit(data: Dataset, cfg: ConversionConfig) -> Dataset:
    """Reveal the reward of one uniformly drawn arm per record.

    Record ``{x, a}`` becomes ``{x, a', 1(a' == a)}`` with ``a'`` uniform on
    the K arms and propensity 1/K. The true label is dropped.
    """
    if data.kind != FULL:
        raise DataError("conversion needs full-information data")
    if cfg.num_arms != data.num_arms:
        raise DataError(f"config has K={cfg.num_arms} but the data has K={data.num_arms}")
    rng = np.random.default_rng(cfg.seed)
    shown = rng.integers(0, cfg.num_arms, size=data.n)
    rewards = (shown == data.labels).astype(np.int64)
    return Dataset(data.X, data.num_arms, BANDIT, actions=shown, rewards=rewards,
                   propensities=np.full(data.n, 1.0 / data.num_arms),
                   arm_names=data.arm_names, feature_names=data.feature_names)


def build_per_arm_binary_sets(data: Dataset) -> List[BinaryTrainingSet]:
    if data.kind != BANDIT:
        raise DataError("per-arm binary sets need bandit data")
    sets = []
    for a in range(data.num_arms):
        shown = data.actions == a
        clicked = data.rewards == 1
        sets.append(BinaryTrainingSet(a, data.X[shown & clicked], data.X[shown & ~clicked]))
    return sets


def undersample_negatives(s: BinaryTrainingSet, pos_to_neg_ratio: Tuple[int, int], seed) -> BinaryTrainingSet:
    """Drop negatives uniformly (without replacement) down to
    ``floor(n_pos * neg / pos)``; positives are never touched."""
    pos, neg = pos_to_neg_ratio
    if pos <= 0 or neg <= 0:
        raise ValueError("ratio terms must be positive integers")
    if s.n_pos == 0:
        raise DataError("arm has no positive examples")
    target = (s.n_pos * neg) // pos
    if s.n_neg <= target:
        return s
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    keep = np.sort(rng.choice(s.n_neg, size=target, replace=False))
    return BinaryTrainingSet(s.arm, s.positives, s.negatives[keep])


def undersample_all(sets, ratio, master_seed: int, *keys) -> List[BinaryTrainingSet]:
    """Undersample every arm with a stream derived from its index. Arms
    without positives are passed through unchanged for the trainer to flag."""
    out = []
    for s in sets:
        if s.n_pos == 0:
            out.append(s)
        else:
            out.append(undersample_negatives(s, ratio, derive_rng(master_seed, "undersample", *keys, s.arm)))
    return out


def parse_ratio(text: str):
    """``"1:2"`` -> (1, 2); ``"off"``/``None`` -> None."""
    if text is None or str(text).strip().lower() in ("off", "none", ""):
        return None
    a, _, b = str(text).partition(":")
    ratio = (int(a), int(b))
    if min(ratio) <= 0:
        raise ValueError(f"bad ratio {text!r}")
    return ratio


def _entropy(counts: np.ndarray) -> float:
    total = counts.sum()
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def information_gain(feature: np.ndarray, target: np.ndarray, bins: int = 10) -> float:
    """Entropy reduction (bits) of ``target`` given an equal-width binning of ``feature``."""
    _, t_idx = np.unique(target, return_inverse=True)
    h = _entropy(np.bincount(t_idx))
    lo, hi = float(feature.min()), float(feature.max())
    if hi == lo:
        return 0.0
    b_idx = np.minimum(((feature - lo) / (hi - lo) * bins).astype(np.int64), bins - 1)
    joint = np.zeros((bins, t_idx.max() + 1))
    np.add.at(joint, (b_idx, t_idx), 1)
    n = len(feature)
    h_cond = sum(row.sum() / n * _entropy(row) for row in joint if row.sum() > 0)
    return max(h - h_cond, 0.0)


def information_gain_select(data: Dataset, keep_fraction: float = 0.2, bins: int = 10) -> FeatureSelection:
    """Keep the ``ceil(d * keep_fraction)`` features with the highest gain
    against the label (full-information) or reward (bandit)."""
    if not 0.0 < keep_fraction <= 1.0:
        raise ValueError("keep_fraction must lie in (0, 1]")
    if bins < 1:
        raise ValueError("bins must be positive")
    target = data.target()
    if data.n == 0 or np.unique(target).size < 2:
        raise DataError("zero-entropy target")
    gains = np.array([information_gain(data.X[:, j], target, bins) for j in range(data.dimension)])
    n_keep = math.ceil(round(data.dimension * keep_fraction, 9))
    # stable sort on -gain keeps the lower index first among ties
    order = np.argsort(-gains, kind="stable")[:n_keep]
    kept = np.sort(order)
    return FeatureSelection(tuple(int(j) for j in kept), tuple(float(gains[j]) for j in kept))
