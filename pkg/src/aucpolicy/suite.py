"""Training a full policy (one model per arm) from logged bandit data.

The regularization strength is chosen from a grid by the importance-weighted
value of the greedy policy on a held-out validation slice, then the models
are refitted on all the data with the chosen value.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .data import BANDIT, DataError, Dataset
from .learn import (ArmModel, Surrogate, TrainConfig, learn_threshold, train_logistic_classifier,
                    train_ranker)
from .pipeline import BinaryTrainingSet, build_per_arm_binary_sets, undersample_all
from .policy import CLASSIFIER, KINDS, RANKER, ArmSuitePolicy, PolicyError
from .seeding import derive_rng

log = logging.getLogger(__name__)

LAMBDA_GRID = (0.01, 0.1, 1.0, 10.0)


@dataclass(frozen=True)
class SuiteConfig:
    kind: str = RANKER
    iterations: int = 1_000_000
    lambda_grid: Tuple[float, ...] = LAMBDA_GRID
    step_size_base: float = 1.0
    surrogate: str = "logistic"
    undersample: Optional[Tuple[int, int]] = None
    threshold_measure: str = "f1"
    validation_fraction: float = 0.2
    refit: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if not self.lambda_grid:
            raise ValueError("lambda grid is empty")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must lie in (0, 1)")
        Surrogate(self.surrogate)


@dataclass(eq=False)
class SuiteResult:
    policy: ArmSuitePolicy
    chosen_lambda: float
    validation_scores: Dict[float, float] = field(default_factory=dict)
    arm_counts: List[Tuple[int, int]] = field(default_factory=list)
    untrainable: List[int] = field(default_factory=list)


def _fit_arm(s: BinaryTrainingSet, cfg: SuiteConfig, lam: float, rng: np.random.Generator, dimension: int) -> ArmModel:
    bias = cfg.kind == CLASSIFIER
    if s.n_pos == 0 or (cfg.kind == RANKER and s.n_neg == 0):
        return ArmModel.untrainable_arm(s.arm, dimension, bias=bias, lam=lam, n_pos=s.n_pos, n_neg=s.n_neg)
    tc = TrainConfig(iterations=cfg.iterations, lam=lam, step_size_base=cfg.step_size_base,
                     surrogate=cfg.surrogate if cfg.kind == RANKER else Surrogate.LOGISTIC)
    if cfg.kind == RANKER:
        model = train_ranker(s, tc, rng=rng)
        threshold = learn_threshold(model, s, cfg.threshold_measure)
    else:
        model = train_logistic_classifier(s, tc, rng=rng)
        threshold = 0.0
    return ArmModel(model, threshold, lam=lam, n_pos=s.n_pos, n_neg=s.n_neg)


def fit_arms(data: Dataset, cfg: SuiteConfig, lam: float, seed: int, *keys) -> List[ArmModel]:
    """One model per arm at a fixed ``lam``; streams depend on (seed, keys, arm) only."""
    sets = build_per_arm_binary_sets(data)
    if cfg.undersample is not None:
        sets = undersample_all(sets, cfg.undersample, seed, *keys)
    return [_fit_arm(s, cfg, lam, derive_rng(seed, "fit", cfg.kind, *keys, s.arm), data.dimension)
            for s in sets]


def greedy_ips_value(p: ArmSuitePolicy, data: Dataset) -> float:
    """Importance-weighted value of the greedy policy: mean of ``r 1(pi(x)=a) / propensity``."""
    if np.any(data.propensities <= 0):
        raise DataError("unlogged propensity")
    hit = p.predict(data.X) == data.actions
    return float((data.rewards * hit / data.propensities).mean())


def train_suite(data: Dataset, cfg: SuiteConfig, seed: int, *keys) -> SuiteResult:
    if data.kind != BANDIT:
        raise DataError("policies are trained on bandit data")
    grid = tuple(float(l) for l in cfg.lambda_grid)
    scores: Dict[float, float] = {}
    fitted: Dict[float, List[ArmModel]] = {}
    if len(grid) == 1:
        chosen = grid[0]
    else:
        perm = derive_rng(seed, "validation", *keys).permutation(data.n)
        n_val = max(1, int(round(data.n * cfg.validation_fraction)))
        val, fit = data.subset(np.sort(perm[:n_val])), data.subset(np.sort(perm[n_val:]))
        for lam in grid:
            arms = fitted[lam] = fit_arms(fit, cfg, lam, seed, "select", *keys)
            try:
                scores[lam] = greedy_ips_value(ArmSuitePolicy(cfg.kind, arms), val)
            except PolicyError:
                scores[lam] = -math.inf
        # first maximum in grid order wins ties
        chosen = max(grid, key=lambda l: (scores[l], -grid.index(l)))
        log.info("%s: validation values %s -> lambda=%g", cfg.kind, scores, chosen)

    if cfg.refit or chosen not in fitted:
        arms = fit_arms(data, cfg, chosen, seed, "final", *keys)
    else:
        arms = fitted[chosen]
    untrainable = [m.model.arm for m in arms if m.untrainable]
    for a in untrainable:
        log.warning("%s: arm %d has no usable positives; excluded from prediction", cfg.kind, a)
    if len(untrainable) == len(arms):
        raise DataError("all arms are untrainable")
    counts = [(m.n_pos, m.n_neg) for m in arms]
    log.info("%s: per-arm (positives, negatives) = %s", cfg.kind, counts)
    return SuiteResult(ArmSuitePolicy(cfg.kind, arms), chosen, scores, counts, untrainable)
