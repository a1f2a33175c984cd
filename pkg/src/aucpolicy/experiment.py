"""Repeated train/evaluate experiments comparing ranker and classifier policies.

Three data sources are supported:

* ``full``: a labelled dataset is split, the training part is converted to
  bandit feedback, and policies are scored by true CTR on the test part.
* ``bandit``: logged training data (and optionally a separate uniformly
  logged test file) scored by importance-weighted CTR with a lower bound.
* ``synthetic``: a fresh synthetic sparse-click campaign per repetition,
  scored like ``bandit`` and also by its exact expected CTR.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from .bundle import PolicyBundle, Preprocessor
from .data import BANDIT, FULL, Schema, Standardizer, load_dataset, split_train_test
from .evaluate import expected_ctr, importance_weighted_ctr, true_ctr
from .pipeline import ConversionConfig, convert_supervised_to_bandit, information_gain_select, parse_ratio
from .policy import KINDS, StochasticPolicy
from .seeding import derive_seed
from .suite import LAMBDA_GRID, SuiteConfig, train_suite
from .synthetic import SyntheticBanditSpec, generate_synthetic_bandit

log = logging.getLogger(__name__)

SOURCES = ("full", "bandit", "synthetic")


@dataclass
class ExperimentConfig:
    source: str = "full"
    dataset: Optional[str] = None
    schema: str = "full:label=label"
    test_dataset: Optional[str] = None
    synthetic: Optional[dict] = None
    train_fraction: float = 0.7
    resplit: bool = False
    repetitions: int = 10
    kinds: Tuple[str, ...] = KINDS
    undersample: Optional[str] = None
    undersample_kinds: Tuple[str, ...] = KINDS
    iterations: int = 1_000_000
    lambda_grid: Tuple[float, ...] = LAMBDA_GRID
    step_size_base: float = 1.0
    surrogate: str = "logistic"
    threshold_measure: str = "f1"
    validation_fraction: float = 0.2
    standardize: bool = True
    feature_fraction: Optional[float] = None
    feature_bins: int = 10
    epsilon: float = 0.2
    delta: float = 0.05
    seed: int = 0
    workers: int = 1
    out: Optional[str] = None

    def __post_init__(self):
        self.kinds = tuple(self.kinds)
        self.undersample_kinds = tuple(self.undersample_kinds)
        self.lambda_grid = tuple(float(v) for v in self.lambda_grid)
        if self.source not in SOURCES:
            raise ValueError(f"source must be one of {SOURCES}")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if not set(self.kinds) <= set(KINDS) or not self.kinds:
            raise ValueError(f"kinds must be drawn from {KINDS}")
        parse_ratio(self.undersample)
        if self.source != "synthetic":
            if not self.dataset:
                raise ValueError("a dataset path is required")
            for p in (self.dataset, self.test_dataset):
                if p is not None and not Path(p).exists():
                    raise FileNotFoundError(f"no such file: {p}")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("out")
        d.pop("workers")
        return d

    def suite_config(self, kind: str) -> SuiteConfig:
        ratio = parse_ratio(self.undersample) if kind in self.undersample_kinds else None
        return SuiteConfig(kind=kind, iterations=self.iterations, lambda_grid=self.lambda_grid,
                           step_size_base=self.step_size_base, surrogate=self.surrogate, undersample=ratio,
                           threshold_measure=self.threshold_measure,
                           validation_fraction=self.validation_fraction)


def _int_seed(master: int, *keys) -> int:
    return int(derive_seed(master, *keys).generate_state(1)[0])


def _prepare(cfg: ExperimentConfig, rep: int):
    """Return (bandit training data, test data, preprocessor, click probabilities or None)."""
    click_probs = None
    if cfg.source == "synthetic":
        spec_kw = dict(cfg.synthetic or {})
        for key in ("target_rates", "logging_probs"):
            if spec_kw.get(key) is not None:
                spec_kw[key] = tuple(spec_kw[key])
        spec = SyntheticBanditSpec(**{**spec_kw, "seed": _int_seed(cfg.seed, "synthetic", rep)})
        sim = generate_synthetic_bandit(spec)
        train, test = sim.train, sim.test
        click_probs = sim.test_click_probabilities()
    else:
        data = load_dataset(cfg.dataset, Schema.parse(cfg.schema))
        if cfg.test_dataset is not None:
            test_schema = Schema.parse(cfg.schema)
            if data.kind == BANDIT:
                test_schema = replace(test_schema, num_arms=data.num_arms)
            train, test = data, load_dataset(cfg.test_dataset, test_schema)
        else:
            split_rep = rep if cfg.resplit else 0
            train, test = split_train_test(data, cfg.train_fraction, _int_seed(cfg.seed, "split", split_rep))
        if cfg.source == "full":
            if train.kind != FULL:
                raise ValueError("source 'full' needs a full-information dataset")
            train = convert_supervised_to_bandit(
                train, ConversionConfig(_int_seed(cfg.seed, "convert", rep), train.num_arms))
        elif train.kind != BANDIT or test.kind != BANDIT:
            raise ValueError("source 'bandit' needs bandit-form train and test data")

    pre = Preprocessor()
    if cfg.feature_fraction is not None:
        pre.selection = information_gain_select(train, cfg.feature_fraction, cfg.feature_bins)
        train = pre.selection.apply(train)
    if cfg.standardize:
        pre.standardizer = Standardizer.fit(train.X)
        train = pre.standardizer.apply(train)
    test = pre.apply(test)
    return train, test, pre, click_probs


def run_repetition(cfg: ExperimentConfig, rep: int) -> List[dict]:
    rows = []
    try:
        train, test, pre, click_probs = _prepare(cfg, rep)
    except Exception as exc:  # a failed stage only voids this repetition
        log.error("repetition %d: data preparation failed: %s", rep, exc)
        return [_failed(rep, kind, exc) for kind in cfg.kinds]

    for kind in cfg.kinds:
        try:
            res = train_suite(train, cfg.suite_config(kind), cfg.seed, rep)
            bundle = PolicyBundle(res.policy, pre, cfg.epsilon, train.arm_names,
                                  {"chosen_lambda": res.chosen_lambda, "repetition": rep})
            row = {"repetition": rep, "policy": kind, "status": "ok",
                   "chosen_lambda": res.chosen_lambda, "untrainable_arms": len(res.untrainable),
                   "policy_id": bundle.identifier}
            if test.kind == FULL:
                report = true_ctr(res.policy, test)
                row.update(estimator=report.estimator, point=report.point, lcb=None, n=report.n)
            else:
                sp = StochasticPolicy(res.policy, cfg.epsilon)
                report = importance_weighted_ctr(sp, test, cfg.delta)
                row.update(estimator=report.estimator, point=report.point, lcb=report.lcb, n=report.n)
                if click_probs is not None:
                    row["expected_ctr"] = expected_ctr(sp, test.X, click_probs)
            if cfg.out:
                rep_dir = Path(cfg.out) / f"rep{rep:03d}"
                bundle.save(rep_dir / f"{kind}.bundle.json")
            rows.append(row)
        except Exception as exc:
            log.error("repetition %d, %s: %s", rep, kind, exc)
            rows.append(_failed(rep, kind, exc))
    return rows


def _failed(rep, kind, exc) -> dict:
    return {"repetition": rep, "policy": kind, "status": f"failed: {exc}", "point": None, "lcb": None}


def _mean_std(values):
    if not values:
        return None, None
    mean = math.fsum(values) / len(values)
    std = float(np.std(values, ddof=1)) if len(values) > 1 else None
    return mean, std


def summarize(cfg: ExperimentConfig, rows: List[dict]) -> dict:
    policies = {}
    for kind in cfg.kinds:
        ok = [r for r in rows if r["policy"] == kind and r["status"] == "ok"]
        points = [r["point"] for r in ok]
        entry = {"completed": len(ok), "incomplete": cfg.repetitions - len(ok)}
        entry["mean"], entry["std"] = _mean_std(points)
        lcbs = [r["lcb"] for r in ok if r.get("lcb") is not None]
        entry["mean_lcb"] = _mean_std(lcbs)[0]
        exp = [r["expected_ctr"] for r in ok if "expected_ctr" in r]
        entry["mean_expected_ctr"] = _mean_std(exp)[0]
        policies[kind] = entry
    notes = []
    if cfg.source == "full":
        notes.append("train/test split re-drawn every repetition" if cfg.resplit
                     else "single train/test split; bandit conversion re-randomized every repetition")
    if cfg.source == "synthetic":
        notes.append("synthetic stand-in for proprietary campaign data")
    return {"config": cfg.to_dict(), "notes": notes, "policies": policies,
            "estimator": next((r["estimator"] for r in rows if r["status"] == "ok"), None)}


ROW_FIELDS = ("repetition", "policy", "status", "estimator", "point", "lcb", "n", "expected_ctr",
              "chosen_lambda", "untrainable_arms", "policy_id")


def rows_to_csv(rows: List[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=ROW_FIELDS, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if r.get(k) is None else (repr(r[k]) if isinstance(r[k], float) else r[k]))
                    for k in ROW_FIELDS})
    return buf.getvalue()


def plot_data_csv(summary: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["policy", "point", "lcb"])
    for kind, e in summary["policies"].items():
        w.writerow([kind, "" if e["mean"] is None else repr(e["mean"]),
                    "" if e["mean_lcb"] is None else repr(e["mean_lcb"])])
    return buf.getvalue()


def run_experiment(cfg: ExperimentConfig):
    """Run every repetition and return ``(summary, rows)``; writes
    ``summary.json``, ``repetitions.csv`` and ``plot_data.csv`` under
    ``cfg.out`` when set. Output is independent of ``cfg.workers``."""
    reps = range(cfg.repetitions)
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            per_rep = list(ex.map(run_repetition, [cfg] * cfg.repetitions, reps))
    else:
        per_rep = [run_repetition(cfg, r) for r in reps]
    rows = [row for rep_rows in per_rep for row in rep_rows]
    summary = summarize(cfg, rows)
    if cfg.out:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
        (out / "repetitions.csv").write_text(rows_to_csv(rows))
        (out / "plot_data.csv").write_text(plot_data_csv(summary))
    return summary, rows
