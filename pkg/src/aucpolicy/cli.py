"""Command-line entry point: ``aucpolicy <subcommand> ...``.

Exit codes: 0 success, 1 runtime or data error, 2 usage error (including
missing input files).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .bundle import PolicyBundle, Preprocessor
from .data import BANDIT, FULL, DataError, Schema, Standardizer, load_dataset, write_dataset
from .evaluate import importance_weighted_ctr, true_ctr
from .experiment import ExperimentConfig, run_experiment
from .pipeline import (ConversionConfig, FeatureSelection, convert_supervised_to_bandit,
                       information_gain_select, parse_ratio)
from .policy import KINDS
from .suite import LAMBDA_GRID, SuiteConfig, train_suite
from .synthetic import BANK_IMPRESSIONS, BANK_RATES, SyntheticBanditSpec, generate_synthetic_bandit



class UsageError(Exception):
    pass


def _floats(text):
    return tuple(float(v) for v in str(text).split(",") if v.strip())


def _require(path):
    if path is None or not Path(path).exists():
        raise UsageError(f"input file not found: {path}")
    return path


def _write_json(obj, out):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    print(text, end="")


def cmd_convert(args):
    schema = Schema.parse(args.schema or "full:label=label")
    if args.k is not None:
        schema = replace(schema, num_arms=args.k)
    data = load_dataset(_require(args.input), schema)
    if data.kind != FULL:
        raise DataError("convert needs a full-information dataset")
    bandit = convert_supervised_to_bandit(data, ConversionConfig(args.seed, data.num_arms))
    write_dataset(bandit, args.out)
    print(f"records={bandit.n} arms={bandit.num_arms} reward_rate={bandit.rewards.mean():.6f} -> {args.out}")


def cmd_select_features(args):
    data = load_dataset(_require(args.input), Schema.parse(args.schema or "full:label=label"))
    sel = information_gain_select(data, args.keep_fraction, args.bins)
    report = sel.to_dict()
    report["feature_names"] = [data.feature_names[j] for j in sel.kept_indices]
    report["dimension"] = data.dimension
    _write_json(report, args.out)


def cmd_train(args):
    schema = Schema.parse(args.schema or "bandit")
    if args.k is not None:
        schema = replace(schema, num_arms=args.k)
    data = load_dataset(_require(args.input), schema)
    if data.kind != BANDIT:
        raise DataError("train needs bandit data (run `convert` first)")
    pre = Preprocessor()
    if args.features:
        pre.selection = FeatureSelection.from_dict(json.loads(Path(_require(args.features)).read_text()))
        data = pre.selection.apply(data)
    if args.standardize:
        pre.standardizer = Standardizer.fit(data.X)
        data = pre.standardizer.apply(data)
    cfg = SuiteConfig(kind=args.kind, iterations=args.iterations, lambda_grid=_floats(args.lambda_grid),
                      step_size_base=args.step_size, surrogate=args.surrogate,
                      undersample=parse_ratio(args.undersample), threshold_measure=args.measure,
                      validation_fraction=args.validation_fraction)
    res = train_suite(data, cfg, args.seed)
    for a, (p, n) in enumerate(res.arm_counts):
        print(f"arm {a}: positives={p} negatives={n}" + (" untrainable, excluded" if a in res.untrainable else ""))
    settings = {"kind": args.kind, "iterations": args.iterations, "surrogate": args.surrogate,
                "step_size_base": args.step_size, "seed": args.seed, "lambda_grid": list(cfg.lambda_grid),
                "chosen_lambda": res.chosen_lambda, "undersample": args.undersample,
                "threshold_measure": args.measure,
                "validation_scores": {repr(k): v for k, v in res.validation_scores.items()},
                "training_fingerprint": data.fingerprint()}
    bundle = PolicyBundle(res.policy, pre, args.epsilon, data.arm_names, settings)
    bundle.save(args.out)
    print(f"kind={args.kind} arms={res.policy.num_arms} untrainable={res.untrainable} "
          f"lambda={res.chosen_lambda:g} -> {args.out}")


def _bundle_and_data(args, default_schema):
    bundle = PolicyBundle.load(_require(args.bundle))
    schema = Schema.parse(args.schema or default_schema)
    if schema.kind == BANDIT and schema.num_arms is None:
        schema = replace(schema, num_arms=bundle.policy.num_arms)
    data = load_dataset(_require(args.input), schema)
    return bundle, bundle.preprocess.apply(data)


def cmd_eval_full(args):
    bundle, data = _bundle_and_data(args, "full:label=label")
    report = true_ctr(bundle.policy, data)
    report.policy_id = bundle.identifier
    _write_json(report.to_dict(), args.out)


def cmd_eval_bandit(args):
    bundle, data = _bundle_and_data(args, "bandit")
    eps = bundle.epsilon if args.epsilon is None else args.epsilon
    report = importance_weighted_ctr(bundle.stochastic(eps), data, args.delta, clip=args.clip)
    report.policy_id = bundle.identifier
    out = report.to_dict()
    out["epsilon"] = eps
    _write_json(out, args.out)


def cmd_simulate(args):
    rates = _floats(args.rates) if args.rates else BANK_RATES
    k = args.k or len(rates)
    if len(rates) == 1 and k > 1:
        rates = rates * k
    logging_probs = None
    if args.logging == "impressions":
        imp = np.asarray(BANK_IMPRESSIONS[:k], dtype=np.float64)
        logging_probs = tuple(imp / imp.sum())
    spec = SyntheticBanditSpec(num_arms=k, dimension=args.dim, target_rates=rates, n_train=args.n_train,
                               n_test=args.n_test, seed=args.seed, weight_scale=args.weight_scale,
                               logging_probs=logging_probs)
    sim = generate_synthetic_bandit(spec)
    out = Path(args.out)
    write_dataset(sim.train, out / "train.csv")
    write_dataset(sim.test, out / "test.csv")
    (out / "click_model.json").write_text(json.dumps(
        {"weights": sim.model.weights.tolist(), "biases": sim.model.biases.tolist(),
         "target_rates": list(rates), "note": "synthetic stand-in for proprietary campaign data"},
        indent=2) + "\n")
    for name, d in (("train", sim.train), ("test", sim.test)):
        rate = [float(d.rewards[d.actions == a].mean()) if np.any(d.actions == a) else 0.0 for a in range(k)]
        print(f"{name}: n={d.n} per-arm click rate={[round(r, 5) for r in rate]}")


def cmd_experiment(args):
    base = {}
    if args.config:
        base = json.loads(Path(_require(args.config)).read_text())
    overrides = {
        "dataset": args.input, "schema": args.schema, "test_dataset": args.test,
        "repetitions": args.repetitions, "undersample": args.undersample, "iterations": args.iterations,
        "epsilon": args.epsilon, "delta": args.delta, "seed": args.seed, "out": args.out,
        "surrogate": args.surrogate, "source": args.source, "workers": args.workers,
        "feature_fraction": args.feature_fraction,
    }
    if args.lambda_grid:
        overrides["lambda_grid"] = _floats(args.lambda_grid)
    if args.kind:
        overrides["kinds"] = tuple(args.kind)
    if args.resplit:
        overrides["resplit"] = True
    base.update({k: v for k, v in overrides.items() if v is not None})
    for p in (base.get("dataset"), base.get("test_dataset")):
        if p is not None:
            _require(p)
    cfg = ExperimentConfig.from_dict(base)
    summary, _ = run_experiment(cfg)
    for kind, e in summary["policies"].items():
        mean = "n/a" if e["mean"] is None else f"{e['mean']:.4f}"
        std = "" if e["std"] is None else f" +/- {e['std']:.4f}"
        lcb = "" if e["mean_lcb"] is None else f"  mean lcb {e['mean_lcb']:.4f}"
        print(f"{kind:<11} {summary['estimator']}: {mean}{std}{lcb}  ({e['completed']}/{cfg.repetitions} reps)")
    for note in summary["notes"]:
        print(f"note: {note}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--schema", default=None,
                        help="column layout, e.g. 'full:label=label' or 'bandit:action=action,reward=reward'")
    common.add_argument("--out", default=None)
    common.add_argument("--k", type=int, default=None, help="number of arms")
    common.add_argument("-v", "--verbose", action="store_true")

    train_opts = argparse.ArgumentParser(add_help=False)
    train_opts.add_argument("--iterations", type=int, default=None)
    train_opts.add_argument("--lambda-grid", default=None, help="comma-separated l2 strengths")
    train_opts.add_argument("--surrogate", choices=("logistic", "hinge"), default=None)
    train_opts.add_argument("--undersample", default=None, help="positive:negative ratio such as 1:2, or 'off'")
    train_opts.add_argument("--epsilon", type=float, default=None)

    p = argparse.ArgumentParser(prog="aucpolicy", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("convert", parents=[common], help="full-information CSV -> bandit CSV")
    s.add_argument("--input", required=True)
    s.set_defaults(func=cmd_convert, out_required=True)

    s = sub.add_parser("select-features", parents=[common], help="information-gain feature selection")
    s.add_argument("--input", required=True)
    s.add_argument("--keep-fraction", type=float, default=0.2)
    s.add_argument("--bins", type=int, default=10)
    s.set_defaults(func=cmd_select_features)

    s = sub.add_parser("train", parents=[common, train_opts], help="train a ranker or classifier policy")
    s.add_argument("--input", required=True)
    s.add_argument("--kind", choices=KINDS, default="ranker")
    s.add_argument("--features", default=None, help="report written by select-features")
    s.add_argument("--measure", choices=("f1", "precision", "recall"), default="f1")
    s.add_argument("--step-size", type=float, default=1.0)
    s.add_argument("--validation-fraction", type=float, default=0.2)
    s.add_argument("--no-standardize", dest="standardize", action="store_false")
    s.set_defaults(func=cmd_train, out_required=True)

    s = sub.add_parser("eval-full", parents=[common], help="true CTR on a labelled test set")
    s.add_argument("--bundle", required=True)
    s.add_argument("--input", required=True)
    s.set_defaults(func=cmd_eval_full)

    s = sub.add_parser("eval-bandit", parents=[common], help="importance-weighted CTR and lower bound")
    s.add_argument("--bundle", required=True)
    s.add_argument("--input", required=True)
    s.add_argument("--epsilon", type=float, default=None)
    s.add_argument("--delta", type=float, default=0.05)
    s.add_argument("--clip", type=float, default=None, help="cap on importance ratios (off by default)")
    s.set_defaults(func=cmd_eval_bandit)

    s = sub.add_parser("simulate", parents=[common], help="write a synthetic sparse-click campaign")
    s.add_argument("--dim", type=int, default=20)
    s.add_argument("--rates", default=None, help="comma-separated per-arm click rates")
    s.add_argument("--n-train", type=int, default=100_000)
    s.add_argument("--n-test", type=int, default=100_000)
    s.add_argument("--weight-scale", type=float, default=2.0)
    s.add_argument("--logging", choices=("uniform", "impressions"), default="uniform")
    s.set_defaults(func=cmd_simulate, out_required=True)

    s = sub.add_parser("experiment", parents=[common, train_opts], help="repeated end-to-end comparison")
    s.add_argument("--config", default=None, help="JSON file with ExperimentConfig keys; flags override it")
    s.add_argument("--input", default=None)
    s.add_argument("--test", default=None)
    s.add_argument("--source", choices=("full", "bandit", "synthetic"), default=None)
    s.add_argument("--kind", action="append", choices=KINDS, default=None)
    s.add_argument("--repetitions", type=int, default=None)
    s.add_argument("--delta", type=float, default=None)
    s.add_argument("--feature-fraction", type=float, default=None)
    s.add_argument("--resplit", action="store_true")
    s.add_argument("--workers", type=int, default=None)
    s.set_defaults(func=cmd_experiment)
    return p


def _fill_defaults(args):
    if args.command != "experiment" and args.seed is None:
        args.seed = 0
    if args.command == "train":
        args.iterations = args.iterations or 1_000_000
        args.lambda_grid = args.lambda_grid or ",".join(str(v) for v in LAMBDA_GRID)
        args.surrogate = args.surrogate or "logistic"
        args.epsilon = 0.0 if args.epsilon is None else args.epsilon


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "out_required", False) and not args.out:
        parser.error(f"{args.command} needs --out")
    _fill_defaults(args)
    try:
        args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DataError, ValueError, OSError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
