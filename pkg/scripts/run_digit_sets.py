"""Ranker versus classifier on the UCI digit sets, with and without 1:2
undersampling. Prints a table of mean true CTR and writes every run's
artifacts under ``--out``.

    python scripts/run_digit_sets.py [--iterations 1000000] [--repetitions 10] [--out results/digit_sets]
"""
import argparse
import json
from pathlib import Path

from aucpolicy.experiment import ExperimentConfig, run_experiment

DATA = Path(__file__).resolve().parents[1] / "data"


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--datasets", nargs="+", default=["optdigits", "pendigits"])
    ap.add_argument("--iterations", type=int, default=1_000_000)
    ap.add_argument("--repetitions", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--resplit", action="store_true")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="results/digit_sets")
    args = ap.parse_args(argv)

    table = {}
    for name in args.datasets:
        for ratio in (None, "1:2"):
            tag = f"{name}-{'us12' if ratio else 'none'}"
            cfg = ExperimentConfig(source="full", dataset=str(DATA / f"{name}.csv"), repetitions=args.repetitions,
                                   iterations=args.iterations, undersample=ratio, seed=args.seed,
                                   resplit=args.resplit, workers=args.workers, out=str(Path(args.out) / tag))
            summary, _ = run_experiment(cfg)
            for kind, e in summary["policies"].items():
                table[f"{name} {kind} undersample={ratio or 'off'}"] = (e["mean"], e["std"])
                spread = "" if e["std"] is None else f" +/- {e['std']:.4f}"
                print(f"{name:<10} {kind:<11} undersample={ratio or 'off':<4} "
                      f"mean true CTR {e['mean']:.4f}{spread}", flush=True)
    Path(args.out).mkdir(parents=True, exist_ok=True)
    (Path(args.out) / "table.json").write_text(json.dumps(table, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
