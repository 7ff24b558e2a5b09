"""Misclassification of the boosted Bayes classifier over random splits.

With ``--csv`` (e.g. the file written by fetch_heart.py) the age/chd table is
used; otherwise the synthetic two-Gaussian task, whose Bayes error is printed
for comparison.

    python scripts/run_classification.py --csv data/heart.csv --out results/classification
"""

import argparse
from pathlib import Path

from boostnpmle.boosting import FitConfig
from boostnpmle.classify import SyntheticTask, read_labeled_csv, split_experiment
from boostnpmle.learners import LearnerSpec


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--csv", default=None)
    p.add_argument("--feature", default="age")
    p.add_argument("--label", default="chd")
    p.add_argument("--out", default="results/classification")
    p.add_argument("--learners", default="smooth-spline,gaussian-kernel")
    p.add_argument("-M", type=int, default=2000)
    p.add_argument("--splits", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args()

    if args.csv:
        data = read_labeled_csv(args.csv, args.feature, args.label)
        tag = Path(args.csv).stem
    else:
        data = SyntheticTask()
        tag = "synthetic"
        print(f"synthetic task, Bayes error {100 * data.bayes_error():.2f}%")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for kind in args.learners.split(","):
        cfg = FitConfig(LearnerSpec(kind), args.M, record_trace=False)
        table = split_experiment(data, args.splits, 0.7, cfg, args.seed, args.workers)
        table.write_csv(out / f"{tag}_{kind}.csv")
        s = table.summary()
        print(f"{kind:16s} train {100 * s['train_mean']:.2f} ({100 * s['train_sd']:.2f})  "
              f"test {100 * s['test_mean']:.2f} ({100 * s['test_sd']:.2f})  skipped {s['skipped']}")


if __name__ == "__main__":
    main()
