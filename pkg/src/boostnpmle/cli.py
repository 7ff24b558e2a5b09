"""Command-line interface.

Every command writes a manifest JSON next to its main output recording the
argument vector, the resolved configuration, seeds, package version, input
and output SHA-256 digests and wall-clock duration. ``replay`` re-runs a
manifest's argument vector.

Exit codes: 0 success, 2 bad input (including I/O), 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import likelihood as lk
from .boosting import Ensemble, FitConfig, fit
from .classify import SyntheticTask, read_labeled_csv, split_experiment
from .data import build_dataset, read_samples_csv, trapezoid_weights
from .errors import InputError, InvalidInputError, NumericalError, SweepError
from .learners import KINDS, LearnerSpec
from .simulate import DEFAULT_PARAMS, Distribution, kl_sweep

SEED_ENV = "BOOSTNPMLE_SEED"
EXIT_INPUT = 2
EXIT_NUMERICAL = 3


def _fmt(v):
    return format(float(v), ".17g")


def _default_seed():
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise InvalidInputError(f"{SEED_ENV}={raw!r} is not an integer") from None


def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def manifest_path(output):
    return Path(str(output) + ".manifest.json")


def write_manifest(args, config, seeds, inputs, outputs, started):
    out = {
        "command": args.command,
        "argv": args.argv,
        "config": config,
        "seeds": seeds,
        "version": __version__,
        "inputs": {str(p): sha256(p) for p in inputs},
        "outputs": {str(p): sha256(p) for p in outputs},
        "duration_s": time.perf_counter() - started,
    }
    path = manifest_path(outputs[0])
    path.write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
    return path


def _float_list(s):
    try:
        return [float(v) for v in s.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {s!r}") from None


def _int_list(s):
    try:
        return [int(v) for v in s.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from None


def _add_learner_flags(p, iterations):
    g = p.add_argument_group("weak learner")
    g.add_argument("--learner", choices=KINDS, default="smooth-spline",
                   help="weak learner family (default: %(default)s)")
    g.add_argument("--df", type=float, default=3.0,
                   help="smoothing-spline degrees of freedom, trace of the smoother (default: %(default)s)")
    g.add_argument("--lambda", dest="ridge_lambda", type=float, default=1e4,
                   help="kernel ridge penalty (default: %(default)g)")
    g.add_argument("--kernel", choices=["gaussian"], default="gaussian",
                   help="kernel shape; only gaussian is available")
    g.add_argument("--bandwidth", type=float, default=None,
                   help="kernel bandwidth; default is Silverman's rule on the sample")
    g.add_argument("--minsplit", type=int, default=30,
                   help="CART: smallest node (in knots) that may be split (default: %(default)s)")
    g.add_argument("--minbucket", type=int, default=None,
                   help="CART: smallest leaf in knots (default: round(minsplit/3))")
    if iterations is not None:
        g.add_argument("-M", "--iterations", type=int, default=iterations,
                       help="boosting iterations (default: %(default)s)")


def _learner_spec(args):
    return LearnerSpec(kind=args.learner, df=args.df, ridge_lambda=args.ridge_lambda,
                       bandwidth=args.bandwidth, minsplit=args.minsplit, minbucket=args.minbucket)


def cmd_fit(args, started):
    raw = read_samples_csv(args.input, column=args.column, header=args.header)
    ds = build_dataset(raw)
    cfg = FitConfig(_learner_spec(args), args.iterations, record_trace=False)
    ens, _ = fit(ds, cfg)
    ens.save(args.output)
    a = trapezoid_weights(ds)
    f = ens.evaluate_f(ds.knots)
    L = lk.log_likelihood(ds.freqs, a, f)
    S = lk.surrogate(ds.freqs, a, f)
    print(f"n={ds.n} N={ds.N} M={ens.M}")
    print(f"loglik={_fmt(L)}")
    print(f"surrogate={_fmt(S)}")
    print(f"Z={_fmt(ens.Z)}")
    config = {"fit": cfg.to_dict(), "column": args.column, "header": args.header,
              "bandwidth": ens.bandwidth}
    return write_manifest(args, config, [], [args.input], [args.output], started)


def cmd_density_grid(args, started):
    if args.points < 2:
        raise InvalidInputError("--points must be at least 2")
    ens = Ensemble.load(args.model)
    lo, hi = ens.support
    x = np.linspace(lo, hi, args.points)
    x[-1] = hi
    f = ens.evaluate_f(x)
    p = np.exp(f) / ens.Z
    with open(args.output, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x", "f", "density"])
        for row in zip(x, f, p):
            wr.writerow([_fmt(v) for v in row])
    return write_manifest(args, {"points": args.points}, [], [args.model], [args.output], started)


def cmd_simulate(args, started):
    params = {}
    for item in args.param or []:
        key, _, val = item.partition("=")
        try:
            params[key] = float(val)
        except ValueError:
            raise InvalidInputError(f"--param expects key=number, got {item!r}") from None
    if args.dist == "gmm":
        params.setdefault("beta", args.beta)
    dist = Distribution(args.dist, params)
    seed = args.seed
    raw = dist.sample(args.n, seed)
    with open(args.output, "w", newline="") as fh:
        wr = csv.writer(fh)
        if args.header:
            wr.writerow(["x"])
        for v in raw.values:
            wr.writerow([_fmt(v)])
    config = {"distribution": {"kind": dist.kind, "params": dist.params}, "n": args.n,
              "header": args.header}
    return write_manifest(args, config, [seed], [], [args.output], started)


def cmd_kl_sweep(args, started):
    seed = args.seed
    spec = _learner_spec(args)
    res = kl_sweep(args.betas, args.Ms, args.replicates, n=args.n, learner=spec,
                   base_seed=seed, grid_size=args.grid_size, workers=args.workers)
    agg = args.aggregate or str(args.output) + ".aggregate.csv"
    res.write_csv(args.output, agg)
    for r in res.aggregate():
        print(f"beta={r['beta']:g} M={r['M']} mean_kl={r['mean_kl']:.6g} sd={r['sd_kl']:.3g}")
    config = {"learner": spec.to_dict(), "betas": args.betas, "Ms": sorted(set(args.Ms)),
              "replicates": args.replicates, "n": args.n, "grid_size": args.grid_size}
    seeds = [seed + r for r in range(args.replicates)]
    return write_manifest(args, config, seeds, [], [args.output, agg], started)


def cmd_classify(args, started):
    seed = args.seed
    if args.input is None:
        data = SyntheticTask(size=args.synthetic_size)
        inputs = []
        source = {"synthetic": {"size": data.size, "bayes_error": data.bayes_error()}}
    else:
        data = read_labeled_csv(args.input, args.feature, args.label)
        inputs = [args.input]
        source = {"feature": args.feature, "label": args.label}
    cfg = FitConfig(_learner_spec(args), args.iterations, record_trace=False)
    table = split_experiment(data, args.splits, args.train_frac, cfg, seed, args.workers)
    table.write_csv(args.output)
    s = table.summary()
    if s["splits"]:
        print(f"splits={s['splits']} skipped={s['skipped']}")
        print(f"train_error={s['train_mean']:.6f} (sd {s['train_sd']:.6f})")
        print(f"test_error={s['test_mean']:.6f} (sd {s['test_sd']:.6f})")
    else:
        print("no split could be fitted")
    for r in table.skipped:
        print(f"skipped split {r['split']}: {r['reason']}", file=sys.stderr)
    config = {"fit": cfg.to_dict(), "splits": args.splits, "train_frac": args.train_frac, **source}
    seeds = [seed + i for i in range(args.splits)]
    return write_manifest(args, config, seeds, inputs, [args.output], started)


def cmd_replay(args, started):
    m = json.loads(Path(args.manifest).read_text())
    argv = m.get("argv")
    if not isinstance(argv, list) or not argv or argv[0] == "replay":
        raise InvalidInputError(f"{args.manifest}: no replayable argument vector")
    return main(argv)


def build_parser():
    p = argparse.ArgumentParser(prog="boostnpmle", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="fit a boosted density to a column of samples")
    f.add_argument("input", help="CSV file with the samples")
    f.add_argument("-o", "--output", required=True, help="model JSON to write")
    f.add_argument("--column", default="0", help="column index, or name with --header")
    f.add_argument("--header", action="store_true", help="the CSV has a header row")
    _add_learner_flags(f, iterations=200)

    g = sub.add_parser("density-grid", help="evaluate a model on a uniform grid over its support")
    g.add_argument("model", help="model JSON written by fit")
    g.add_argument("-o", "--output", required=True, help="CSV with columns x, f, density")
    g.add_argument("--points", type=int, default=1001, help="grid size (default: %(default)s)")

    s = sub.add_parser("simulate", help="draw seeded samples from a reference distribution")
    s.add_argument("--dist", choices=sorted(DEFAULT_PARAMS), required=True)
    s.add_argument("--beta", type=float, default=0.5, help="gmm mixture weight (default: %(default)s)")
    s.add_argument("--param", action="append", metavar="KEY=VALUE",
                   help="override a distribution parameter; repeatable")
    s.add_argument("-n", type=int, default=500, help="sample size (default: %(default)s)")
    s.add_argument("--seed", type=int, default=None, help=f"default: ${SEED_ENV} or 0")
    s.add_argument("--header", action="store_true", help="write an 'x' header row")
    s.add_argument("-o", "--output", required=True)

    k = sub.add_parser("kl-sweep", help="KL divergence of GMM fits over mixture weights and M")
    k.add_argument("--betas", type=_float_list, default=[0.0, 0.25, 0.5, 0.75, 1.0],
                   help="comma-separated mixture weights (default: 0,0.25,0.5,0.75,1)")
    k.add_argument("--Ms", type=_int_list, default=[1, 10, 50, 100, 200, 500, 1000],
                   help="comma-separated iteration counts (default: 1,10,50,100,200,500,1000)")
    k.add_argument("--replicates", type=int, default=10, help="(default: %(default)s)")
    k.add_argument("-n", type=int, default=500, help="sample size (default: %(default)s)")
    k.add_argument("--grid-size", type=int, default=2001, help="KL quadrature points (default: %(default)s)")
    k.add_argument("--seed", type=int, default=None,
                   help=f"base seed; replicate r uses seed+r (default: ${SEED_ENV} or 0)")
    k.add_argument("--workers", type=int, default=1, help="parallel processes (default: %(default)s)")
    k.add_argument("-o", "--output", required=True, help="per-replicate CSV")
    k.add_argument("--aggregate", default=None, help="aggregate CSV (default: OUTPUT.aggregate.csv)")
    _add_learner_flags(k, iterations=None)  # --Ms sets the iterations

    c = sub.add_parser("classify", help="two-class Bayes classifier over random train/test splits")
    c.add_argument("input", nargs="?", default=None,
                   help="labeled CSV with a header; omit to use the synthetic Gaussian task")
    c.add_argument("--feature", default="age", help="feature column (default: %(default)s)")
    c.add_argument("--label", default="chd", help="0/1 label column (default: %(default)s)")
    c.add_argument("--synthetic-size", type=int, default=SyntheticTask.size,
                   help="rows per split for the synthetic task (default: %(default)s)")
    c.add_argument("--splits", type=int, default=100, help="(default: %(default)s)")
    c.add_argument("--train-frac", type=float, default=0.7, help="(default: %(default)s)")
    c.add_argument("--seed", type=int, default=None,
                   help=f"base seed; split i uses seed+i (default: ${SEED_ENV} or 0)")
    c.add_argument("--workers", type=int, default=1, help="parallel processes (default: %(default)s)")
    c.add_argument("-o", "--output", required=True, help="per-split error CSV")
    _add_learner_flags(c, iterations=2000)

    r = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    r.add_argument("manifest")
    return p


COMMANDS = {"fit": cmd_fit, "density-grid": cmd_density_grid, "simulate": cmd_simulate,
            "kl-sweep": cmd_kl_sweep, "classify": cmd_classify, "replay": cmd_replay}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    args.argv = argv
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    started = time.perf_counter()
    try:
        if getattr(args, "seed", 0) is None:
            # pin the resolved seed so the manifest replays without the environment
            args.seed = _default_seed()
            args.argv = argv + ["--seed", str(args.seed)]
        result = COMMANDS[args.command](args, started)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericalError, SweepError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if isinstance(result, int):
        return result
    print(f"manifest: {result}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
