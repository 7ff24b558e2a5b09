"""KL divergence over the GMM mixture weight and boosting iterations.

Defaults give the reduced 10-replicate run; ``--full`` uses 50 replicates.

    python scripts/run_gmm_sweep.py --learner smooth-spline --out results/gmm_sweep
"""

import argparse
from pathlib import Path

from boostnpmle.learners import LearnerSpec
from boostnpmle.simulate import kl_sweep


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="results/gmm_sweep")
    p.add_argument("--learner", default="smooth-spline")
    p.add_argument("--betas", default="0,0.25,0.5,0.75,1")
    p.add_argument("--Ms", default="1,2,5,10,20,50,100,200,500,1000")
    p.add_argument("--replicates", type=int, default=10)
    p.add_argument("--full", action="store_true", help="50 replicates")
    p.add_argument("-n", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args()

    reps = 50 if args.full else args.replicates
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    res = kl_sweep([float(b) for b in args.betas.split(",")], [int(m) for m in args.Ms.split(",")],
                   reps, n=args.n, learner=LearnerSpec(args.learner), base_seed=args.seed,
                   workers=args.workers)
    stem = out / f"sweep_{args.learner}_{reps}"
    res.write_csv(f"{stem}.csv", f"{stem}_aggregate.csv")
    for r in res.aggregate():
        print(f"beta={r['beta']:<5g} M={r['M']:<5d} mean KL={r['mean_kl']:.5f} sd={r['sd_kl']:.5f}")


if __name__ == "__main__":
    main()
