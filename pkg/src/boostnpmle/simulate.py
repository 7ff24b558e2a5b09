"""Ground-truth distributions, seeded sampling and KL evaluation.

Sampling uses numpy's ``Generator(PCG64(seed))``; the same
``(distribution, n, seed)`` always yields the same sample.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import special

from .boosting import Ensemble, FitConfig, fit
from .data import RawSamples, build_dataset
from .errors import BoostNPMLEError, InvalidSpecError, SweepError
from .learners import LearnerSpec


PDF_FLOOR = 1e-300

# default parameters per distribution family
DEFAULT_PARAMS = {
    "uniform": {"lo": 0.0, "hi": 1.0},
    "exponential": {"rate": 1.0},
    "laplace-mixture": {"w": 0.5, "loc1": -2.0, "scale1": 1.0, "loc2": 2.0, "scale2": 1.0},
    "student-t": {"nu": 3.0},
    "gmm": {"beta": 0.5, "mu1": 2.5, "mu2": -2.5, "var": 2.0},
}


def _normal_pdf(x, mu, var):
    return np.exp(-0.5 * (x - mu) ** 2 / var) / math.sqrt(2 * math.pi * var)


def _normal_cdf(x, mu, var):
    return special.ndtr((x - mu) / math.sqrt(var))


def _laplace_pdf(x, loc, scale):
    return np.exp(-np.abs(x - loc) / scale) / (2 * scale)


def _laplace_cdf(x, loc, scale):
    z = (x - loc) / scale
    return np.where(z < 0, 0.5 * np.exp(np.minimum(z, 0)), 1 - 0.5 * np.exp(-np.maximum(z, 0)))


@dataclass(frozen=True)
class Distribution:
    """A ground-truth density: ``kind`` plus its parameters.

    ``gmm`` is ``beta * N(mu1, var) + (1 - beta) * N(mu2, var)``;
    ``laplace-mixture`` is ``w * Laplace(loc1, scale1) + (1 - w) * Laplace(loc2, scale2)``.
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in DEFAULT_PARAMS:
            raise InvalidSpecError(f"unknown distribution {self.kind!r}")
        merged = {**DEFAULT_PARAMS[self.kind], **self.params}
        unknown = set(merged) - set(DEFAULT_PARAMS[self.kind])
        if unknown:
            raise InvalidSpecError(f"{self.kind}: unknown parameters {sorted(unknown)}")
        p = {k: float(v) for k, v in merged.items()}
        bad = None
        if self.kind == "uniform" and not p["lo"] < p["hi"]:
            bad = "need lo < hi"
        elif self.kind == "exponential" and not p["rate"] > 0:
            bad = "rate must be positive"
        elif self.kind == "laplace-mixture" and not (0 <= p["w"] <= 1 and p["scale1"] > 0 and p["scale2"] > 0):
            bad = "need 0 <= w <= 1 and positive scales"
        elif self.kind == "student-t" and not p["nu"] > 0:
            bad = "nu must be positive"
        elif self.kind == "gmm" and not (0 <= p["beta"] <= 1 and p["var"] > 0):
            bad = "need 0 <= beta <= 1 and var > 0"
        if bad or not all(math.isfinite(v) for v in p.values()):
            raise InvalidSpecError(f"{self.kind}: {bad or 'non-finite parameter'}")
        object.__setattr__(self, "params", p)

    @classmethod
    def uniform(cls, lo=0.0, hi=1.0):
        return cls("uniform", {"lo": lo, "hi": hi})

    @classmethod
    def exponential(cls, rate=1.0):
        return cls("exponential", {"rate": rate})

    @classmethod
    def laplace_mixture(cls, w=0.5, loc1=-2.0, scale1=1.0, loc2=2.0, scale2=1.0):
        return cls("laplace-mixture", dict(w=w, loc1=loc1, scale1=scale1, loc2=loc2, scale2=scale2))

    @classmethod
    def student_t(cls, nu=3.0):
        return cls("student-t", {"nu": nu})

    @classmethod
    def gmm(cls, beta, mu1=2.5, mu2=-2.5, var=2.0):
        return cls("gmm", dict(beta=beta, mu1=mu1, mu2=mu2, var=var))

    def describe(self):
        args = ", ".join(f"{k}={v:g}" for k, v in self.params.items())
        return f"{self.kind}({args})"

    def pdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        p = self.params
        if self.kind == "uniform":
            out = np.where((x >= p["lo"]) & (x <= p["hi"]), 1.0 / (p["hi"] - p["lo"]), 0.0)
        elif self.kind == "exponential":
            out = np.where(x >= 0, p["rate"] * np.exp(-p["rate"] * np.maximum(x, 0)), 0.0)
        elif self.kind == "laplace-mixture":
            out = (p["w"] * _laplace_pdf(x, p["loc1"], p["scale1"])
                   + (1 - p["w"]) * _laplace_pdf(x, p["loc2"], p["scale2"]))
        elif self.kind == "student-t":
            nu = p["nu"]
            logc = special.gammaln((nu + 1) / 2) - special.gammaln(nu / 2) - 0.5 * math.log(nu * math.pi)
            out = np.exp(logc - (nu + 1) / 2 * np.log1p(x * x / nu))
        else:
            out = (p["beta"] * _normal_pdf(x, p["mu1"], p["var"])
                   + (1 - p["beta"]) * _normal_pdf(x, p["mu2"], p["var"]))
        return out[()] if out.ndim == 0 else out

    def cdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        p = self.params
        if self.kind == "uniform":
            out = np.clip((x - p["lo"]) / (p["hi"] - p["lo"]), 0.0, 1.0)
        elif self.kind == "exponential":
            out = np.where(x > 0, -np.expm1(-p["rate"] * np.maximum(x, 0)), 0.0)
        elif self.kind == "laplace-mixture":
            out = (p["w"] * _laplace_cdf(x, p["loc1"], p["scale1"])
                   + (1 - p["w"]) * _laplace_cdf(x, p["loc2"], p["scale2"]))
        elif self.kind == "student-t":
            out = special.stdtr(p["nu"], x)
        else:
            out = (p["beta"] * _normal_cdf(x, p["mu1"], p["var"])
                   + (1 - p["beta"]) * _normal_cdf(x, p["mu2"], p["var"]))
        return out[()] if np.ndim(out) == 0 else out

    def sample(self, n, seed) -> RawSamples:
        if int(n) < 1:
            raise InvalidSpecError("sample size must be positive")
        rng = np.random.Generator(np.random.PCG64(int(seed)))
        p = self.params
        n = int(n)
        if self.kind == "uniform":
            x = rng.uniform(p["lo"], p["hi"], n)
        elif self.kind == "exponential":
            x = rng.exponential(1.0 / p["rate"], n)
        elif self.kind == "laplace-mixture":
            first = rng.random(n) < p["w"]
            x = np.where(first, rng.laplace(p["loc1"], p["scale1"], n),
                         rng.laplace(p["loc2"], p["scale2"], n))
        elif self.kind == "student-t":
            x = rng.standard_t(p["nu"], n)
        else:
            first = rng.random(n) < p["beta"]
            sd = math.sqrt(p["var"])
            x = np.where(first, rng.normal(p["mu1"], sd, n), rng.normal(p["mu2"], sd, n))
        return RawSamples(x)


REFERENCE_DISTRIBUTIONS = {
    "uniform": Distribution.uniform(),
    "exponential": Distribution.exponential(),
    "laplace-mixture": Distribution.laplace_mixture(),
    "student-t": Distribution.student_t(),
}


@dataclass(frozen=True)
class KLResult:
    kl: float
    truncated_mass: float
    support: tuple


def kl_from_log_density(dist: Distribution, grid, log_phat) -> float:
    p = dist.pdf(grid)
    safe_p = np.maximum(p, PDF_FLOOR)
    lq = np.maximum(log_phat, math.log(PDF_FLOOR))
    integrand = np.where(p < PDF_FLOOR, 0.0, p * (np.log(safe_p) - lq))
    return float(np.trapezoid(integrand, grid))


def kl_divergence(dist: Distribution, ens: Ensemble, grid_size=2001) -> KLResult:
    """Trapezoid estimate of ``KL(p || p_hat)`` over the support of ``p_hat``.

    ``p_hat`` is zero outside ``[x_1, x_n]``, so the integral is confined to
    that interval; the true mass left outside is reported alongside.
    """
    if grid_size < 101:
        raise InvalidSpecError("grid_size must be at least 101")
    lo, hi = ens.support
    grid = np.linspace(lo, hi, int(grid_size))
    log_phat = ens.evaluate_f(grid) - math.log(ens.Z)
    mass_out = float(dist.cdf(lo) + (1.0 - dist.cdf(hi)))
    return KLResult(kl_from_log_density(dist, grid, log_phat), mass_out, (lo, hi))


def kl_path(dist: Distribution, ens: Ensemble, Ms, grid_size=2001) -> dict:
    """KL of every prefix ensemble ``ens.prefix(m)`` for ``m`` in ``Ms``."""
    return {m: kl_divergence(dist, ens.prefix(m), grid_size) for m in sorted(set(Ms))}


@dataclass
class SweepResult:
    rows: list
    betas: list
    Ms: list
    replicates: int
    learner: dict
    n: int

    def mean(self, beta, M):
        vals = [r["kl"] for r in self.rows if r["beta"] == beta and r["M"] == M]
        return float(np.mean(vals)) if vals else math.nan

    def aggregate(self):
        out = []
        for beta in self.betas:
            for M in self.Ms:
                vals = np.array([r["kl"] for r in self.rows if r["beta"] == beta and r["M"] == M])
                if vals.size:
                    sd = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
                    out.append({"beta": beta, "M": M, "mean_kl": float(vals.mean()),
                                "sd_kl": sd, "count": int(vals.size)})
        return out

    def write_csv(self, path, aggregate_path=None):
        cols = ["beta", "M", "replicate", "seed", "kl", "truncated_mass"]
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(cols)
            for r in self.rows:
                wr.writerow([_fmt(r[c]) for c in cols])
        if aggregate_path is not None:
            cols = ["beta", "M", "mean_kl", "sd_kl", "count"]
            with open(aggregate_path, "w", newline="") as fh:
                wr = csv.writer(fh)
                wr.writerow(cols)
                for r in self.aggregate():
                    wr.writerow([_fmt(r[c]) for c in cols])


def _fmt(v):
    return format(v, ".17g") if isinstance(v, float) else str(v)


def _sweep_task(args):
    beta, rep, seed, Ms, n, spec, grid_size = args
    dist = Distribution.gmm(beta)
    try:
        ds = build_dataset(dist.sample(n, seed))
        ens, _ = fit(ds, FitConfig(spec, max(Ms), record_trace=False))
    except BoostNPMLEError as exc:
        return beta, rep, seed, None, f"{type(exc).__name__}: {exc}"
    path = kl_path(dist, ens, Ms, grid_size)
    return beta, rep, seed, {m: (r.kl, r.truncated_mass) for m, r in path.items()}, None


def kl_sweep(betas, Ms, replicates, n=500, learner: Optional[LearnerSpec] = None,
             base_seed=0, grid_size=2001, workers=1) -> SweepResult:
    """KL of boosted fits to GMM samples across mixture weights and iteration counts.

    Each ``(beta, replicate)`` draws ``n`` points with seed
    ``base_seed + replicate``, fits once with ``max(Ms)`` iterations and
    reads every ``M`` in ``Ms`` off the prefix ensembles. A failed fit raises
    :class:`SweepError` naming its coordinates.
    """
    learner = learner or LearnerSpec()
    Ms = sorted({int(m) for m in Ms})
    if not Ms or Ms[0] < 1 or replicates < 1 or not len(betas):
        raise InvalidSpecError("need non-empty betas, Ms >= 1 and replicates >= 1")
    tasks = [(float(beta), rep, int(base_seed) + rep, Ms, n, learner, grid_size)
             for beta in betas for rep in range(replicates)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_sweep_task, tasks))
    else:
        results = [_sweep_task(t) for t in tasks]
    rows = []
    for beta, rep, seed, kls, err in results:
        if err is not None:
            raise SweepError(beta, Ms[-1], rep, err)
        for m in Ms:
            kl, mass = kls[m]
            rows.append({"beta": beta, "M": m, "replicate": rep, "seed": seed,
                         "kl": kl, "truncated_mass": mass})
    return SweepResult(rows, [float(b) for b in betas], Ms, replicates, learner.to_dict(), n)
