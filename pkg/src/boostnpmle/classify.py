"""Two-class Bayes classifier on boosted class-conditional densities."""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate, stats

from .boosting import FitConfig, fit
from .data import build_dataset
from .errors import BoostNPMLEError, InfeasibleClassError, InvalidInputError

CLASSES = (0, 1)


@dataclass(frozen=True)
class LabeledDataset:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64).ravel()
        y = np.asarray(self.y).ravel()
        if x.shape != y.shape:
            raise InvalidInputError("feature and label columns differ in length")
        if not np.all(np.isfinite(x)):
            raise InvalidInputError("non-finite feature value")
        if not np.all(np.isin(y, CLASSES)):
            raise InvalidInputError("labels must be 0 or 1")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y.astype(np.int64))

    def __len__(self):
        return int(self.x.size)

    def subset(self, idx):
        return LabeledDataset(self.x[idx], self.y[idx])


@dataclass
class BayesModel:
    densities: dict
    priors: dict

    def scores(self, x):
        """``prior_c * p_c(x)`` per class, with ``p_c = 0`` off class c's support."""
        x = np.asarray(x, dtype=np.float64)
        return {c: self.priors[c] * self.densities[c].density_or_zero(x) for c in CLASSES}

    def predict(self, x):
        x = np.asarray(x, dtype=np.float64)
        s = self.scores(x)
        label = np.where(s[1] > s[0], 1, 0)
        # off both supports: fall back to the larger prior
        both_zero = (s[0] == 0) & (s[1] == 0)
        fallback = 1 if self.priors[1] > self.priors[0] else 0
        label = np.where(both_zero, fallback, label)
        return int(label) if label.ndim == 0 else label

    def error_rate(self, data: LabeledDataset) -> float:
        return float(np.mean(self.predict(data.x) != data.y))


def fit_bayes(train: LabeledDataset, cfg: FitConfig) -> BayesModel:
    n = len(train)
    densities, priors = {}, {}
    for c in CLASSES:
        xc = train.x[train.y == c]
        if xc.size == 0:
            raise InfeasibleClassError(c, "no training samples")
        try:
            ds = build_dataset(xc)
            cfg.learner.check_feasible(ds.n)
        except BoostNPMLEError as exc:
            raise InfeasibleClassError(c, str(exc)) from None
        densities[c], _ = fit(ds, cfg)
        priors[c] = xc.size / n
    return BayesModel(densities, priors)


@dataclass
class SplitTable:
    rows: list = field(default_factory=list)
    skipped: list = field(default_factory=list)

    def _col(self, key):
        return np.array([r[key] for r in self.rows])

    def summary(self):
        if not self.rows:
            return {"splits": 0}
        tr, te = self._col("train_error"), self._col("test_error")
        sd = (lambda a: float(a.std(ddof=1)) if a.size > 1 else 0.0)
        return {"splits": len(self.rows), "skipped": len(self.skipped),
                "train_mean": float(tr.mean()), "train_sd": sd(tr),
                "test_mean": float(te.mean()), "test_sd": sd(te)}

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["split", "seed", "train_error", "test_error"])
            for r in self.rows:
                wr.writerow([r["split"], r["seed"], format(r["train_error"], ".17g"),
                             format(r["test_error"], ".17g")])
            s = self.summary()
            if s["splits"]:
                wr.writerow(["mean", "", format(s["train_mean"], ".17g"), format(s["test_mean"], ".17g")])
                wr.writerow(["sd", "", format(s["train_sd"], ".17g"), format(s["test_sd"], ".17g")])
            for r in self.skipped:
                wr.writerow([r["split"], r["seed"], "skipped", r["reason"]])


def random_split(n, train_frac, seed):
    """Uniform random train/test index split; ``round(train_frac * n)`` go to train."""
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    perm = rng.permutation(n)
    k = int(round(train_frac * n))
    return np.sort(perm[:k]), np.sort(perm[k:])


def _split_task(args):
    data, split, seed, train_frac, cfg = args
    if isinstance(data, SyntheticTask):
        data = data.sample(data.size, seed)
    tr_idx, te_idx = random_split(len(data), train_frac, seed)
    train, test = data.subset(tr_idx), data.subset(te_idx)
    try:
        model = fit_bayes(train, cfg)
    except BoostNPMLEError as exc:
        return {"split": split, "seed": seed, "reason": f"{type(exc).__name__}: {exc}"}, False
    return {"split": split, "seed": seed, "train_error": model.error_rate(train),
            "test_error": model.error_rate(test)}, True


def split_experiment(data: "LabeledDataset | SyntheticTask", splits=100, train_frac=0.7, cfg: FitConfig = None,
                     base_seed=0, workers=1) -> SplitTable:
    """Misclassification rates over ``splits`` random train/test partitions.

    Split ``i`` uses seed ``base_seed + i``. Splits where a class cannot be
    fitted are recorded as skipped and left out of the aggregate. Passing a
    :class:`SyntheticTask` draws a fresh dataset for every split.
    """
    if splits < 1 or not 0 < train_frac < 1:
        raise InvalidInputError("need splits >= 1 and 0 < train_frac < 1")
    cfg = cfg or FitConfig(iterations=2000, record_trace=False)
    tasks = [(data, i, int(base_seed) + i, train_frac, cfg) for i in range(splits)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_split_task, tasks))
    else:
        results = [_split_task(t) for t in tasks]
    table = SplitTable()
    for row, ok in results:
        (table.rows if ok else table.skipped).append(row)
    return table


def read_labeled_csv(path, feature="age", label="chd") -> LabeledDataset:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise InvalidInputError(f"{path}: empty file")
        names = [s.strip() for s in reader.fieldnames]
        reader.fieldnames = names
        for col in (feature, label):
            if col not in names:
                raise InvalidInputError(f"{path}: no column named {col!r} (have {names})")
        xs, ys = [], []
        for i, row in enumerate(reader):
            try:
                xs.append(float(row[feature]))
                ys.append(int(float(row[label])))
            except (TypeError, ValueError):
                raise InvalidInputError(f"{path}: row {i} has a non-numeric {feature!r} or {label!r}") from None
    return LabeledDataset(np.array(xs), np.array(ys))



@dataclass(frozen=True)
class SyntheticTask:
    """Two Gaussian class-conditionals with fixed priors.

    Defaults loosely mimic an age feature against a binary outcome: a broad
    majority class and an older, narrower minority class.
    """

    prior1: float = 0.35
    mean0: float = 39.0
    sd0: float = 14.0
    mean1: float = 50.0
    sd1: float = 10.0
    size: int = 2000

    def sample(self, n, seed) -> LabeledDataset:
        rng = np.random.Generator(np.random.PCG64(int(seed)))
        y = (rng.random(n) < self.prior1).astype(np.int64)
        x = np.where(y == 1, rng.normal(self.mean1, self.sd1, n), rng.normal(self.mean0, self.sd0, n))
        return LabeledDataset(x, y)

    def bayes_error(self) -> float:
        """``integral of min(pi_0 p_0, pi_1 p_1)``, the error of the optimal rule."""
        p0 = stats.norm(self.mean0, self.sd0)
        p1 = stats.norm(self.mean1, self.sd1)
        pi0, pi1 = 1.0 - self.prior1, self.prior1

        def integrand(x):
            return min(pi0 * p0.pdf(x), pi1 * p1.pdf(x))

        lo = min(self.mean0 - 12 * self.sd0, self.mean1 - 12 * self.sd1)
        hi = max(self.mean0 + 12 * self.sd0, self.mean1 + 12 * self.sd1)
        # the integrand has kinks where the weighted densities cross
        a, b, c = (1 / self.sd1**2 - 1 / self.sd0**2,
                   2 * (self.mean0 / self.sd0**2 - self.mean1 / self.sd1**2),
                   self.mean1**2 / self.sd1**2 - self.mean0**2 / self.sd0**2
                   - 2 * np.log(pi1 * self.sd0 / (pi0 * self.sd1)))
        roots = np.roots([a, b, c]) if a != 0 else np.array([-c / b])
        kinks = sorted(float(r.real) for r in np.atleast_1d(roots)
                       if abs(r.imag) < 1e-12 and lo < r.real < hi)
        val, _ = integrate.quad(integrand, lo, hi, points=kinks or None, limit=200,
                                epsabs=1e-13, epsrel=1e-12)
        return float(val)
