"""Boosted maximum-likelihood density estimation.

The log-potential ``f`` starts at zero (uniform density on the sample
range). Each iteration forms weights ``w = a * exp(f)`` and responses
``g = (q - w) / w`` at the knots, fits one weak learner ``b`` to ``g`` by
weighted least squares, and updates ``f <- f + b``. The estimate is
``exp(f(x)) / Z`` on ``[x_1, x_n]`` with ``Z = sum(a * exp(f(x_i)))``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import likelihood as lk
from .data import Dataset, trapezoid_weights
from .errors import (BoostingIterationError, InputError, InvalidInputError,
                     NumericalError, NumericalRangeError, OutOfSupportError)
from .kernel import silverman_bandwidth
from .learners import LearnerFactory, LearnerSpec, combine, learner_from_dict, learner_to_dict

log = logging.getLogger(__name__)

MODEL_FORMAT = "boostnpmle-model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class FitConfig:
    learner: LearnerSpec = field(default_factory=LearnerSpec)
    iterations: int = 200
    record_trace: bool = True

    def __post_init__(self):
        if int(self.iterations) < 1:
            raise InvalidInputError(f"iterations must be >= 1, got {self.iterations}")

    def to_dict(self):
        return {"learner": self.learner.to_dict(), "iterations": int(self.iterations),
                "record_trace": self.record_trace}


@dataclass
class FitTrace:
    """Per-iteration diagnostics; index 0 is the initial ``f = 0``.

    ``weight_drift[m]`` is the largest relative gap between the weights
    obtained by the multiplicative update ``w <- w * exp(b)`` and those
    recomputed as ``a * exp(f)`` after iteration ``m``.
    """

    surrogate: list = field(default_factory=list)
    loglik: list = field(default_factory=list)
    Z: list = field(default_factory=list)
    weight_drift: list = field(default_factory=list)

    def append(self, q, a, f, drift):
        self.surrogate.append(lk.surrogate(q, a, f))
        self.loglik.append(lk.log_likelihood(q, a, f))
        self.Z.append(lk.normalizer(a, f))
        self.weight_drift.append(drift)

    def __len__(self):
        return len(self.surrogate)


class Ensemble:
    """Additive log-potential ``f(x) = sum_m b_m(x)`` with its normalizer.

    ``f`` is evaluated through a collapsed predictor whose coefficients are
    the running sum of the learners' coefficients (exact for splines and
    kernels, which share knots); trees are summed one by one.
    """

    def __init__(self, dataset: Dataset, weights, learners, spec: LearnerSpec,
                 bandwidth=None):
        self.dataset = dataset
        self.weights = np.asarray(weights, dtype=np.float64)
        self.learners = list(learners)
        self.spec = spec
        self.bandwidth = bandwidth
        self._f = combine(self.learners, dataset.knots, bandwidth)
        f_knots = self._f.predict(dataset.knots) if self.learners else np.zeros(dataset.n)
        self.Z = lk.normalizer(self.weights, f_knots)
        if not (self.Z > 0 and np.isfinite(self.Z)):
            raise NumericalRangeError(f"normalizer is not a positive finite number: {self.Z}")

    @property
    def M(self):
        return len(self.learners)

    @property
    def support(self):
        return self.dataset.support

    def prefix(self, m):
        """The ensemble of the first ``m`` learners, renormalized."""
        return Ensemble(self.dataset, self.weights, self.learners[:m], self.spec, self.bandwidth)

    def _check_support(self, x):
        lo, hi = self.support
        x = np.asarray(x, dtype=np.float64)
        if np.any((x < lo) | (x > hi)) or np.any(np.isnan(x)):
            raise OutOfSupportError(f"query outside the support [{lo!r}, {hi!r}]")
        return x

    def evaluate_f(self, x):
        x = self._check_support(x)
        return self._f.predict(x)

    def density(self, x):
        return np.exp(self.evaluate_f(x)) / self.Z

    def density_or_zero(self, x):
        """Density with the support restriction applied: 0 outside ``[x_1, x_n]``."""
        x = np.asarray(x, dtype=np.float64)
        lo, hi = self.support
        inside = (x >= lo) & (x <= hi)
        out = np.zeros(x.shape)
        if np.any(inside):
            out[inside] = np.exp(self._f.predict(x[inside])) / self.Z
        return out[()] if out.ndim == 0 else out

    def to_dict(self):
        ds = self.dataset
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "dataset": {
                "knots": ds.knots.tolist(),
                "counts": ds.counts.tolist(),
                "N": ds.N,
                "freqs": ds.freqs.tolist(),
                "weights": self.weights.tolist(),
            },
            "learner": self.spec.to_dict(),
            "bandwidth": self.bandwidth,
            "M": self.M,
            "Z": self.Z,
            "learners": [learner_to_dict(lr) for lr in self.learners],
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != MODEL_FORMAT:
            raise InvalidInputError("not a boosted density model file")
        if d.get("version") != MODEL_VERSION:
            raise InvalidInputError(f"unsupported model version {d.get('version')!r}")
        dd = d["dataset"]
        ds = Dataset(knots=np.array(dd["knots"]), counts=np.array(dd["counts"]), N=dd["N"])
        spec = LearnerSpec.from_dict(d["learner"])
        bw = d.get("bandwidth")
        learners = [learner_from_dict(spec.kind, ld, ds.knots, bw) for ld in d["learners"]]
        if len(learners) != d["M"]:
            raise InvalidInputError("model file learner count does not match M")
        return cls(ds, np.array(dd["weights"]), learners, spec, bw)

    def dumps(self):
        # json writes floats with repr(), which round-trips every double exactly
        return json.dumps(self.to_dict(), separators=(",", ":"))

    def save(self, path):
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path):
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise InvalidInputError(f"{path}: malformed model file ({exc})") from None


def resolve_bandwidth(spec: LearnerSpec, dataset: Dataset):
    if spec.kind != "gaussian-kernel":
        return None
    if spec.bandwidth is not None:
        return float(spec.bandwidth)
    return silverman_bandwidth(dataset.expand())


def fit(dataset: Dataset, cfg: FitConfig, weights=None):
    """Run ``cfg.iterations`` boosting steps; returns ``(Ensemble, FitTrace)``.

    ``weights`` defaults to the trapezoid weights of ``dataset``. The trace
    is empty unless ``cfg.record_trace``.
    """
    a = trapezoid_weights(dataset) if weights is None else np.asarray(weights, dtype=np.float64)
    q = dataset.freqs
    x = dataset.knots
    spec = cfg.learner
    spec.check_feasible(dataset.n)
    bandwidth = resolve_bandwidth(spec, dataset)
    factory = LearnerFactory(spec, x, bandwidth)

    f = np.zeros(dataset.n)
    w_rec = a.copy()
    trace = FitTrace()
    if cfg.record_trace:
        trace.append(q, a, f, 0.0)
    learners = []
    for m in range(1, int(cfg.iterations) + 1):
        try:
            state = lk.weights_responses(q, a, f, iteration=m)
            learner = factory.fit(state.weights, state.responses)
        except (NumericalError, InputError) as exc:
            raise BoostingIterationError(m, exc) from exc
        b = factory.predict_knots(learner)
        f = f + b
        learners.append(learner)
        if cfg.record_trace:
            w_rec = w_rec * np.exp(b)
            w_now = a * np.exp(f)
            drift = float(np.max(np.abs(w_rec - w_now) / w_now))
            try:
                trace.append(q, a, f, drift)
            except NumericalError as exc:
                raise BoostingIterationError(m, exc) from exc
    ens = Ensemble(dataset, a, learners, spec, bandwidth)
    log.debug("fit %s M=%d: Z=%.6g", spec.kind, len(learners), ens.Z)
    return ens, trace
