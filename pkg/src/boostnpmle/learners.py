"""Weak-learner configuration, dispatch and (de)serialization."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Literal, Optional

import numpy as np

from .errors import InfeasibleDfError, InvalidInputError
from .kernel import KernelBasis, KernelRidge, fit_kernel_ridge, gaussian_design
from .spline import SmoothingSpline, fit_spline
from .tree import RegressionTree, fit_cart

Kind = Literal["smooth-spline", "gaussian-kernel", "cart"]
KINDS = ("smooth-spline", "gaussian-kernel", "cart")


@dataclass(frozen=True)
class LearnerSpec:
    """Weak learner settings. Only the fields relevant to ``kind`` are read.

    ``bandwidth=None`` means Silverman's rule on the training sample.
    """

    kind: Kind = "smooth-spline"
    df: float = 3.0
    ridge_lambda: float = 1e4
    bandwidth: Optional[float] = None
    minsplit: int = 30
    minbucket: Optional[int] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown learner kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "smooth-spline" and not self.df >= 2:
            raise InfeasibleDfError(f"df must be >= 2, got {self.df}")
        if self.kind == "gaussian-kernel":
            if not self.ridge_lambda > 0:
                raise InvalidInputError("ridge_lambda must be positive")
            if self.bandwidth is not None and not self.bandwidth > 0:
                raise InvalidInputError("bandwidth must be positive")
        if self.kind == "cart":
            if self.minsplit < 1:
                raise InvalidInputError("minsplit must be a positive integer")
            if self.minbucket is not None and self.minbucket < 1:
                raise InvalidInputError("minbucket must be a positive integer")

    def to_dict(self):
        d = asdict(self)
        keep = {"smooth-spline": ("df",), "gaussian-kernel": ("ridge_lambda", "bandwidth"),
                "cart": ("minsplit", "minbucket")}[self.kind]
        return {"kind": self.kind, **{k: d[k] for k in keep}}

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    def check_feasible(self, n):
        if self.kind == "smooth-spline":
            if n < 4:
                raise InfeasibleDfError(f"smoothing spline needs at least 4 distinct knots, got {n}")
            if self.df > n:
                raise InfeasibleDfError(f"df={self.df:g} exceeds the number of knots n={n}")
        elif n < 2:
            raise InvalidInputError(f"need at least 2 knots, got {n}")


class LearnerFactory:
    """Fits one weak learner per call on a fixed set of knots.

    Caches whatever depends only on the knots (the kernel Gram eigenbasis).
    """

    def __init__(self, spec: LearnerSpec, knots, bandwidth=None):
        self.spec = spec
        self.knots = np.asarray(knots, dtype=np.float64)
        self.bandwidth = bandwidth if bandwidth is not None else spec.bandwidth
        self._basis = self._gram = None
        if spec.kind == "gaussian-kernel":
            if self.bandwidth is None:
                raise InvalidInputError("kernel learner needs a bandwidth")
            self._gram = gaussian_design(self.knots, self.knots, self.bandwidth)
            self._basis = KernelBasis(self._gram)

    def fit(self, w, g):
        spec = self.spec
        if spec.kind == "smooth-spline":
            return fit_spline(self.knots, w, g, spec.df)
        if spec.kind == "gaussian-kernel":
            return fit_kernel_ridge(self.knots, w, g, spec.ridge_lambda, self.bandwidth,
                                    basis=self._basis)
        return fit_cart(self.knots, w, g, spec.minsplit, spec.minbucket)

    def predict_knots(self, learner):
        """``learner`` evaluated at the knots, reusing the cached Gram matrix."""
        if self._gram is not None:
            return learner.intercept + self._gram @ learner.coef
        return learner.predict(self.knots)


def learner_to_dict(learner):
    if isinstance(learner, SmoothingSpline):
        return {"values": learner.values.tolist(), "second": learner.second.tolist(),
                "lam": learner.lam, "df": learner.df}
    if isinstance(learner, KernelRidge):
        return {"intercept": learner.intercept, "coef": learner.coef.tolist()}
    if isinstance(learner, RegressionTree):
        return {"thresholds": learner.thresholds.tolist(), "values": learner.values.tolist(),
                "root": learner.root}
    raise TypeError(f"cannot serialize {type(learner).__name__}")


def learner_from_dict(kind, d, knots, bandwidth=None):
    if kind == "smooth-spline":
        return SmoothingSpline(knots, d["values"], d["second"], d["lam"], d["df"])
    if kind == "gaussian-kernel":
        return KernelRidge(knots, d["intercept"], d["coef"], bandwidth)
    if kind == "cart":
        return RegressionTree(d["thresholds"], d["values"], d["root"])
    raise InvalidInputError(f"unknown learner kind {kind!r}")


def combine(learners, knots, bandwidth=None):
    """Collapse a list of same-kind learners into a single predictor.

    Splines on shared knots and kernel expansions on shared centers are
    linear in their coefficients, so the sum of predictors is the predictor
    of the summed coefficients. Coefficients are accumulated in list order.
    Trees have no such shortcut and are returned as a summing wrapper.
    """
    if not learners:
        return _Zero()
    kind = learners[0].kind
    if kind == "smooth-spline":
        values = np.zeros_like(knots)
        second = np.zeros_like(knots)
        for lr in learners:
            values = values + lr.values
            second = second + lr.second
        return SmoothingSpline(knots, values, second)
    if kind == "gaussian-kernel":
        intercept = 0.0
        coef = np.zeros_like(knots)
        for lr in learners:
            intercept += lr.intercept
            coef = coef + lr.coef
        return KernelRidge(knots, intercept, coef, bandwidth)
    return _Sum(learners)


class _Zero:
    def predict(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.zeros_like(x) if x.ndim else 0.0


class _Sum:
    def __init__(self, learners):
        self.learners = list(learners)

    def predict(self, x):
        out = 0.0
        for lr in self.learners:
            out = out + lr.predict(x)
        return out
