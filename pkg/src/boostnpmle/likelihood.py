"""Exact and surrogate log-likelihood of a Gibbs density on the knot grid.

With knot frequencies ``q`` and trapezoid weights ``a``, a log-potential
``f`` given by its knot values defines

    L(f)  = sum(q * f) - log(sum(a * exp(f)))      exact log-likelihood
    S(f)  = sum(q * f) - sum(a * exp(f))            surrogate

and ``L(f) >= 1 + S(f)`` because ``log v <= v - 1``. Each boosting step
maximizes a second-order expansion of ``S`` around the current ``f``, which
is a weighted least-squares problem with weights ``a * exp(f)`` and
responses ``(q - w) / w``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, NumericalRangeError, WeightUnderflowError

# exp(700) ~ 1e304; above this the surrogate sum is one step from overflow
F_OVERFLOW = 700.0
WEIGHT_FLOOR = 1e-300


def _check(q, a, f):
    f = np.asarray(f, dtype=np.float64)
    if f.shape != q.shape or a.shape != q.shape:
        raise InvalidInputError(
            f"dimension mismatch: f has shape {f.shape}, dataset has {q.shape}"
        )
    if not np.all(np.isfinite(f)):
        raise NumericalRangeError("log-potential has non-finite knot values")
    return f


def log_likelihood(q, a, f) -> float:
    f = _check(q, a, f)
    shift = f.max()
    z = np.sum(a * np.exp(f - shift))
    value = float(np.dot(q, f) - (shift + np.log(z)))
    if not np.isfinite(value):
        raise NumericalRangeError("log-likelihood overflowed")
    return value


def normalizer(a, f) -> float:
    """``sum(a * exp(f))``, the trapezoid approximation of the partition function."""
    f = np.asarray(f, dtype=np.float64)
    if f.max() > F_OVERFLOW:
        raise NumericalRangeError(f"log-potential {f.max():.6g} exceeds {F_OVERFLOW}")
    return float(np.dot(a, np.exp(f)))


def surrogate(q, a, f) -> float:
    f = _check(q, a, f)
    return float(np.dot(q, f) - normalizer(a, f))


def surrogate_gradient(q, a, f) -> np.ndarray:
    f = _check(q, a, f)
    if f.max() > F_OVERFLOW:
        raise NumericalRangeError(f"log-potential {f.max():.6g} exceeds {F_OVERFLOW}")
    return q - a * np.exp(f)


def log_likelihood_gradient(q, a, f) -> np.ndarray:
    """Gradient of the exact log-likelihood: ``q - a * exp(f) / Z``."""
    f = _check(q, a, f)
    e = a * np.exp(f - f.max())
    return q - e / e.sum()


@dataclass(frozen=True)
class BoostState:
    """Weights and responses of the weighted least-squares subproblem."""

    weights: np.ndarray
    responses: np.ndarray
    iteration: int = 0


def responses_for(q, weights) -> np.ndarray:
    return (q - weights) / weights


def weights_responses(q, a, f, iteration=0) -> BoostState:
    f = _check(q, a, f)
    if f.max() > F_OVERFLOW:
        raise NumericalRangeError(f"log-potential {f.max():.6g} exceeds {F_OVERFLOW}")
    w = a * np.exp(f)
    low = np.flatnonzero(w < WEIGHT_FLOOR)
    if low.size:
        raise WeightUnderflowError(
            f"weight underflow at knot {int(low[0])} (f = {f[low[0]]:.6g})"
        )
    return BoostState(weights=w, responses=responses_for(q, w), iteration=iteration)


def optimal_log_potential(q, a) -> np.ndarray:
    """The unconstrained maximizer ``log(q / a)`` shared by both objectives."""
    return np.log(q) - np.log(a)
