"""Gaussian-kernel ridge regression on the knots, and Silverman's bandwidth."""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import DegenerateSpreadError, InvalidInputError, SolveFailureError


def silverman_bandwidth(values) -> float:
    """Silverman's rule of thumb, ``0.9 * min(sd, IQR / 1.34) * N**(-1/5)``.

    ``sd`` uses ``ddof=1``; quartiles use linear interpolation. A zero IQR
    (more than half the sample tied) falls back to ``sd`` alone.
    """
    x = np.asarray(values, dtype=np.float64).ravel()
    if x.size < 2:
        raise DegenerateSpreadError("bandwidth needs at least 2 samples")
    sd = float(np.std(x, ddof=1))
    if sd == 0.0:
        raise DegenerateSpreadError("all sample values are equal")
    q75, q25 = np.percentile(x, [75, 25])
    iqr = float(q75 - q25)
    spread = min(sd, iqr / 1.34) if iqr > 0 else sd
    return 0.9 * spread * x.size ** (-0.2)


def gaussian_design(x, centers, bandwidth):
    d = np.subtract.outer(np.asarray(x, dtype=np.float64), centers)
    return np.exp(-0.5 * (d / bandwidth) ** 2)


class KernelRidge:
    """``b(x) = intercept + sum_j coef[j] * exp(-(x - c_j)**2 / (2 h**2))``."""

    kind = "gaussian-kernel"

    def __init__(self, centers, intercept, coef, bandwidth):
        self.centers = np.asarray(centers, dtype=np.float64)
        self.intercept = float(intercept)
        self.coef = np.asarray(coef, dtype=np.float64)
        self.bandwidth = float(bandwidth)

    def predict(self, x):
        x = np.asarray(x, dtype=np.float64)
        out = self.intercept + gaussian_design(np.atleast_1d(x), self.centers, self.bandwidth) @ self.coef
        return out[0] if x.ndim == 0 else out

    def coefficients(self):
        return np.concatenate([[self.intercept], self.coef])

    def __repr__(self):
        return f"KernelRidge(n={self.centers.size}, h={self.bandwidth:.4g})"


class KernelBasis:
    """Truncated eigenbasis of the symmetric Gram matrix ``Phi = U diag(ev) U.T``.

    Ridge coefficients live in the span of the retained eigenvectors: a
    direction with eigenvalue ``e`` moves fitted values by ``O(e**2 / lambda)``,
    so dropping ``e < rtol * max(ev)`` changes the fit only at rounding level
    while shrinking each solve from ``n + 1`` unknowns to ``r + 1``.
    """

    def __init__(self, phi, rtol=1e-10):
        ev, U = np.linalg.eigh(phi)
        keep = ev > rtol * ev[-1]
        self.vectors = U[:, keep]
        self.values = ev[keep]
        self.design = self.vectors * self.values

    @property
    def rank(self):
        return self.values.size


def _bordered_solve(w, g, D, ridge_lambda):
    wD = D * w[:, None]
    r = D.shape[1]
    A = np.empty((r + 1, r + 1))
    A[0, 0] = w.sum()
    A[0, 1:] = A[1:, 0] = wD.sum(axis=0)
    A[1:, 1:] = D.T @ wD
    A[1:, 1:][np.diag_indices(r)] += ridge_lambda
    rhs = np.empty(r + 1)
    rhs[0] = np.dot(w, g)
    rhs[1:] = wD.T @ g
    try:
        sol = scipy.linalg.solve(A, rhs, assume_a="pos", check_finite=False)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise SolveFailureError(f"kernel ridge normal equations: {exc}") from None
    if not np.all(np.isfinite(sol)):
        raise SolveFailureError("kernel ridge produced non-finite coefficients")
    return sol


def fit_kernel_ridge(x, w, g, ridge_lambda=1e4, bandwidth=None, design=None,
                     basis: KernelBasis = None) -> KernelRidge:
    """Weighted ridge fit with an unpenalized intercept and centers at every knot.

    Minimizes ``sum(w * (g - b0 - Phi @ beta)**2) + ridge_lambda * sum(beta**2)``
    after rescaling ``w`` to mean 1. The bordered normal equations are
    symmetric positive definite for ``ridge_lambda > 0``.
    ``design`` may pass a precomputed ``Phi`` for the same knots and
    bandwidth; ``basis`` a precomputed :class:`KernelBasis`, which switches
    to the reduced solve.
    """
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    n = x.size
    if not (x.shape == w.shape == g.shape) or x.ndim != 1:
        raise InvalidInputError("x, w, g must be 1-d arrays of equal length")
    if n < 2:
        raise SolveFailureError("kernel ridge needs at least 2 knots")
    if np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise InvalidInputError("weights must be positive and finite")
    if not ridge_lambda > 0:
        raise InvalidInputError("ridge_lambda must be positive")
    if bandwidth is None or not bandwidth > 0:
        raise InvalidInputError("bandwidth must be positive")

    w = w / w.mean()
    if basis is not None:
        sol = _bordered_solve(w, g, basis.design, ridge_lambda)
        return KernelRidge(x, sol[0], basis.vectors @ sol[1:], bandwidth)
    phi = gaussian_design(x, x, bandwidth) if design is None else design
    sol = _bordered_solve(w, g, phi, ridge_lambda)
    return KernelRidge(x, sol[0], sol[1:], bandwidth)
