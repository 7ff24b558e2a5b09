"""Weighted natural cubic smoothing spline with a degrees-of-freedom target.

Minimizes ``sum(w * (g - s(x))**2) + lam * integral(s''(t)**2)`` over
functions on ``[x_1, x_n]``; the minimizer is the natural cubic spline with
knots at ``x``.

The fit and the smoother trace are computed through the equivalent
state-space model: ``s`` is an affine function (flat prior) plus an
integrated Wiener process started at ``x_1``, observed with noise variance
``lam / w_i``. The posterior mean is the smoothing spline, and
``trace(S) = n - lam * sum(Vt_ii / w_i)`` where ``Vt`` is the GLS residual
projector ``V^-1 - V^-1 T (T' V^-1 T)^-1 T' V^-1`` for the process-plus-noise
covariance ``V`` and affine design ``T``. A Kalman filter and disturbance
smoother give ``V^-1 y`` and ``diag(V^-1)`` in O(n). Unlike the Reinsch
pentadiagonal system, the recursion only ever multiplies by knot gaps,
never divides by them, so tightly clustered knots (gaps ~1e-6 of the range,
routine for continuous samples of a few hundred points) do not wreck the
conditioning.

Second derivatives at the knots, needed to evaluate the spline between
knots, come from the Reinsch relation ``R gamma = Q' s``.

References:
    Green PJ, Silverman BW. Nonparametric Regression and Generalized
    Linear Models: A roughness penalty approach. Chapman and Hall, 1994.
    Wecker WE, Ansley CF. The signal extraction approach to nonlinear
    regression and spline smoothing. JASA 78 (1983) 81-89.
    Durbin J, Koopman SJ. Time Series Analysis by State Space Methods,
    2nd ed., section 4.5. Oxford, 2012.
"""

from __future__ import annotations

import math

import numba as nb
import numpy as np
import scipy.linalg

from .errors import InfeasibleDfError, InvalidInputError, SearchFailureError

LOG10_LAMBDA_BRACKET = (-12.0, 12.0)
DF_TOL = 1e-3
MAX_BISECTIONS = 200


def penalty_bands(x):
    """Banded pieces of the Reinsch matrices ``Q`` and ``R`` for knots ``x``.

    Column ``k`` of ``Q`` (interior knot ``j = k + 1``) has entries
    ``qlo[k], qmid[k], qhi[k]`` on rows ``j-1, j, j+1``. ``R`` is returned as
    its diagonal ``r0`` and super-diagonal ``r1``.
    """
    h = np.diff(x)
    inv = 1.0 / h
    qlo = inv[:-1]
    qhi = inv[1:]
    qmid = -(qlo + qhi)
    r0 = (h[:-1] + h[1:]) / 3.0
    r1 = h[1:-1] / 6.0
    return qlo, qmid, qhi, r0, r1


def dense_penalty(x):
    """Dense ``Q``, ``R`` and ``K = Q R^-1 Q'``; O(n^3), for checking only.

    ``s' K s`` is the roughness ``integral(s''**2)`` of the natural spline
    interpolating ``s`` at ``x``.
    """
    n = len(x)
    qlo, qmid, qhi, r0, r1 = penalty_bands(np.asarray(x, dtype=np.float64))
    Q = np.zeros((n, n - 2))
    R = np.diag(r0)
    for k in range(n - 2):
        Q[k, k], Q[k + 1, k], Q[k + 2, k] = qlo[k], qmid[k], qhi[k]
    for k in range(n - 3):
        R[k, k + 1] = R[k + 1, k] = r1[k]
    K = Q @ np.linalg.solve(R, Q.T)
    return Q, R, K


@nb.njit(cache=True)
def _filter_smooth(h, noise, Y):
    """Kalman filter + disturbance smoother for an integrated Wiener process.

    ``h`` are knot gaps, ``noise`` the observation variances and ``Y`` an
    (n, k) block of data columns. Returns ``U = V^-1 Y`` and ``diag(V^-1)``.
    """
    n, k = Y.shape
    F = np.empty(n)
    K0 = np.empty(n)
    K1 = np.empty(n)
    v = np.empty((n, k))
    a0 = np.zeros(k)
    a1 = np.zeros(k)
    p00 = 0.0
    p01 = 0.0
    p11 = 0.0
    for t in range(n):
        f = p00 + noise[t]
        F[t] = f
        for c in range(k):
            v[t, c] = Y[t, c] - a0[c]
        if t == n - 1:
            K0[t] = 0.0
            K1[t] = 0.0
            break
        ht = h[t]
        # filtered moments, written so that p00 stays positive as noise -> 0
        r = noise[t] / f
        f00 = p00 * r
        f01 = p01 * r
        f11 = p11 - p01 * p01 / f
        # gain of the one-step-ahead predictor, K = T P Z' / F
        k0 = (p00 + ht * p01) / f
        k1 = p01 / f
        K0[t] = k0
        K1[t] = k1
        for c in range(k):
            m0 = a0[c] + p00 / f * v[t, c]
            m1 = a1[c] + p01 / f * v[t, c]
            a0[c] = m0 + ht * m1
            a1[c] = m1
        h2 = ht * ht
        p00 = f00 + 2.0 * ht * f01 + h2 * f11 + h2 * ht / 3.0
        p01 = f01 + ht * f11 + h2 / 2.0
        p11 = f11 + ht
    U = np.empty((n, k))
    D = np.empty(n)
    r0 = np.zeros(k)
    r1 = np.zeros(k)
    n00 = 0.0
    n01 = 0.0
    n11 = 0.0
    for t in range(n - 1, -1, -1):
        f = F[t]
        k0 = K0[t]
        k1 = K1[t]
        for c in range(k):
            U[t, c] = v[t, c] / f - (k0 * r0[c] + k1 * r1[c])
        D[t] = 1.0 / f + k0 * k0 * n00 + 2.0 * k0 * k1 * n01 + k1 * k1 * n11
        if t == 0:
            break
        # step t's transition spans the gap to knot t + 1 (none after the last)
        ht = h[t] if t < n - 1 else 0.0
        # L = T - K Z = [[1 - k0, ht], [-k1, 1]]; r <- Z' v / F + L' r
        for c in range(k):
            nr0 = v[t, c] / f + (1.0 - k0) * r0[c] - k1 * r1[c]
            nr1 = ht * r0[c] + r1[c]
            r0[c] = nr0
            r1[c] = nr1
        # N <- Z' Z / F + L' N L
        l00 = 1.0 - k0
        l10 = -k1
        a = l00 * n00 + l10 * n01
        b = l00 * n01 + l10 * n11
        c_ = ht * n00 + n01
        d = ht * n01 + n11
        m00 = a * l00 + b * l10 + 1.0 / f
        m01 = a * ht + b
        m11 = c_ * ht + d
        n00 = m00
        n01 = m01
        n11 = m11
    return U, D


@nb.njit(cache=True)
def _trace_core(h, winv, lam, T):
    n = winv.size
    noise = lam * winv
    U, D = _filter_smooth(h, noise, T)
    g00 = 0.0
    g01 = 0.0
    g11 = 0.0
    for i in range(n):
        g00 += T[i, 0] * U[i, 0]
        g01 += T[i, 0] * U[i, 1]
        g11 += T[i, 1] * U[i, 1]
    det = g00 * g11 - g01 * g01
    i00 = g11 / det
    i01 = -g01 / det
    i11 = g00 / det
    acc = 0.0
    for i in range(n):
        u0 = U[i, 0]
        u1 = U[i, 1]
        vt = D[i] - (u0 * u0 * i00 + 2.0 * u0 * u1 * i01 + u1 * u1 * i11)
        acc += winv[i] * vt
    return n - lam * acc


@nb.njit(cache=True)
def _search(h, winv, T, df, lo, hi, tol, max_iter):
    # trace is decreasing in lambda; bisect on log10(lambda)
    t = 0.0
    mid = 0.5 * (lo + hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        t = _trace_core(h, winv, 10.0 ** mid, T)
        if abs(t - df) <= tol:
            return mid, t, True
        if t > df:
            lo = mid
        else:
            hi = mid
    return mid, t, False


def _affine_design(x):
    span = x[-1] - x[0]
    return np.column_stack([np.ones_like(x), (x - x[0]) / span])


def trace_at(x, w, lam):
    """``trace(S_lam)`` for the weighted smoothing spline at ``lam``."""
    x = np.asarray(x, dtype=np.float64)
    winv = 1.0 / np.asarray(w, dtype=np.float64)
    return _trace_core(np.diff(x), winv, float(lam), _affine_design(x))


def second_derivatives(x, s):
    """Second derivatives of the natural spline interpolating ``s`` at ``x``."""
    qlo, qmid, qhi, r0, r1 = penalty_bands(x)
    rhs = qlo * s[:-2] + qmid * s[1:-1] + qhi * s[2:]
    ab = np.zeros((2, r0.size))
    ab[0, 1:] = r1
    ab[1] = r0
    out = np.zeros_like(s)
    out[1:-1] = scipy.linalg.solveh_banded(ab, rhs, check_finite=False)
    return out


def solve_lambda(x, w, lam, g):
    """Knot values of the smoothing spline at ``lam > 0``."""
    x = np.asarray(x, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    winv = 1.0 / np.asarray(w, dtype=np.float64)
    T = _affine_design(x)
    U, _ = _filter_smooth(np.diff(x), lam * winv, np.column_stack([T, g]))
    G = T.T @ U[:, :2]
    G = 0.5 * (G + G.T)
    alpha = np.linalg.solve(G, T.T @ U[:, 2])
    resid = U[:, 2] - U[:, :2] @ alpha
    return g - lam * winv * resid


class SmoothingSpline:
    """A fitted natural cubic spline: knot values and second derivatives."""

    kind = "smooth-spline"

    def __init__(self, knots, values, second, lam=math.nan, df=math.nan):
        self.knots = np.asarray(knots, dtype=np.float64)
        self.values = np.asarray(values, dtype=np.float64)
        self.second = np.asarray(second, dtype=np.float64)
        self.lam = float(lam)
        self.df = float(df)

    def predict(self, x):
        x = np.asarray(x, dtype=np.float64)
        return _eval_natural_spline(self.knots, self.values, self.second, x)

    def __repr__(self):
        return f"SmoothingSpline(n={self.knots.size}, df={self.df:.4g}, lam={self.lam:.4g})"


def _eval_natural_spline(knots, s, gam, x):
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    n = knots.size
    i = np.clip(np.searchsorted(knots, x, side="right") - 1, 0, n - 2)
    xl, xr = knots[i], knots[i + 1]
    h = xr - xl
    t_l = x - xl
    t_r = xr - x
    out = (
        (t_l * s[i + 1] + t_r * s[i]) / h
        - t_l * t_r / 6.0 * ((1.0 + t_l / h) * gam[i + 1] + (1.0 + t_r / h) * gam[i])
    )
    # natural spline: linear continuation beyond the end knots
    left = x < knots[0]
    if left.any():
        h0 = knots[1] - knots[0]
        slope = (s[1] - s[0]) / h0 - h0 / 6.0 * gam[1]
        out[left] = s[0] + slope * (x[left] - knots[0])
    right = x > knots[-1]
    if right.any():
        h1 = knots[-1] - knots[-2]
        slope = (s[-1] - s[-2]) / h1 + h1 / 6.0 * gam[-2]
        out[right] = s[-1] + slope * (x[right] - knots[-1])
    return out[0] if scalar else out


def _check_inputs(x, w, g):
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if not (x.shape == w.shape == g.shape) or x.ndim != 1:
        raise InvalidInputError("x, w, g must be 1-d arrays of equal length")
    if np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise InvalidInputError("weights must be positive and finite")
    if not np.all(np.diff(x) > 0):
        raise InvalidInputError("knots must be strictly increasing")
    return x, w, g


def weighted_line(x, w, g):
    """Weighted least-squares line: the df = 2 (infinite lambda) limit."""
    sw = w.sum()
    xm = np.dot(w, x) / sw
    gm = np.dot(w, g) / sw
    dx = x - xm
    slope = np.dot(w, dx * (g - gm)) / np.dot(w, dx * dx)
    return gm + slope * dx


def fit_spline(x, w, g, df=3.0, tol=DF_TOL, max_iter=MAX_BISECTIONS) -> SmoothingSpline:
    """Fit the weighted smoothing spline whose smoother trace equals ``df``.

    ``df == 2`` gives the weighted least-squares line and ``df == n`` the
    interpolating natural spline; both limits are handled exactly rather
    than by the lambda search.
    """
    x, w, g = _check_inputs(x, w, g)
    n = x.size
    df = float(df)
    if n < 4:
        raise InfeasibleDfError(f"smoothing spline needs at least 4 distinct knots, got {n}")
    if df < 2 or df > n:
        raise InfeasibleDfError(f"df={df:g} outside [2, n={n}]")

    if df - 2.0 <= tol:
        line = weighted_line(x, w, g)
        return SmoothingSpline(x, line, np.zeros(n), lam=math.inf, df=2.0)
    if n - df <= tol:
        return SmoothingSpline(x, g, second_derivatives(x, g), lam=0.0, df=float(n))

    h = np.diff(x)
    winv = 1.0 / w
    T = _affine_design(x)
    lo, hi = LOG10_LAMBDA_BRACKET
    for _ in range(20):
        if _trace_core(h, winv, 10.0 ** lo, T) > df:
            break
        lo -= 6.0
    else:
        raise SearchFailureError(f"no lambda with trace above df={df:g}")
    for _ in range(20):
        if _trace_core(h, winv, 10.0 ** hi, T) < df:
            break
        hi += 6.0
    else:
        raise SearchFailureError(f"no lambda with trace below df={df:g}")

    log_lam, achieved, ok = _search(h, winv, T, df, lo, hi, tol, max_iter)
    if not ok:
        raise SearchFailureError(
            f"lambda search stalled at trace {achieved:.6g} for df={df:g}"
        )
    lam = 10.0 ** log_lam
    s = solve_lambda(x, w, lam, g)
    return SmoothingSpline(x, s, second_derivatives(x, s), lam=lam, df=achieved)
