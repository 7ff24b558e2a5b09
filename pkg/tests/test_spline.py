import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from boostnpmle import spline as sp
from boostnpmle.errors import InfeasibleDfError, InvalidInputError


def instance(rng, n, clustered=False):
    x = np.sort(rng.standard_t(3, n) if clustered else rng.uniform(0, 10, n))
    w = rng.uniform(0.05, 2.0, n)
    g = np.sin(x) + rng.normal(scale=0.3, size=n)
    return x, w, g


def dense_smoother(x, w, lam):
    # S = (W + lam Q R^-1 Q')^-1 W rewritten so that nothing near-singular is inverted
    Q, R, _ = sp.dense_penalty(x)
    winv_q = Q / w[:, None]
    B = R + lam * Q.T @ winv_q
    return np.eye(x.size) - lam * winv_q @ np.linalg.solve(B, Q.T)


def test_trace_matches_dense_oracle(rng):
    for n in (5, 12, 25):
        x, w, _ = instance(rng, n)
        for lam in (1e-3, 1.0, 1e3):
            S = dense_smoother(x, w, lam)
            assert sp.trace_at(x, w, lam) == pytest.approx(np.trace(S), abs=1e-9)


def test_fit_matches_dense_smoother(rng):
    for _ in range(10):
        n = int(rng.integers(6, 30))
        x, w, g = instance(rng, n)
        fit = sp.fit_spline(x, w, g, df=3.0)
        S = dense_smoother(x, w, fit.lam)
        assert np.trace(S) == pytest.approx(3.0, abs=1e-3)
        np.testing.assert_allclose(fit.values, S @ g, atol=1e-8)


def test_trace_at_clustered_knots_matches_high_precision():
    mp = pytest.importorskip("mpmath")
    mp.mp.dps = 50
    rng = np.random.default_rng(3)
    x = np.sort(rng.standard_t(3, 18))
    x = np.sort(np.concatenate([x, [x[9] + 1e-8, x[4] + 3e-9]]))
    w = np.r_[np.diff(x)[0] / 2, (x[2:] - x[:-2]) / 2, np.diff(x)[-1] / 2]
    n = x.size
    h = [mp.mpf(x[i + 1]) - mp.mpf(x[i]) for i in range(n - 1)]
    Q = mp.zeros(n, n - 2)
    R = mp.zeros(n - 2, n - 2)
    for k in range(n - 2):
        Q[k, k], Q[k + 1, k], Q[k + 2, k] = 1 / h[k], -(1 / h[k] + 1 / h[k + 1]), 1 / h[k + 1]
        R[k, k] = (h[k] + h[k + 1]) / 3
        if k < n - 3:
            R[k, k + 1] = R[k + 1, k] = h[k + 1] / 6
    Winv = mp.diag([1 / mp.mpf(v) for v in w])
    for lam in (0.1, 10.0):
        # trace(S) = 2 + trace((R + lam Q' W^-1 Q)^-1 R) for the natural spline smoother
        X = (R + mp.mpf(lam) * Q.T * Winv * Q) ** -1 * R
        ref = float(2 + sum(X[i, i] for i in range(n - 2)))
        assert sp.trace_at(x, w, lam) == pytest.approx(ref, rel=1e-10)


def test_df_search_on_student_t_knots(rng):
    # continuous heavy-tailed samples give knot gaps spanning ~6 decades
    for seed in range(5):
        r = np.random.default_rng(seed)
        x = np.sort(r.standard_t(3, 500))
        w = np.r_[np.diff(x)[0] / 2, (x[2:] - x[:-2]) / 2, np.diff(x)[-1] / 2]
        g = r.normal(size=500)
        fit = sp.fit_spline(x, w, g, 3.0)
        assert sp.trace_at(x, w, fit.lam) == pytest.approx(3.0, abs=1e-3)


def test_df_two_is_weighted_line(rng):
    x, w, g = instance(rng, 15)
    fit = sp.fit_spline(x, w, g, df=2.0)
    A = np.column_stack([np.ones_like(x), x])
    coef = np.linalg.lstsq(A * np.sqrt(w)[:, None], g * np.sqrt(w), rcond=None)[0]
    np.testing.assert_allclose(fit.values, A @ coef, atol=1e-8)
    np.testing.assert_allclose(fit.predict(np.linspace(x[0], x[-1], 7)),
                               coef[0] + coef[1] * np.linspace(x[0], x[-1], 7), atol=1e-8)


def test_df_n_interpolates(rng):
    x, w, g = instance(rng, 9)
    fit = sp.fit_spline(x, w, g, df=9.0)
    np.testing.assert_allclose(fit.predict(x), g, atol=1e-8)


def test_near_limits_use_search(rng):
    x, w, g = instance(rng, 12)
    lo = sp.fit_spline(x, w, g, df=2.2)
    hi = sp.fit_spline(x, w, g, df=11.5)
    assert sp.trace_at(x, w, lo.lam) == pytest.approx(2.2, abs=1e-3)
    assert sp.trace_at(x, w, hi.lam) == pytest.approx(11.5, abs=1e-3)


def test_smoother_is_symmetrizable_psd_contraction(rng):
    x, w, _ = instance(rng, 20)
    S = dense_smoother(x, w, 0.7)
    sq = np.sqrt(w)
    A = sq[:, None] * S / sq[None, :]
    np.testing.assert_allclose(A, A.T, atol=1e-10)
    ev = np.linalg.eigvalsh(0.5 * (A + A.T))
    assert ev.min() > -1e-10 and ev.max() < 1 + 1e-10


def test_trace_decreases_in_lambda(rng):
    x, w, _ = instance(rng, 40)
    traces = [sp.trace_at(x, w, lam) for lam in np.logspace(-6, 6, 25)]
    assert np.all(np.diff(traces) < 0)
    assert traces[0] < 40 and traces[-1] > 2


def test_natural_boundary_and_knot_values(rng):
    x, w, g = instance(rng, 20)
    fit = sp.fit_spline(x, w, g)
    assert fit.second[0] == 0.0 and fit.second[-1] == 0.0
    np.testing.assert_allclose(fit.predict(x), fit.values, atol=1e-12)


def test_second_derivatives_reproduce_cubic_curvature():
    # a natural spline through a line has zero curvature everywhere
    x = np.array([0.0, 0.3, 1.0, 1.7, 2.5, 4.0])
    np.testing.assert_allclose(sp.second_derivatives(x, 2 * x - 1), 0.0, atol=1e-12)


def test_roughness_matches_integral():
    x = np.array([0.0, 0.5, 1.2, 2.0, 3.1, 4.0])
    s = np.array([0.0, 1.0, 0.3, -0.4, 0.8, 0.1])
    _, _, K = sp.dense_penalty(x)
    fit = sp.SmoothingSpline(x, s, sp.second_derivatives(x, s))
    # the second derivative is piecewise linear: integrate its square exactly per interval
    gam = fit.second
    h = np.diff(x)
    integral = np.sum(h / 3 * (gam[:-1] ** 2 + gam[:-1] * gam[1:] + gam[1:] ** 2))
    assert s @ K @ s == pytest.approx(integral, rel=1e-10)


def test_linear_extrapolation_outside_knots(rng):
    x, w, g = instance(rng, 10)
    fit = sp.fit_spline(x, w, g)
    left = fit.predict(np.array([x[0] - 2, x[0] - 1, x[0]]))
    assert left[1] - left[0] == pytest.approx(left[2] - left[1], rel=1e-10)


def test_preconditions(rng):
    x, w, g = instance(rng, 6)
    with pytest.raises(InfeasibleDfError):
        sp.fit_spline(x[:3], w[:3], g[:3])
    with pytest.raises(InfeasibleDfError):
        sp.fit_spline(x, w, g, df=7)
    with pytest.raises(InvalidInputError):
        sp.fit_spline(x, -w, g)
    with pytest.raises(InvalidInputError):
        sp.fit_spline(x[::-1], w, g)


@given(st.integers(10, 200), st.integers(0, 2**32 - 1))
def test_fit_beats_zero_function(n, seed):
    r = np.random.default_rng(seed)
    x, w, g = instance(r, n)
    fit = sp.fit_spline(x, w, g)
    _, _, K = sp.dense_penalty(x) if n <= 40 else (None, None, None)
    sse = np.dot(w, (g - fit.values) ** 2)
    penalty = fit.lam * fit.values @ K @ fit.values if K is not None else 0.0
    assert sse + penalty <= np.dot(w, g * g) + 1e-9
    assert sp.trace_at(x, w, fit.lam) == pytest.approx(3.0, abs=1e-3)
