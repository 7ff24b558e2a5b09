import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from boostnpmle import likelihood as lk
from boostnpmle.data import build_dataset, trapezoid_weights
from boostnpmle.errors import InvalidInputError, NumericalRangeError, WeightUnderflowError


def qa(values):
    ds = build_dataset(values)
    return ds.freqs, trapezoid_weights(ds)


def test_flat_potential_on_uneven_grid():
    q, a = qa([0, 1, 3])
    f = np.zeros(3)
    assert lk.log_likelihood(q, a, f) == pytest.approx(-math.log(3), abs=1e-15)
    assert lk.surrogate(q, a, f) == -3.0


def test_shift_invariance_of_loglik():
    q, a = qa([0.0, 0.4, 1.1, 2.0, 2.0, 3.5])
    f = np.array([0.3, -1.0, 2.0, 0.5, -0.2])
    base = lk.log_likelihood(q, a, f)
    for c in (-50.0, -1.0, 3.0, 400.0):
        assert lk.log_likelihood(q, a, f + c) == pytest.approx(base, abs=1e-12)


def test_loglik_matches_naive_formula(rng):
    for _ in range(50):
        x = np.sort(rng.uniform(0, 3, 5))
        q, a = qa(x)
        f = rng.uniform(-2, 2, 5)
        naive = np.dot(q, f) - math.log(np.sum(a * np.exp(f)))
        assert lk.log_likelihood(q, a, f) == pytest.approx(naive, abs=1e-12)


def test_bound_is_tight_when_normalized():
    q, a = qa([0.0, 0.5, 0.7, 2.0])
    f = np.array([0.1, -0.3, 0.4, 0.0])
    f = f - math.log(np.dot(a, np.exp(f)))
    assert lk.log_likelihood(q, a, f) - lk.surrogate(q, a, f) == pytest.approx(1.0, abs=1e-14)


def test_weights_responses_at_zero():
    q, a = qa([1, 2, 2, 3])
    st_ = lk.weights_responses(q, a, np.zeros(3))
    np.testing.assert_array_equal(st_.weights, [0.5, 1.0, 0.5])
    np.testing.assert_array_equal(st_.responses, [-0.5, -0.5, -0.5])
    np.testing.assert_array_equal(lk.surrogate_gradient(q, a, np.zeros(3)), [-0.25, -0.5, -0.25])


def test_responses_vanish_at_optimum():
    q, a = qa([0.0, 0.2, 0.2, 0.9, 1.5, 1.5, 1.5])
    f = lk.optimal_log_potential(q, a)
    np.testing.assert_allclose(lk.weights_responses(q, a, f).responses, 0.0, atol=1e-15)


def test_recursive_weight_update_matches_recomputation(rng):
    q, a = qa(rng.normal(size=30))
    f = rng.normal(scale=0.5, size=30)
    b = rng.normal(scale=0.5, size=30)
    w_prev = lk.weights_responses(q, a, f).weights
    w_next = lk.weights_responses(q, a, f + b).weights
    np.testing.assert_allclose(w_prev * np.exp(b), w_next, rtol=1e-12, atol=0)


def test_underflow_and_overflow_are_reported():
    q, a = qa([0, 1, 2])
    with pytest.raises(WeightUnderflowError, match="knot 1"):
        lk.weights_responses(q, a, np.array([0.0, -800.0, 0.0]))
    with pytest.raises(NumericalRangeError):
        lk.surrogate(q, a, np.array([0.0, 701.0, 0.0]))
    with pytest.raises(NumericalRangeError):
        lk.log_likelihood(q, a, np.array([0.0, np.inf, 0.0]))
    with pytest.raises(InvalidInputError):
        lk.log_likelihood(q, a, np.zeros(4))


def test_surrogate_shift_identity():
    q, a = qa([0.0, 0.3, 0.3, 1.0, 2.2])
    f = np.array([0.2, -0.1, 0.4, 0.0])
    Z = lk.normalizer(a, f)
    for c in (-1.0, 0.3, 2.0):
        expected = lk.surrogate(q, a, f) + c - (math.exp(c) - 1) * Z
        assert lk.surrogate(q, a, f + c) == pytest.approx(expected, abs=1e-12)


def fd_gradient(fun, f, h=1e-5):
    g = np.empty_like(f)
    for i in range(f.size):
        e = np.zeros_like(f)
        e[i] = h
        g[i] = (fun(f + e) - fun(f - e)) / (2 * h)
    return g


def test_gradients_match_finite_differences(rng):
    x = np.sort(rng.uniform(0, 2, 7))
    q, a = qa(np.concatenate([x, x[:3]]))
    f = rng.uniform(-1, 1, 7)
    np.testing.assert_allclose(lk.surrogate_gradient(q, a, f),
                               fd_gradient(lambda v: lk.surrogate(q, a, v), f), atol=1e-6)
    np.testing.assert_allclose(lk.log_likelihood_gradient(q, a, f),
                               fd_gradient(lambda v: lk.log_likelihood(q, a, v), f), atol=1e-6)


potentials = arrays(np.float64, 6, elements=st.floats(-30, 30))


@given(potentials)
def test_sandwich_bound(f):
    q, a = qa([0.0, 0.1, 0.5, 0.5, 0.9, 1.4, 3.0])
    assert lk.log_likelihood(q, a, f) >= 1 + lk.surrogate(q, a, f) - 1e-10


@given(potentials)
def test_weights_positive(f):
    q, a = qa([0.0, 0.1, 0.5, 0.9, 1.4, 3.0])
    assert np.all(lk.weights_responses(q, a, f).weights > 0)
