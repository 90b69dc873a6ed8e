import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import simpson

from hawkesdrift.basis import TrigBasis, dimension

KINDS = ["cosine", "fourier"]


def simpson_gram(basis, m, points=10_001):
    """Pairwise inner products on the interval by composite Simpson quadrature."""
    xs = np.linspace(basis.lower, basis.upper, points)
    phi = basis.design_matrix(m, xs)
    d = phi.shape[1]
    gram = np.empty((d, d))
    for i in range(d):
        for j in range(i, d):
            gram[i, j] = gram[j, i] = simpson(phi[:, i] * phi[:, j], x=xs)
    return gram


def test_dimension():
    assert [dimension(m) for m in range(5)] == [1, 3, 5, 7, 9]


@pytest.mark.parametrize("kind", KINDS)
def test_constant_function(kind):
    b = TrigBasis(kind=kind)
    for x in (-1.0, -0.3, 0.0, 0.99, 1.0):
        assert b.eval(2, x)[0] == pytest.approx(1 / math.sqrt(2))


def test_fourier_endpoint_phase():
    b = TrigBasis(kind="fourier")
    phi = b.eval(1, -1.0)
    assert phi[1] == pytest.approx(1.0)
    assert phi[2] == pytest.approx(0.0, abs=1e-15)


def test_cosine_endpoint_phase():
    b = TrigBasis(kind="cosine")
    phi = b.eval(1, -1.0)
    np.testing.assert_allclose(phi, [1 / math.sqrt(2), 1.0, 1.0])
    phi = b.eval(1, 1.0)
    np.testing.assert_allclose(phi, [1 / math.sqrt(2), -1.0, 1.0])


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("interval", [(-1.0, 1.0), (0.0, 3.0), (-2.5, -0.5)])
def test_orthonormal(kind, interval):
    b = TrigBasis(*interval, kind=kind)
    gram = simpson_gram(b, 3)
    assert np.max(np.abs(gram - np.eye(7))) < 1e-10


@pytest.mark.parametrize("kind", KINDS)
def test_outside_interval_is_zero(kind):
    b = TrigBasis(kind=kind)
    phi = b.design_matrix(4, [-1.0001, 1.5, 7.0, -30.0])
    assert np.all(phi == 0)


@pytest.mark.parametrize("kind", KINDS)
def test_single_row_equals_eval(kind):
    b = TrigBasis(kind=kind)
    np.testing.assert_array_equal(b.design_matrix(1, [0.3])[0], b.eval(1, 0.3))


@pytest.mark.parametrize("kind", KINDS)
def test_column_norms_monte_carlo(kind):
    # uniform density 1/2 on [-1, 1]: E[phi_l(X)^2] = 1/2 for every l
    b = TrigBasis(kind=kind)
    xs = np.random.default_rng(1).uniform(-1, 1, 100_000)
    norms = np.mean(b.design_matrix(5, xs) ** 2, axis=0)
    np.testing.assert_allclose(norms, 0.5, rtol=0.05)


def test_model_index_bounds():
    b = TrigBasis(max_m=3)
    with pytest.raises(ValueError):
        b.eval(4, 0.0)
    with pytest.raises(ValueError):
        TrigBasis(1.0, 1.0)
    with pytest.raises(ValueError):
        TrigBasis(kind="legendre")


@pytest.mark.parametrize("kind", KINDS)
@settings(max_examples=40, deadline=None)
@given(st.integers(0, 19), st.floats(-1.0, 1.0))
def test_nested_prefix(kind, m, x):
    b = TrigBasis(kind=kind)
    small, large = b.eval(m, x), b.eval(m + 1, x)
    np.testing.assert_array_equal(large[: small.size], small)


@pytest.mark.parametrize("kind", KINDS)
def test_sup_norm_inequality(kind):
    b = TrigBasis(kind=kind)
    grid = np.linspace(-1, 1, 20_001)
    rng = np.random.default_rng(7)
    for m in (1, 3, 8, 15):
        phi = b.design_matrix(m, grid)
        for _ in range(25):
            coef = rng.standard_normal(dimension(m))
            sup2 = np.max(np.abs(phi @ coef)) ** 2
            # orthonormality: ||t||^2 equals the squared coefficient norm
            assert sup2 <= b.sup_norm_constant() * dimension(m) * coef @ coef
