import math

import numpy as np
import pytest
from scipy import integrate

from singlegap.kernels import (
    HermiteBasis,
    SemicircleDensity,
    classical_location,
    correlation_fn,
    custom_kernel,
    gue_kernel,
    gue_kernel_function,
    hermite_functions,
    rescaled_kernel,
    semicircle_cdf,
    semicircle_density,
    sine_kernel,
    sine_kernel_function,
)


# --- semicircle ---------------------------------------------------------------

def test_semicircle_values():
    assert semicircle_density(0.0) == pytest.approx(1 / math.pi, abs=1e-15)
    assert semicircle_density(2.0) == 0.0
    assert semicircle_density(3.0) == 0.0
    assert semicircle_density(-3.0) == 0.0


def test_semicircle_integrates_to_one():
    val, _ = integrate.quad(semicircle_density, -2, 2, epsabs=1e-13, epsrel=1e-13)
    assert abs(val - 1) <= 1e-10


def test_semicircle_even_and_nonnegative():
    u = np.linspace(-5, 5, 1001)
    rho = semicircle_density(u)
    assert np.all(rho >= 0)
    np.testing.assert_array_equal(rho, semicircle_density(-u))


def test_semicircle_cdf_matches_quadrature():
    # u = 2 sin(t) removes the square-root edge singularity
    dens = lambda t: 2 / math.pi * math.cos(t) ** 2  # noqa: E731
    for u in (-1.7, -0.3, 0.0, 0.9, 1.99):
        ref, _ = integrate.quad(dens, -math.pi / 2, math.asin(u / 2), epsabs=1e-14)
        assert semicircle_cdf(u) == pytest.approx(ref, abs=1e-12)
    obj = SemicircleDensity()
    assert obj.cdf(obj.quantile(0.3)) == pytest.approx(0.3, abs=1e-12)


# --- classical locations --------------------------------------------------------

def _quantile_oracle(q):
    """Bisection on the quad-integrated density (independent of the closed form)."""
    lo, hi = -2.0, 2.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        mass, _ = integrate.quad(semicircle_density, -2, mid, epsabs=1e-14, epsrel=1e-14)
        lo, hi = (mid, hi) if mass < q else (lo, mid)
    return 0.5 * (lo + hi)


def test_classical_location_examples():
    assert classical_location(50, 100) == 0.0
    assert classical_location(100, 100) == 2.0
    oracle = _quantile_oracle(0.25)
    assert classical_location(25, 100) == pytest.approx(oracle, abs=1e-12)
    assert classical_location(1, 4) == pytest.approx(oracle, abs=1e-12)


def test_classical_location_increasing_and_rejects():
    n = 37
    u = [classical_location(i, n) for i in range(1, n + 1)]
    assert np.all(np.diff(u) > 0)
    assert -2 <= u[0] and u[-1] <= 2
    for bad in (0, n + 1, -3):
        with pytest.raises(ValueError):
            classical_location(bad, n)


# --- Hermite functions ------------------------------------------------------------

def test_hermite_orthonormal_gauss_hermite_oracle():
    # psi_j psi_k = P_j P_k exp(-x^2/2); Gauss-Hermite_e with 100 nodes is exact here
    x, w = np.polynomial.hermite_e.hermegauss(100)
    n = 64
    P = hermite_functions(x, n) * np.exp(x**2 / 4)[:, None]
    gram = (P * w[:, None]).T @ P
    assert np.abs(gram - np.eye(n)).max() <= 1e-8


def test_hermite_low_order_closed_forms():
    x = np.linspace(-4, 4, 17)
    psi = hermite_functions(x, 3)
    g = np.exp(-x**2 / 4) * (2 * math.pi) ** -0.25
    np.testing.assert_allclose(psi[:, 0], g, rtol=1e-14)
    np.testing.assert_allclose(psi[:, 1], x * g, rtol=1e-14, atol=1e-300)
    np.testing.assert_allclose(psi[:, 2], (x**2 - 1) / math.sqrt(2) * g, rtol=1e-13, atol=1e-15)


def test_hermite_no_overflow_large_rank():
    n = 4096
    x = np.linspace(-3 * math.sqrt(n), 3 * math.sqrt(n), 41)
    psi = hermite_functions(x, n)
    assert np.all(np.isfinite(psi))
    # |psi_k| <= 1 (Cramer's bound is about 1.09 / (2 pi)^{1/4} in this scaling)
    assert np.abs(psi).max() < 1.0
    # far outside the bulk every function is tiny but the computation stays finite
    assert np.abs(psi[0]).max() < 1e-100


def test_hermite_basis_object():
    b = HermiteBasis(5)
    assert b(np.array([0.3])).shape == (1, 5)
    with pytest.raises(ValueError):
        HermiteBasis(0)


# --- GUE kernel ---------------------------------------------------------------------

def test_gue_kernel_rank_one():
    assert gue_kernel(1, 0.0, 0.0) == pytest.approx((2 * math.pi) ** -0.5, rel=1e-14)


def test_gue_kernel_matches_direct_sum():
    x = np.array([-3.0, -0.2, 0.0, 1.3, 4.1])
    y = np.array([2.5, -0.2, 0.7, 1.3, -1.0])
    for n in (1, 2, 7, 30):
        direct = np.sum(hermite_functions(x, n) * hermite_functions(y, n), axis=1)
        np.testing.assert_allclose(gue_kernel(n, x, y), direct, atol=1e-12)


def test_gue_kernel_symmetric_and_rejects():
    assert gue_kernel(9, 0.4, -1.1) == gue_kernel(9, -1.1, 0.4)
    with pytest.raises(ValueError):
        gue_kernel(0, 0.0, 0.0)


@pytest.mark.parametrize("n", [1, 5, 20])
def test_gue_kernel_trace(n):
    edge = 2 * math.sqrt(n) + 12
    val, _ = integrate.quad(lambda x: gue_kernel(n, x, x), -edge, edge, limit=200)
    assert abs(val - n) <= 1e-6


# --- rescaled kernel -------------------------------------------------------------------

def test_rescaled_kernel_diagonal_near_one():
    assert abs(rescaled_kernel(400, 0.0, 0.0, 0.0) - 1.0) <= 0.05


def test_rescaled_kernel_trend_to_sine():
    errs = [abs(rescaled_kernel(n, 0.0, 0.0, 0.5) - 2 / math.pi) for n in (100, 400)]
    assert errs[1] < errs[0]


def test_rescaled_kernel_symmetric_and_rejects():
    assert rescaled_kernel(60, 0.5, 0.2, 1.7) == rescaled_kernel(60, 0.5, 1.7, 0.2)
    for u in (2.0, -2.0, 2.5):
        with pytest.raises(ValueError):
            rescaled_kernel(60, u, 0.0, 0.0)


@pytest.mark.parametrize("u", [-1.0, 0.0, 1.0])
def test_rescaled_kernel_bounded_diagonal(u):
    x = np.linspace(-10, 10, 101)
    for n in (50, 120):
        d = rescaled_kernel(n, u, x, x)
        assert d.min() >= 0 and d.max() <= 1.2


# --- sine kernel and correlations --------------------------------------------------------

def test_sine_kernel_values():
    assert sine_kernel(0.0, 0.0) == 1.0
    assert abs(sine_kernel(0.0, 1.0)) < 1e-16
    assert sine_kernel(0.0, 0.5) == pytest.approx(2 / math.pi, rel=1e-15)
    k = sine_kernel_function()
    assert k.diagonal_one
    np.testing.assert_array_equal(k.diagonal(np.linspace(-3, 3, 7)), np.ones(7))


def test_correlation_fn_examples():
    K = sine_kernel_function()
    assert correlation_fn(K, [0.0]) == pytest.approx(1.0)
    s = sine_kernel(0.0, 0.5)
    assert correlation_fn(K, [0.0, 0.5]) == pytest.approx(1 - s * s, rel=1e-13)
    assert correlation_fn(K, [0.0, 0.5]) == pytest.approx(0.594715, abs=1e-6)
    assert abs(correlation_fn(K, [0.3, 0.3])) < 1e-15
    assert correlation_fn(K, []) == 1.0


def test_custom_kernel_is_symmetrised():
    k = custom_kernel(lambda x, y: x * x * y, rank=None)
    assert k(1.0, 2.0) == k(2.0, 1.0)
    assert k.kind == "custom"


def test_feature_matrix_matches_evaluator():
    k = gue_kernel_function(12)
    x = np.linspace(-5, 5, 9)
    np.testing.assert_allclose(k.matrix(x), k(x[:, None], x[None, :]), atol=1e-12)


# --- invariants ------------------------------------------------------------------------------

@pytest.mark.property
@pytest.mark.parametrize("n,x,y", [(3, 0.0, 0.0), (11, -2.5, 1.0), (30, 3.0, -3.0), (30, 0.7, 0.71)])
def test_reproducing_property(n, x, y):
    f = lambda z: gue_kernel(n, x, z) * gue_kernel(n, z, y)  # noqa: E731
    edge = 2 * math.sqrt(n) + 12
    val, _ = integrate.quad(f, -edge, edge, limit=400, epsabs=1e-11)
    assert abs(val - gue_kernel(n, x, y)) <= 1e-6


@pytest.mark.property
@pytest.mark.parametrize("n", [3, 8, 12])
def test_gaudin_integral_recursion(n):
    K = gue_kernel_function(n)
    edge = 2 * math.sqrt(n) + 10
    rho = lambda *pts: correlation_fn(K, list(pts))  # noqa: E731
    # k = 0: integrating rho_1 gives n
    val, _ = integrate.quad(lambda t: rho(t), -edge, edge, limit=200)
    assert abs(val - n) <= 1e-5
    # k = 1 and k = 2
    for pts in ([0.3], [-1.2], [0.3, 1.1], [-0.5, 2.0]):
        k = len(pts)
        val, _ = integrate.quad(lambda t: rho(*pts, t), -edge, edge, limit=400, epsabs=1e-10)
        assert abs(val / (n - k) - rho(*pts)) <= 1e-5
