import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stargraph_isp.bessel import spherical_in_table, spherical_jn_table
from stargraph_isp.numerics import (
    Grid,
    SampledFunction,
    cumulative_integral,
    find_real_roots,
    integrate,
    least_squares_solve,
    second_derivative_smoothed,
    spherical_bessel_j,
)

from conftest import sampled


def _double_factorial(n):
    return math.prod(range(n, 0, -2)) if n > 0 else 1


def jn_exact(k, z: Fraction, terms=40):
    """Ascending series of j_k at a rational argument, in exact arithmetic."""
    tot = Fraction(0)
    for m in range(terms):
        tot += Fraction((-1) ** m) * z ** (2 * m + k) / (
            math.factorial(m) * 2**m * _double_factorial(2 * k + 2 * m + 1))
    return tot


# --- spherical Bessel functions ------------------------------------------


def test_bessel_trivial_values():
    assert spherical_bessel_j(0, 0.0) == 1.0
    assert spherical_bessel_j(3, 0.0) == 0.0
    assert abs(spherical_bessel_j(0, math.pi)) < 1e-16
    assert spherical_bessel_j(1, math.pi) == pytest.approx(1 / math.pi, rel=1e-12)


def test_bessel_high_order_small_argument():
    ref = float(jn_exact(21, Fraction(1, 2)))
    assert spherical_bessel_j(21, 0.5) == pytest.approx(ref, rel=1e-14)
    assert spherical_jn_table(21, np.array([0.5]))[0, 21] == pytest.approx(ref, rel=1e-14)


def test_bessel_rejects_negative_order():
    with pytest.raises(ValueError):
        spherical_bessel_j(-1, 1.0)


@pytest.mark.parametrize("z", [1e-4, 0.3, 2.5, 17.0, 63.0, 150.0])
def test_table_matches_scipy(z):
    from scipy.special import spherical_jn

    tab = spherical_jn_table(61, np.array([z]))[0]
    ref = spherical_jn(np.arange(62), z)
    assert np.max(np.abs(tab - ref)) <= 1e-14 * max(1.0, np.max(np.abs(ref)))


def test_modified_table_matches_scipy():
    from scipy.special import spherical_in

    z = np.array([1e-4, 0.7, 5.0, 40.0])
    tab = spherical_in_table(25, z)
    ref = spherical_in(np.arange(26)[None, :], z[:, None])
    assert np.max(np.abs(tab - ref) / np.abs(ref)) < 1e-12


def test_bessel_parity_for_negative_argument():
    tab_p = spherical_jn_table(9, np.array([2.3]))
    tab_n = spherical_jn_table(9, np.array([-2.3]))
    assert np.allclose(tab_n, tab_p * (-1.0) ** np.arange(10))


@settings(max_examples=60, deadline=None)
@given(st.floats(min_value=-300, max_value=300, allow_nan=False))
def test_bessel_bounded(z):
    assert np.all(np.abs(spherical_jn_table(61, np.array([z]))) <= 1.0 + 1e-15)


def test_bessel_recurrence_residual():
    z = np.linspace(0.1, 200, 4000)
    j = spherical_jn_table(21, z)
    k = np.arange(1, 21)
    res = j[:, k - 1] + j[:, k + 1] - (2 * k + 1) * j[:, k] / z[:, None]
    assert np.max(np.abs(res)) <= 1e-10 * np.max(np.abs(j))


# --- grids and quadrature ------------------------------------------------


def test_grid_invariants():
    g = Grid.uniform(2.0, 11)
    assert g.start == 0.0 and g.length == 2.0 and g.h == pytest.approx(0.2)
    with pytest.raises(ValueError):
        Grid(np.array([0.0, 1.0, 0.5]))
    with pytest.raises(ValueError):
        Grid(np.array([0.0, 0.1, 0.5]))
    with pytest.raises(ValueError):
        Grid.uniform(0.0)


def test_sampled_function_rejects_bad_values():
    g = Grid.uniform(1.0, 5)
    with pytest.raises(ValueError):
        SampledFunction(g, [0, 1, 2])
    with pytest.raises(ValueError):
        SampledFunction(g, [0, 1, np.nan, 2, 3])


def test_cumulative_integral_examples():
    F = cumulative_integral(sampled(np.ones_like, 2.0, 2001))
    assert F.values[0] == 0.0
    assert np.max(np.abs(F.values - F.x)) < 1e-14
    assert integrate(sampled(lambda x: x, 1.0)) == pytest.approx(0.5, abs=1e-12)
    assert abs(integrate(sampled(lambda x: np.sin(8 * x), math.pi / 2))) < 1e-8


def test_cumulative_integral_needs_five_points():
    with pytest.raises(ValueError):
        cumulative_integral(SampledFunction(Grid.uniform(1.0, 4), np.ones(4)))


def test_cumulative_integral_order():
    errs = []
    for n in (41, 81, 161):
        F = cumulative_integral(sampled(np.cos, 2.0, n))
        errs.append(np.max(np.abs(F.values - np.sin(F.x))))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 4.0)


def test_integrate_then_differentiate():
    f = sampled(lambda x: np.exp(np.sin(3 * x)), 1.0, 2001)
    F = cumulative_integral(f).values
    h = f.grid.h
    d = (F[:-4] - 8 * F[1:-3] + 8 * F[3:-1] - F[4:]) / (12 * h)
    assert np.max(np.abs(d - f.values[2:-2])) <= h**3


# --- least squares -------------------------------------------------------


def test_least_squares_examples():
    assert np.allclose(least_squares_solve(np.eye(3), [1, 2, 3]), [1, 2, 3])
    assert least_squares_solve([[1.0], [1.0]], [0.0, 2.0]) == pytest.approx([1.0])
    rng = np.random.default_rng(0)
    A = rng.standard_normal((40, 8))
    x = rng.standard_normal(8)
    assert np.allclose(least_squares_solve(A, A @ x), x, atol=1e-10)


def test_least_squares_dimension_mismatch():
    with pytest.raises(ValueError):
        least_squares_solve(np.eye(3), [1.0, 2.0])


def test_least_squares_rank_deficient_minimum_norm():
    A = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
    x, info = least_squares_solve(A, [1.0, 2.0, 3.0], return_info=True)
    assert info["rank"] == 1
    assert np.allclose(x, [0.5, 0.5])


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10_000), st.integers(min_value=1, max_value=12))
def test_least_squares_residual_orthogonal(seed, n):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n + 5, n))
    b = rng.standard_normal(n + 5)
    x = least_squares_solve(A, b)
    g = A.T @ (A @ x - b)
    assert np.linalg.norm(g) <= 1e-8 * np.linalg.norm(A) * np.linalg.norm(b)


# --- roots ---------------------------------------------------------------


def test_find_real_roots_examples():
    r = find_real_roots(np.sin, 0.5, 7.0, 0.1)
    assert np.allclose(r, [math.pi, 2 * math.pi], atol=1e-12)
    r = find_real_roots(lambda t: np.cos(t) * np.sin(t), 0.5, 3.2, 0.05)
    assert np.allclose(r, [math.pi / 2, math.pi], atol=1e-12)


def test_find_real_roots_misses_double_root():
    assert find_real_roots(lambda t: (t - 1.05) ** 2, 0.0, 2.0, 0.1).size == 0


def test_find_real_roots_bad_arguments():
    with pytest.raises(ValueError):
        find_real_roots(np.sin, 1.0, 0.0, 0.1)
    with pytest.raises(ValueError):
        find_real_roots(np.sin, 0.0, 1.0, 0.0)


def test_characteristic_det_root_near_table_value(ex1_tables):
    from stargraph_isp.direct import characteristic_det

    r = find_real_roots(lambda t: np.array([characteristic_det(ex1_tables, v) for v in t]),
                        1.5, 1.6, 0.01)
    assert r.size == 1
    assert r[0] == pytest.approx(1.5656490615325, rel=1e-6)


# --- smoothed second derivative ------------------------------------------


@pytest.mark.parametrize("window", [5, 11, 51])
def test_second_derivative_of_quadratic(window):
    d2 = second_derivative_smoothed(sampled(lambda x: x**2, 1.0, 401), window)
    assert np.max(np.abs(d2.values - 2.0)) < 1e-8


def test_second_derivative_of_cosh():
    d2 = second_derivative_smoothed(sampled(lambda x: np.cosh(x) - 1, 1.0, 401), 11)
    inner = slice(20, -20)
    assert np.max(np.abs(d2.values[inner] - np.cosh(d2.x[inner]))) < 1e-6


def test_second_derivative_with_noise():
    from stargraph_isp.nsbf import compute_coefficients

    q = sampled(lambda x: np.exp(-(x - 0.5) ** 2), 1.0, 2001)
    s0 = compute_coefficients(q, 0).s[0]
    x = q.x
    clean = second_derivative_smoothed(SampledFunction(q.grid, s0), 201).values
    noisy_vals = s0 + 1e-6 * np.random.default_rng(1).standard_normal(x.size)
    noisy = second_derivative_smoothed(SampledFunction(q.grid, noisy_vals), 201).values
    inner = (x > 0.1) & (x < 0.9)
    assert np.max(np.abs(noisy[inner] - clean[inner])) < 1e-2


@pytest.mark.parametrize("window", [4, 3, 201])
def test_second_derivative_invalid_window(window):
    with pytest.raises(ValueError):
        second_derivative_smoothed(sampled(np.sin, 1.0, 401), window)
