import math

import numpy as np
import pytest

from stargraph_isp.graph import make_demo_graph
from stargraph_isp.oracle import (
    lam_of,
    oracle_graph_spectrum,
    oracle_norming_vectors,
    oracle_spectrum,
    shoot,
    signed_root,
)

from conftest import (
    ORACLE_ALPHA1, ORACLE_DD_Q2, ORACLE_DD_Q5, ORACLE_DN_Q2, ORACLE_DN_Q5, ORACLE_RHO, TABLE1,
    TABLE_DD_Q2, TABLE_DD_Q5, TABLE_DN_Q2, TABLE_DN_Q5, constant, sampled,
)


def test_shoot_trivial():
    r = shoot(constant(0.0), 2.0)
    assert r.y == pytest.approx(math.sin(2) / 2, abs=1e-10)
    assert r.dy == pytest.approx(math.cos(2), abs=1e-10)
    assert shoot(constant(1.0), 0.0).y == pytest.approx(math.sinh(1), abs=1e-10)


def test_shoot_neumann_and_terminal():
    q = constant(1.0)
    assert shoot(q, 0.0, init="neumann").y == pytest.approx(math.cosh(1), abs=1e-10)
    r = shoot(q, 0.0, init="terminal")
    assert r.y == pytest.approx(math.cosh(1), abs=1e-10)
    assert r.dy == pytest.approx(-math.sinh(1), abs=1e-10)


def test_shoot_imaginary_rho():
    r = shoot(constant(0.0), 2j)
    assert r.y == pytest.approx(math.sinh(2) / 2, rel=1e-10)


def test_shoot_vectorized_and_trace():
    q = sampled(lambda x: np.exp(-((x - 0.5) ** 2)))
    rho = np.array([1.0, 5.0, 30.0])
    r = shoot(q, rho, trace=True)
    assert r.y.shape == (3,) and r.trace.shape == (3, 2001)
    assert np.allclose(r.trace[:, -1], r.y)
    for k, v in enumerate(rho):
        assert shoot(q, v).y == pytest.approx(r.y[k], rel=1e-14)


def test_shoot_errors():
    with pytest.raises(ValueError):
        shoot(constant(0.0), 1.0, init="robin")
    with pytest.raises(ValueError):
        shoot(constant(0.0), 1.0, method="euler")


def test_signed_root_helpers():
    assert signed_root(-4.0) == -2.0 and signed_root(9.0) == 3.0
    assert lam_of(2j) == -4.0 and lam_of(3.0) == 9.0


def test_convergence_order_rk4():
    errs = []
    for n in (101, 201, 401):
        r = shoot(constant(1.0, 1.0, n), 3.0, method="rk4")
        k = math.sqrt(8.0)
        errs.append(abs(r.y - math.sin(k) / k))
    # observed ratios 15.95 and 15.98; 2^4 exactly sits inside rounding
    assert errs[0] / errs[1] >= 2**3.9 and errs[1] / errs[2] >= 2**3.9


def test_magnus_exact_for_constant_potential():
    r = shoot(constant(1.0, 1.0, 11), 3.0, method="magnus")
    k = math.sqrt(8.0)
    assert r.y == pytest.approx(math.sin(k) / k, abs=1e-14)


def test_convergence_order_magnus_airy():
    from scipy.special import airy

    rho = 3.0
    lam = rho * rho
    ai0, _, bi0, _ = airy(-lam)
    ai1, _, bi1, _ = airy(1 - lam)
    exact = math.pi * (ai0 * bi1 - bi0 * ai1)  # S for q(x) = x
    errs = [abs(shoot(sampled(lambda x: x, 1.0, n), rho).y - exact) for n in (51, 101, 201)]
    assert errs[0] / errs[1] >= 2**3.9 and errs[1] / errs[2] >= 2**3.9


def test_wronskian_of_shot_pair():
    q = sampled(lambda x: np.sin(8 * x) + 2 * math.pi / 3, math.pi / 2)
    for rho in (0.5, 7.0, 40.0):
        phi = shoot(q, rho, init="neumann")
        S = shoot(q, rho, init="dirichlet")
        assert phi.y * S.dy - phi.dy * S.y == pytest.approx(1.0, abs=1e-10)


def test_oracle_spectrum_trivial():
    assert np.allclose(oracle_spectrum(constant(0.0), "DD", 5), np.pi * np.arange(1, 6))
    assert np.allclose(oracle_spectrum(constant(0.0), "DN", 5), np.pi * (np.arange(1, 6) - 0.5))
    with pytest.raises(ValueError):
        oracle_spectrum(constant(0.0), "NN", 3)


def test_oracle_negative_eigenvalue():
    t = oracle_spectrum(constant(-20.0), "DD", 2)
    lam = t * np.abs(t)
    assert lam[0] == pytest.approx(math.pi**2 - 20, abs=1e-8)


def test_oracle_against_tables():
    q2 = sampled(lambda x: np.exp(-((x - 0.5) ** 2)))
    assert oracle_spectrum(q2, "DD", 201)[-1] ** 2 == pytest.approx(TABLE_DD_Q2[201], rel=1e-9)
    L5 = math.e**2 / 4
    q5 = sampled(lambda x: 1 / (x + 0.1), L5)
    # the printed value carries three decimals
    assert oracle_spectrum(q5, "DN", 41)[-1] ** 2 == pytest.approx(TABLE_DN_Q5[41], rel=1e-6)


def test_oracle_interlacing():
    q = sampled(lambda x: 1 / (x + 0.1), math.e**2 / 4)
    mu = oracle_spectrum(q, "DD", 60)
    nu = oracle_spectrum(q, "DN", 61)
    assert np.all(nu[:60] < mu) and np.all(mu < nu[1:])


def test_oracle_graph_spectrum_zero_star():
    rho = oracle_graph_spectrum(make_demo_graph("zero"), 6)
    assert np.allclose(rho / np.pi, [0.5, 1, 1, 1.5, 2, 2], atol=1e-10)


def test_oracle_graph_spectrum_example1():
    g = make_demo_graph("example1")
    t = oracle_graph_spectrum(g, 100)
    for k, v in ORACLE_RHO.items():
        assert t[k - 1] == pytest.approx(v, rel=1e-12)
    # agreement with the printed digits is asserted at the 1e-6 level; the
    # remaining 2.6e-8 on rho_1 survives grid refinement and is attributed to
    # the reference
    for k, v in TABLE1.items():
        assert t[k - 1] == pytest.approx(v, rel=1e-6)


def test_oracle_norming_vector_frozen():
    g = make_demo_graph("example1")
    a = oracle_norming_vectors(g, [ORACLE_RHO[1]])[0]
    assert np.allclose(a, ORACLE_ALPHA1, atol=1e-10)


def test_frozen_two_spectra_agree_with_tables():
    # the tables print 4 to 14 significant digits and truncate rather than
    # round, so agreement is to one unit of the last printed digit
    pairs = [(ORACLE_DD_Q2, TABLE_DD_Q2), (ORACLE_DN_Q2, TABLE_DN_Q2),
             (ORACLE_DD_Q5, TABLE_DD_Q5), (ORACLE_DN_Q5, TABLE_DN_Q5)]
    for oracle, table in pairs:
        for n, v in table.items():
            decimals = len(repr(v).split(".")[1])
            assert abs(oracle[n] - v) <= max(10.0 ** -decimals, 1e-12 * v)
