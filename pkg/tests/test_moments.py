import math
from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from fragarea.errors import InvalidParameter
from fragarea.measures import Atomic, BetaSplit, Brownian, FragmentationParams, MassPartition, phi, truncate
from fragarea.moments import (
    coeff_a, coeff_a_jk, mean_area_for_partition, moment_table, moment_upper_bound, tagged_fragment_moment,
    takacs_table,
)

from conftest import SQRT_PI_8


def test_brownian_first_two_moments(brownian):
    t = moment_table(brownian, 2)
    assert t.M[1] == pytest.approx(SQRT_PI_8, rel=1e-12)
    assert t.M[2] == pytest.approx(5.0 / 12.0, rel=1e-12)


def test_brownian_a1_value(brownian):
    assert coeff_a(brownian, 1) == pytest.approx(2**1.5 / math.sqrt(math.pi), rel=1e-14)


def test_takacs_rationals():
    K = takacs_table(3).K_seq
    assert K[:4] == (Fraction(-1, 2), Fraction(1, 8), Fraction(5, 64), Fraction(15, 128))


def test_takacs_moments_against_mpmath():
    # independent evaluation of 4 sqrt(pi) 2^{-k/2} k! K_k / Gamma((3k-1)/2) in 30 digits
    mp.mp.dps = 30
    t = takacs_table(12)
    for k in range(1, 13):
        kk = mp.mpf(t.K_seq[k].numerator) / t.K_seq[k].denominator
        exact = 4 * mp.sqrt(mp.pi) * mp.power(2, -mp.mpf(k) / 2) * mp.factorial(k) * kk / mp.gamma(mp.mpf(3 * k - 1) / 2)
        assert t.M[k] == pytest.approx(float(exact), rel=1e-13)


def test_brownian_matches_takacs(brownian):
    ours = moment_table(brownian, 20).M
    ref = takacs_table(20).M
    for k in range(1, 21):
        assert ours[k] == pytest.approx(ref[k], rel=1e-10)


def test_brownian_ajk_against_scipy(brownian):
    # symmetrised binomial moment by adaptive quadrature over (1/2, 1)
    r = brownian.r
    dens = lambda x: 2.0 / math.sqrt(2 * math.pi * x**3 * (1 - x) ** 3)
    for j, k in ((1, 2), (1, 3), (2, 5), (3, 4)):
        g = lambda x: 0.5 * math.comb(k, j) * (x ** (j * r) * (1 - x) ** ((k - j) * r) + x ** ((k - j) * r) * (1 - x) ** (j * r)) * dens(x)
        ref, _ = integrate.quad(g, 0.5, 1.0, epsrel=1e-12, limit=200)
        assert coeff_a_jk(brownian, j, k) == pytest.approx(ref, rel=1e-9)


def test_ajk_symmetric(brownian, beta32):
    for params in (brownian, beta32):
        for k in range(2, 9):
            for j in range(1, k):
                assert coeff_a_jk(params, j, k) == pytest.approx(coeff_a_jk(params, k - j, k), rel=1e-13)


@pytest.mark.parametrize("name", ["brownian", "beta32"])
def test_methods_agree(name, request):
    params = request.getfixturevalue(name)
    for k in range(1, 21):
        assert coeff_a(params, k, "closed-form") == pytest.approx(coeff_a(params, k, "quadrature"), rel=1e-10)
        for j in range(1, k):
            assert coeff_a_jk(params, j, k, "closed-form") == pytest.approx(coeff_a_jk(params, j, k, "quadrature"), rel=1e-10)


def test_dyadic_moments(dyadic):
    t = moment_table(dyadic, 2)
    m1 = 2 + math.sqrt(2)
    assert t.M[1] == pytest.approx(m1, rel=1e-13)
    assert t.M[2] == pytest.approx(4 / 3 + m1**2, rel=1e-13)


def test_dyadic_moments_from_laplace_series(dyadic):
    # oracle: cumulants of the infinite product, kappa_k = (k-1)! sum_n 2^n (2^{n(alpha-1)})^k
    alpha = dyadic.alpha
    kappa = [None] + [math.factorial(k - 1) * sum(2.0**n * 2.0 ** (n * (alpha - 1) * k) for n in range(200)) for k in range(1, 5)]
    m = [1.0, kappa[1], kappa[2] + kappa[1] ** 2]
    m.append(kappa[3] + 3 * kappa[2] * kappa[1] + kappa[1] ** 3)
    t = moment_table(dyadic, 3)
    for k in range(1, 4):
        assert t.M[k] == pytest.approx(m[k], rel=1e-12)


def test_zeroth_row_only(brownian):
    t = moment_table(brownian, 0)
    assert t.M == (1.0,)
    assert t.rows() == [(0, t.rows()[0][1], 1.0, t.rows()[0][3], True)]


def test_upper_bound_equality_at_one(brownian, beta32, dyadic):
    for params in (brownian, beta32, dyadic):
        t = moment_table(params, 20)
        assert t.M[1] == pytest.approx(t.bounds[0], rel=1e-12)
        assert all(t.bound_ok)
        assert t.M[1] == pytest.approx(1.0 / phi(params, -params.alpha), rel=1e-12)


@given(st.floats(min_value=-1.95, max_value=-1.05), st.floats(min_value=0.2, max_value=5.0),
       st.floats(min_value=-3.0, max_value=-0.1))
def test_bound_holds_beta(beta, c, alpha):
    params = FragmentationParams(BetaSplit(c=c, beta=beta), alpha)
    t = moment_table(params, 8)
    assert all(t.bound_ok)
    assert all(m > 0 for m in t.M)


@given(st.lists(st.tuples(st.floats(0.5, 0.95), st.floats(0.05, 4.0)), min_size=1, max_size=4),
       st.floats(min_value=-2.0, max_value=-0.1))
def test_bound_holds_atomic(atoms, alpha):
    params = FragmentationParams(Atomic(tuple(atoms)), alpha)
    t = moment_table(params, 8)
    assert all(t.bound_ok)


@given(st.floats(min_value=-1.9, max_value=-1.1), st.floats(min_value=-2.0, max_value=-0.2))
def test_log_convex_moments(beta, alpha):
    # M_k^2 <= M_{k-1} M_{k+1} for any positive random variable
    M = moment_table(FragmentationParams(BetaSplit(1.0, beta), alpha), 8).M
    for k in range(1, 8):
        assert M[k] ** 2 <= M[k - 1] * M[k + 1] * (1 + 1e-10)


def test_tagged_fragment_moment(brownian):
    assert moment_upper_bound(brownian, 3) == pytest.approx(3 * tagged_fragment_moment(brownian, 3))
    assert tagged_fragment_moment(brownian, 1) == pytest.approx(SQRT_PI_8, rel=1e-12)


def test_truncation_monotone(brownian):
    m1 = [moment_table(FragmentationParams(truncate(Brownian(), n), -0.5), 1).M[1] for n in (4, 16, 64, 256)]
    assert all(b < a for a, b in zip(m1, m1[1:]))
    assert abs(m1[-1] - SQRT_PI_8) < abs(m1[0] - SQRT_PI_8)


def test_mean_area_for_partition(dyadic):
    m1 = 2 + math.sqrt(2)
    assert mean_area_for_partition(dyadic, MassPartition((1.0,))) == pytest.approx(m1)
    assert mean_area_for_partition(dyadic, (0.5, 0.5)) == pytest.approx(2 * 0.5**1.5 * m1)


def test_bad_indices(brownian):
    with pytest.raises(InvalidParameter):
        moment_table(brownian, -1)
    with pytest.raises(InvalidParameter):
        coeff_a_jk(brownian, 3, 3)
    with pytest.raises(InvalidParameter):
        coeff_a(brownian, 0)
