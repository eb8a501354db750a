import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hypk.specfun import (bessel_i, bessel_ie, bessel_k, ive_safe, kve_safe, laplace_check, macdonald_integral,
                          theta_hw)

import oracles

# Values frozen from the power-series and integral-representation oracles.
I_1_1 = 0.565159103992485
I_2_1 = 0.13574766976703828
I_HALF_1 = 0.9376748882454876
K_HALF_PI = 0.030556854645954562
K_13_25 = 0.08297332088868557
I_13_25 = 2.1320875527782515
I_75_30 = 302785501061.83344


def test_bessel_i_reference_values():
    assert bessel_i(1, 1) == pytest.approx(I_1_1, rel=1e-12)
    assert bessel_i(2, 1) == pytest.approx(I_2_1, rel=1e-12)
    assert bessel_i(0.5, 1) == pytest.approx(I_HALF_1, rel=1e-12)
    assert bessel_i(1.3, 2.5) == pytest.approx(I_13_25, rel=1e-12)
    assert bessel_i(7.5, 30) == pytest.approx(I_75_30, rel=1e-12)


@pytest.mark.parametrize("nu,z", [(0.0, 0.1), (0.7, 3.0), (2.5, 12.0), (10.0, 19.0), (30.0, 5.0)])
def test_bessel_i_against_series(nu, z):
    assert bessel_i(nu, z) == pytest.approx(oracles.bessel_i_series(nu, z), rel=1e-12)


@pytest.mark.parametrize("z", [25.0, 60.0, 200.0])
def test_bessel_i_half_integer_large_argument(z):
    assert bessel_ie(0.5, z) == pytest.approx(oracles.bessel_i_half(z) * math.exp(-z), rel=1e-12)


def test_bessel_k_reference_values():
    assert bessel_k(0.5, math.pi) == pytest.approx(K_HALF_PI, rel=1e-12)
    assert bessel_k(1.3, 2.5) == pytest.approx(K_13_25, rel=1e-12)


@pytest.mark.parametrize("nu,z", [(0.2, 0.5), (1.7, 4.0), (3.0, 10.0)])
def test_bessel_k_against_integral(nu, z):
    assert bessel_k(nu, z) == pytest.approx(oracles.bessel_k_integral(nu, z), rel=1e-12)


def test_domain_errors():
    for f in (bessel_i, bessel_k):
        with pytest.raises(ValueError):
            f(1.0, 0.0)
        with pytest.raises(ValueError):
            f(50.0, 1.0)
    with pytest.raises(ValueError):
        bessel_i(-1.0, 1.0)


@given(st.floats(0, 20), st.floats(0.05, 40))
def test_k_even_in_order(nu, z):
    assert bessel_k(nu, z) == bessel_k(-nu, z)


@given(st.floats(0, 20), st.floats(0.05, 40))
def test_wronskian(nu, z):
    w = bessel_ie(nu, z) * kve_safe(nu + 1, z) + bessel_ie(nu + 1, z) * kve_safe(nu, z)
    assert w == pytest.approx(1 / z, rel=1e-10)


@given(st.floats(1, 20), st.floats(0.1, 40))
def test_i_recurrence(nu, z):
    lhs = bessel_ie(nu - 1, z) - bessel_ie(nu + 1, z)
    rhs = 2 * nu / z * bessel_ie(nu, z)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-300)


@given(st.floats(0, 10), st.floats(0.1, 20), st.floats(0.01, 5))
def test_i_positive_increasing(nu, z, dz):
    assert 0 < bessel_i(nu, z) < bessel_i(nu, z + dz)


@given(st.floats(0, 10), st.floats(0.1, 20), st.floats(0.01, 5))
def test_ik_product_decreasing(nu, z, dz):
    p = lambda s: bessel_ie(nu, s) * kve_safe(nu, s)
    assert p(z + dz) < p(z)


@pytest.mark.parametrize("nu", [0.3, 2.0])
def test_scaled_functions_continuous_across_asymptotic_switch(nu):
    z = np.array([0.999e5, 1.001e5])
    assert ive_safe(nu, z)[0] == pytest.approx(ive_safe(nu, z)[1] * math.sqrt(z[1] / z[0]), rel=1e-6)
    assert kve_safe(nu, z)[0] == pytest.approx(kve_safe(nu, z)[1] * math.sqrt(z[1] / z[0]), rel=1e-6)


def test_kve_complex_matches_half_order_closed_form():
    z = np.array([3 + 4j, 1e6 + 2e6j])
    expect = np.sqrt(np.pi / (2 * z))
    assert np.allclose(kve_safe(0.5, z), expect, rtol=1e-12)


def test_theta_window_and_sign():
    with pytest.raises(ValueError):
        theta_hw(1.0, 0.01)
    with pytest.raises(ValueError):
        theta_hw(1.0, 60.0)
    for t in (0.05, 0.1, 0.5, 2.0, 10.0, 50.0):
        assert theta_hw(np.array([0.5, 1.0, 2.0]), t).min() >= 0


@pytest.mark.parametrize("r,lam", [(1.0, 0.5), (2.0, 1.0), (0.5, 2.0)])
def test_laplace_check(r, lam):
    assert abs(laplace_check(r, lam) - 1) < 1e-6


def test_macdonald_integral():
    assert macdonald_integral(0.5, 1.0) == pytest.approx(math.sqrt(2 * math.pi) * math.exp(-math.pi), rel=1e-13)
    assert macdonald_integral(0.5, 1.0) == pytest.approx(0.10832122937756454, rel=1e-12)
    for beta, b in ((1.0, 0.3), (2.0, 4.0)):
        assert macdonald_integral(beta, b) == pytest.approx(oracles.lemma_integral_mp(0, beta, [], [], b), rel=1e-10)
