import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pipeflow.errors import DomainError, RangeError
from pipeflow.specfun import (AIRY_CONFIG, airy_ai, airy_ai_asymptotic, airy_ai_series,
                              bessel_i1, bessel_i1_prime)

mpmath.mp.dps = 30


def mp_ai(z):
    return complex(mpmath.airyai(mpmath.mpc(z.real, z.imag)))


def maclaurin_ai(z, terms=40):
    """Independent oracle: Ai = c1 f - c2 g with the standard Maclaurin series."""
    c1 = 0.355028053887817239260
    c2 = 0.258819403792806798405
    f = g = 0.0
    tf, tg = 1.0 + 0j, z
    for k in range(terms):
        f += tf
        g += tg
        tf *= z ** 3 / ((3 * k + 2) * (3 * k + 3))
        tg *= z ** 3 / ((3 * k + 3) * (3 * k + 4))
    return c1 * f - c2 * g


def test_airy_at_zero():
    assert abs(airy_ai(0.0) - 0.3550280539) < 1e-10
    assert abs(airy_ai(0.0) - maclaurin_ai(0.0)) < 1e-15


def test_airy_at_five():
    v = airy_ai(5.0)
    assert abs(v - 1.0834e-4) < 1e-8
    assert abs(v - mp_ai(5.0)) < 1e-12 * abs(v)


def test_airy_ode_residual_by_finite_differences():
    z, h = 1 + 1j, 1e-2
    f = [airy_ai(z + k * h) for k in (-2, -1, 0, 1, 2)]
    d2 = (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * h * h)
    assert abs(d2 - z * airy_ai(z)) < 1e-9


@pytest.mark.parametrize("z", [0.3, -2.0, 2 + 3j, -4 - 1j, 7.0, 12 * np.exp(1j * np.pi / 6),
                               30 * np.exp(-1j * np.pi / 3), -20 + 0.5j, 45j])
def test_airy_matches_mpmath(z):
    v = airy_ai(z)
    ref = mp_ai(complex(z))
    assert abs(v - ref) <= 1e-10 * abs(ref) + 1e-300


def test_airy_rotated_layer_arguments():
    """Arguments C (rho + s) used by the layer profile, C = exp(+-i pi/6)."""
    for sgn in (1, -1):
        C = np.exp(sgn * 1j * np.pi / 6)
        for rho in np.linspace(0, 40, 9):
            z = C * (rho - sgn * 0.3j)
            ref = mp_ai(z)
            assert abs(airy_ai(z) - ref) <= 1e-10 * abs(ref)


def test_airy_series_matches_maclaurin_oracle():
    for z in (0.5, 1 + 1j, -3 + 2j, 4j):
        assert abs(airy_ai_series(z) - maclaurin_ai(z, 60)) < 1e-12


def test_airy_branches_agree_on_overlap():
    R = AIRY_CONFIG.series_cutoff_radius
    for rad in (R - 0.25, R, R + 0.25):
        for ang in np.linspace(-0.9 * np.pi, 0.9 * np.pi, 13):
            z = rad * np.exp(1j * ang)
            a, b = airy_ai_series(z), airy_ai_asymptotic(z)
            assert abs(a - b) <= 1e-8 * abs(b)


def test_airy_range_error():
    with pytest.raises(RangeError):
        airy_ai(51.0)
    with pytest.raises(RangeError):
        airy_ai(np.array([1.0, 60j]))


def test_airy_array_shape():
    z = np.array([[0.0, 1.0], [2j, -1.0]])
    assert airy_ai(z).shape == (2, 2)


def test_bessel_examples():
    assert bessel_i1(0.0) == 0.0
    assert abs(bessel_i1(1.0) - 0.5651591040) < 1e-10
    v = bessel_i1(2.0)
    assert 1.0 <= v <= np.cosh(2.0)
    assert abs(v - 1.5906) < 1e-4
    assert bessel_i1_prime(0.0) == 0.5
    assert abs(bessel_i1_prime(1.0) - 0.7009067) < 1e-7
    for x in (0.1, 1.0, 5.0, 20.0):
        assert bessel_i1_prime(x) >= 0


@pytest.mark.parametrize("x", [1e-6, 0.3, 3.0, 14.9, 15.0, 15.1, 40.0, 200.0])
def test_bessel_matches_mpmath(x):
    assert abs(bessel_i1(x) - float(mpmath.besseli(1, x))) <= 1e-13 * float(mpmath.besseli(1, x))
    dref = float(mpmath.diff(lambda t: mpmath.besseli(1, t), x))
    assert abs(bessel_i1_prime(x) - dref) <= 1e-12 * abs(dref)


def test_bessel_domain_errors():
    with pytest.raises(DomainError):
        bessel_i1(-1.0)
    with pytest.raises(DomainError):
        bessel_i1_prime(np.array([1.0, -0.1]))


def test_bessel_ode_residual():
    """x^2 y'' + x y' - (x^2 + 1) y = 0 by central differences."""
    h = 1e-3
    for x in (0.5, 2.0, 8.0, 14.0, 16.0, 25.0):
        y = [bessel_i1(x + k * h) for k in (-2, -1, 0, 1, 2)]
        d1 = (y[0] - 8 * y[1] + 8 * y[3] - y[4]) / (12 * h)
        d2 = (-y[0] + 16 * y[1] - 30 * y[2] + 16 * y[3] - y[4]) / (12 * h * h)
        res = x * x * d2 + x * d1 - (x * x + 1) * y[2]
        assert abs(res) <= 1e-8 * max(1.0, x * x * y[2])


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-3, 30.0), st.floats(1e-3, 30.0))
def test_bessel_ratio_bounds(x, y):
    x, y = min(x, y), max(x, y)
    if y - x < 1e-6:
        return
    ratio = bessel_i1(x) / bessel_i1(y)
    assert np.exp(x - y) * x / y < ratio < np.exp(x - y) * np.sqrt(y / x)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-3, 30.0))
def test_bessel_growth_bounds(x):
    v = bessel_i1(x)
    assert x / 2 <= v <= 0.5 * x * np.cosh(x) * (1 + 1e-15)
    assert 0 <= bessel_i1_prime(x) <= v + v / x
