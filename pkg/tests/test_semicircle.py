import numpy as np
import pytest

from wignerlab.semicircle import KPoint, g_sc, g_sc_prime, k_point

Z_GRID = [2j, -2j, 1 + 1j, 1 - 1j, 0.5 + 0.8j, 3j, -1.7 + 0.3j, 2.5 - 0.05j, 0.01 + 5j]


def test_value_at_2i():
    assert g_sc(2j) == pytest.approx(1j * (1 - np.sqrt(2)), abs=1e-14)


def test_large_z_asymptote():
    g = g_sc(10j)
    assert g == pytest.approx(-0.0990j, abs=5e-5)
    assert abs(g - 1 / 10j) < 0.02 * abs(1 / 10j)


def test_reflection_symmetry():
    for z in Z_GRID:
        assert g_sc(np.conj(z)) == pytest.approx(np.conj(g_sc(z)), abs=1e-14)
        assert g_sc_prime(np.conj(z)) == pytest.approx(np.conj(g_sc_prime(z)), abs=1e-14)


def test_quadratic_residual_and_fixed_point():
    for z in Z_GRID:
        G = g_sc(z)
        assert abs(G * G - z * G + 1.0) < 1e-12
        assert abs(1.0 / (z - G) - G) < 1e-12
        assert abs(G) < 1.0
        assert np.sign(G.imag) == -np.sign(complex(z).imag)


def test_derivative_against_finite_difference():
    z = 1 + 1j
    h = 1e-5
    fd = (g_sc(z + h) - g_sc(z - h)) / (2 * h)
    assert abs(fd - g_sc_prime(z)) < 1e-8
    # value from the implicit form at 2i
    G = g_sc(2j)
    assert g_sc_prime(2j) == pytest.approx(G / (2 * G - 2j), abs=1e-14)


def test_near_real_axis_rejected():
    for z in (2.0, 2.0 + 1e-9j, -1.0 - 1e-12j):
        with pytest.raises(ValueError):
            g_sc(z)
        with pytest.raises(ValueError):
            g_sc_prime(z)


def test_k_point_value():
    kp = k_point(2j, 1.0)
    assert kp.K == pytest.approx(np.sqrt(2) - 1, abs=1e-12)
    assert kp.K.imag == pytest.approx(0.0, abs=1e-15)


def test_k_positive_real_part_grid():
    ts = np.logspace(-2, 2, 20)
    zs = [complex(re, im) for re in np.linspace(-3, 3, 5)
          for im in (0.2, 1.0, 2.5, -0.7)]
    assert len(zs) == 20
    for z in zs:
        for t in ts:
            assert k_point(z, float(t)).K.real > 0.0


def test_k_linear_in_t():
    z = 0.5 + 0.8j
    base = k_point(z, 1.0).K
    for t in (0.1, 1.0, 10.0):
        assert k_point(z, t).K == pytest.approx(t * base, rel=1e-14)


def test_k_point_domain():
    with pytest.raises(ValueError):
        k_point(2j, 0.0)
    with pytest.raises(ValueError):
        k_point(2j, -1.0)
    with pytest.raises(ValueError):
        KPoint(z=2j, t=1.0, K=-1.0 + 0j, K_dz=0j)
