"""Modified Bessel functions against an arbitrary-precision oracle."""

import math

import mpmath as mp
import numpy as np
import pytest

from hopf_flow import special_functions as sf

mp.mp.dps = 40

# Values frozen from mpmath at 40 digits.
FROZEN = {
    ("i0", 1.0): 1.2660658777520083356,
    ("i1", 1.0): 0.5651591039924850272,
    ("k0", 0.5): 0.9244190712276659404,
    ("k1", 0.5): 1.6564411200033008937,
    ("i0", 10.0): 2815.7166284662544715,
    ("k0", 10.0): 1.7780062316167651811e-5,
}


def test_frozen_point_values():
    fns = {"i0": sf.bessel_i0, "i1": sf.bessel_i1,
           "k0": sf.bessel_k0, "k1": sf.bessel_k1}
    for (name, z), ref in FROZEN.items():
        np.testing.assert_allclose(fns[name](z), ref, rtol=5e-15)


def test_accuracy_against_mpmath_grid():
    zs = np.logspace(-3, math.log10(60.0), 120)
    for z in zs:
        z = float(z)
        q = sf.bessel_quad(z)
        np.testing.assert_allclose(q.i0, float(mp.besseli(0, z)), rtol=5e-15)
        np.testing.assert_allclose(q.i1, float(mp.besseli(1, z)), rtol=5e-15)
        np.testing.assert_allclose(q.k0, float(mp.besselk(0, z)), rtol=5e-12)
        np.testing.assert_allclose(q.k1, float(mp.besselk(1, z)), rtol=5e-12)


def test_wronskian_identity_on_1000_points():
    # I0(z) K1(z) + I1(z) K0(z) = 1/z, scaled by the largest product.
    zs = np.logspace(-3, math.log10(60.0), 1000)
    worst = 0.0
    for z in zs:
        z = float(z)
        q = sf.bessel_quad(z)
        terms = (q.i0 * q.k1, q.i1 * q.k0, -1.0 / z)
        worst = max(worst, abs(sum(terms)) / max(abs(t) for t in terms))
    print(f"wronskian max scaled defect {worst:.3e}")
    assert worst <= 1e-12


def test_quad_bundles_match_individual_functions():
    for z in (0.01, 0.7, 3.0, 42.0):
        q = sf.bessel_quad(z)
        assert q.z == z
        assert q.i0 == sf.bessel_i0(z)
        assert q.i1 == sf.bessel_i1(z)
        assert q.k0 == sf.bessel_k0(z)
        assert q.k1 == sf.bessel_k1(z)


def test_domain_guards():
    for bad in (0.0, -1.0):
        with pytest.raises(ValueError):
            sf.bessel_k0(bad)
        with pytest.raises(ValueError):
            sf.bessel_k1(bad)
        with pytest.raises(ValueError):
            sf.bessel_quad(bad)
    with pytest.raises(ValueError):
        sf.bessel_quad(60.0 + 1e-9)


def test_negative_axis_continuation_matches_oracle():
    # K_nu continued through the upper half plane onto the negative axis:
    # K0(-z) = K0(z) - i*pi*I0(z) and K1(-z) = -K1(z) - i*pi*I1(z).
    for z in (0.3, 1.0, 7.5, 30.0):
        for nu in (0, 1):
            got = sf.bessel_k_continued(z, nu)
            ref = complex(mp.besselk(nu, mp.mpc(-z, 0)))
            np.testing.assert_allclose(got.real, ref.real,
                                       rtol=1e-12, atol=1e-300)
            np.testing.assert_allclose(got.imag, ref.imag, rtol=1e-12)


def test_continuation_identity_decomposition():
    for z in (0.4, 2.0, 11.0):
        k0c = sf.bessel_k_continued(z, 0)
        np.testing.assert_allclose(k0c.real, sf.bessel_k0(z), rtol=1e-14)
        np.testing.assert_allclose(k0c.imag, -math.pi * sf.bessel_i0(z),
                                   rtol=1e-14)
        k1c = sf.bessel_k_continued(z, 1)
        np.testing.assert_allclose(k1c.real, -sf.bessel_k1(z), rtol=1e-14)
        np.testing.assert_allclose(k1c.imag, -math.pi * sf.bessel_i1(z),
                                   rtol=1e-14)
