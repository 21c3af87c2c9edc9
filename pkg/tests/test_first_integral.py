"""Parametric first-integral chain: rho, (u, v), transport residuals."""

import cmath
import math

import numpy as np
import pytest

from hopf_flow import first_integral as fi
from hopf_flow.first_integral import (DISC_XI_HIGH, DISC_XI_LOW, ParamPoint,
                                      h_pde_residual, linear_pde_residual,
                                      parametric_relation_residual,
                                      reconstruct_H, rho_eval, uv_from_rho,
                                      xi_substitution_residual)

# The discriminant is positive below DISC_XI_LOW and above DISC_XI_HIGH;
# the band in between is the complexified region.
REAL_POINTS = [(0.2, 1.1), (0.35, 0.8), (0.5, 1.4), (0.65, 2.1), (0.3, 2.6)]
OUTER_REAL_POINTS = [(6.0, 0.6), (7.5, 1.9)]
COMPLEX_POINTS = [(1.5, 0.9), (3.0, 1.7), (4.0, 0.6)]


def test_param_point_validation_and_half_angle():
    with pytest.raises(ValueError):
        ParamPoint(-0.5, 1.0)
    with pytest.raises(ValueError):
        ParamPoint(0.0, 1.0)
    with pytest.raises(ValueError):
        ParamPoint(0.5, 0.0)
    with pytest.raises(ValueError):
        ParamPoint(0.5, math.pi)
    # Stable half-angle tangent: exactly 1 at the equator.
    assert ParamPoint(0.5, math.pi / 2.0).chi == 1.0
    p = ParamPoint(0.5, 0.8)
    np.testing.assert_allclose(p.chi, math.tan(0.4), rtol=1e-15)


def test_region_flags_follow_discriminant_sign():
    for xi, psi in REAL_POINTS + OUTER_REAL_POINTS:
        assert rho_eval(ParamPoint(xi, psi)).region == "real"
    for xi, psi in COMPLEX_POINTS:
        assert rho_eval(ParamPoint(xi, psi)).region == "complex"
    near = rho_eval(ParamPoint(DISC_XI_LOW + 1e-12, 1.0))
    assert near.near_branch_cut


def test_rho_is_real_when_transport_only():
    # With the source coefficient switched off the solution stays real
    # in both real regions (inner and outer).
    for xi, psi in REAL_POINTS + OUTER_REAL_POINTS:
        out = rho_eval(ParamPoint(xi, psi, c2=0.0))
        assert abs(out.rho.imag) <= 1e-13 * max(1.0, abs(out.rho.real))


def test_linear_pde_parametric_variant_is_roundoff():
    worst = max(linear_pde_residual(ParamPoint(xi, psi), variant="parametric")
                for xi, psi in REAL_POINTS)
    print(f"parametric variant max residual {worst:.3e}")
    assert worst <= 1e-12


def test_linear_pde_direct_variant_fails_order_one():
    # The direct reading is the recorded discrepancy: it misses by O(1).
    worst = max(linear_pde_residual(ParamPoint(xi, psi), variant="direct")
                for xi, psi in REAL_POINTS)
    assert worst > 1e-2


def test_linear_pde_unknown_variant_rejected():
    with pytest.raises(ValueError):
        linear_pde_residual(ParamPoint(0.5, 1.0), variant="sideways")


def test_linear_pde_indeterminate_where_transport_vanishes():
    # On the equator the transport coefficient has a zero exactly at the
    # lower discriminant boundary; the residual is 0/0 there.
    with pytest.raises(ValueError, match="indeterminate"):
        linear_pde_residual(ParamPoint(DISC_XI_LOW, math.pi / 2.0),
                            variant="parametric")


def test_gauge_polynomial_does_not_move_residuals():
    f1 = (0.7, -0.3, 0.11, 2.0)
    for xi, psi in REAL_POINTS:
        p = ParamPoint(xi, psi)
        bare = linear_pde_residual(p, variant="parametric")
        gauged = linear_pde_residual(p, f1=f1, variant="parametric")
        assert abs(bare - gauged) <= 1e-11
        rel_bare = parametric_relation_residual(p, reading="xi")
        rel_gauged = parametric_relation_residual(p, f1=f1, reading="xi")
        assert abs(rel_bare - rel_gauged) <= 1e-11


def test_parametric_relation_readings_split():
    for xi, psi in REAL_POINTS:
        p = ParamPoint(xi, psi)
        assert parametric_relation_residual(p, reading="xi") <= 1e-12
        # The alternative coefficient reading misses by many orders.
        assert (parametric_relation_residual(p, reading="v")
                > 1e8 * parametric_relation_residual(p, reading="xi"))
    with pytest.raises(ValueError):
        parametric_relation_residual(ParamPoint(0.5, 1.0), reading="w")


def test_parametric_relation_accepts_precomputed_pair():
    p = ParamPoint(0.35, 1.4)
    uv = uv_from_rho(p)
    assert (parametric_relation_residual(p, reading="xi", uv=uv)
            == parametric_relation_residual(p, reading="xi"))


def test_legendre_pairing_of_uv():
    # v_xi = xi * u_xi everywhere the pair is defined.
    for xi, psi in REAL_POINTS + COMPLEX_POINTS:
        uv = uv_from_rho(ParamPoint(xi, psi))
        defect = abs(uv.v_xi - xi * uv.u_xi)
        assert defect <= 1e-12 * max(1.0, abs(uv.v_xi))


def test_uv_partials_match_finite_differences():
    h = 1e-6
    for xi, psi in REAL_POINTS:
        uv = uv_from_rho(ParamPoint(xi, psi))
        up = uv_from_rho(ParamPoint(xi + h, psi))
        um = uv_from_rho(ParamPoint(xi - h, psi))
        np.testing.assert_allclose(uv.u_xi.real, (up.u - um.u).real / (2 * h),
                                   rtol=2e-5, atol=2e-6)
        vp = uv_from_rho(ParamPoint(xi, psi + h))
        vm = uv_from_rho(ParamPoint(xi, psi - h))
        np.testing.assert_allclose(uv.u_psi.real, (vp.u - vm.u).real / (2 * h),
                                   rtol=2e-5, atol=2e-6)
        np.testing.assert_allclose(uv.v_psi.real, (vp.v - vm.v).real / (2 * h),
                                   rtol=2e-5, atol=2e-6)


def test_rho_xi_dual_matches_finite_differences():
    h = 1e-6
    for xi, psi in REAL_POINTS + COMPLEX_POINTS:
        out = rho_eval(ParamPoint(xi, psi))
        fd = (rho_eval(ParamPoint(xi + h, psi)).rho
              - rho_eval(ParamPoint(xi - h, psi)).rho) / (2 * h)
        assert abs(out.rho_xi - fd) <= 1e-6 * max(1.0, abs(out.rho_xi))


def test_psi_partial_continuous_across_discriminant_boundaries():
    # rho itself has an integrable square-root divergence at the
    # boundary; the transported quantity is its psi-partial, which must
    # come out continuous under complexification.
    delta = 1e-9
    for xi_b in (DISC_XI_LOW, DISC_XI_HIGH):
        for psi in (0.7, 1.2, 1.9):
            lo = fi.rho_psi_partial(ParamPoint(xi_b * (1.0 - delta), psi))
            hi = fi.rho_psi_partial(ParamPoint(xi_b * (1.0 + delta), psi))
            assert abs(hi - lo) <= 1e-6 * max(1.0, abs(lo))


def test_h_pde_readings_split_at_physical_states():
    # Points picked so the reconstructed radius is positive and the
    # parameter root is unique inside the bracket.
    for xi0, psi in ((0.2, 1.1), (0.65, 1.8), (0.65, 2.1)):
        v = uv_from_rho(ParamPoint(xi0, psi)).v
        assert v.real > 0.0
        bracket = (0.7 * xi0, min(1.3 * xi0, 0.8))
        assert h_pde_residual(v.real, psi, bracket=bracket) <= 1e-10
        assert h_pde_residual(v.real, psi, reading="v",
                              bracket=bracket) > 1e-2


def test_reconstruction_roundtrip():
    for xi0, psi in ((0.2, 1.1), (0.65, 1.8)):
        uv = uv_from_rho(ParamPoint(xi0, psi))
        bracket = (0.7 * xi0, min(1.3 * xi0, 0.8))
        got = reconstruct_H(uv.v.real, psi, bracket=bracket)
        np.testing.assert_allclose(got, uv.u.real, rtol=1e-9, atol=1e-12)


def test_reconstruction_refuses_complex_bracket():
    # A bracket inside the complexified band has no real radius map.
    with pytest.raises(ValueError, match="real region"):
        reconstruct_H(1.0, 0.9, bracket=(2.0, 3.0))
    # A real bracket that never attains the requested radius.
    with pytest.raises(ValueError, match="no root"):
        reconstruct_H(1.0, 0.9, bracket=(5.0, 6.0))


def test_xi_substitution_is_exact_below_equator():
    def probe(r, phi, x):
        return r * r * x + 0.3 * phi

    for psi in (0.4, 0.9, 1.3):
        res = xi_substitution_residual(1.5, 0.7, psi, probe)
        assert res <= 1e-12


def test_xi_substitution_warns_above_equator():
    def probe(r, phi, x):
        return r * r * x + 0.3 * phi

    with pytest.warns(UserWarning):
        res = xi_substitution_residual(1.5, 0.7, 2.0, probe)
    assert res > 1e-2


def test_polynomial_helpers_match_numpy():
    coeffs = (2.0, -1.5, 0.25, 3.0)  # ascending order
    xs = np.linspace(-2.0, 2.0, 9)
    for x in xs:
        np.testing.assert_allclose(fi.poly_eval(coeffs, float(x)),
                                   np.polyval(coeffs[::-1], x), rtol=1e-14)
        dcoeffs = fi.poly_derivative(coeffs)
        np.testing.assert_allclose(fi.poly_eval(dcoeffs, float(x)),
                                   np.polyval(np.polyder(coeffs[::-1]), x),
                                   rtol=1e-13, atol=1e-14)
