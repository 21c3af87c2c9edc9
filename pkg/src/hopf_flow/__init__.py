"""hopf-flow: a numerical laboratory for the Hopf-fibration flow on E3.

The package implements the unit-speed vector field induced by the Hopf
map, its spherical-chart pushforward, a reduced (r, H) system with an
implicit modified-Bessel first integral, a closed-form parametric
generating function for first integrals of the full flow, and the
numerical machinery (adaptive Runge-Kutta integration, dual-number
differentiation, residual diagnostics) needed to measure every claimed
identity rather than assume it.
"""

from .diagnostics import ResidualReport, conservation_check, fd_check, relative_to_terms
from .dual import Dual, derivative, second_derivative, value
from .fields import (
    CartesianState,
    DerivedRates,
    SignReport,
    SphericalState,
    SphericalVelocity,
    Velocity3,
    cartesian_ode,
    derived_rates,
    eval_cartesian,
    eval_spherical,
    from_spherical,
    pushforward_sign,
    spherical_ode,
    to_spherical,
)
from .first_integral import (
    ParamPoint,
    RhoValue,
    UVPair,
    h_pde_residual,
    linear_pde_residual,
    parametric_relation_residual,
    phi_flow_derivative,
    reconstruct_H,
    rho_eval,
    uv_from_rho,
    xi_substitution_residual,
)
from .integrator import (
    Event,
    EventHit,
    IntegratorConfig,
    Trajectory,
    integrate,
    integrate_scalar,
)
from .reduced_system import (
    FormSelection,
    ImplicitConstant,
    ReducedCurve,
    ReducedState,
    TurningPointError,
    h_rhs,
    implicit_constant,
    implicit_residual,
    psi_rhs,
    select_effective_form,
    solve_implicit,
    substitution_check,
    trace_h,
    trace_reduced,
    turning_locus,
)
from .special_functions import (
    BesselQuad,
    bessel_i0,
    bessel_i1,
    bessel_k0,
    bessel_k1,
    bessel_k_continued,
    bessel_quad,
)
from .checks import ALLOWED_DISCREPANCIES, CHECK_NAMES, run_battery

__version__ = "0.1.0"

__all__ = [
    "ALLOWED_DISCREPANCIES",
    "BesselQuad",
    "CHECK_NAMES",
    "CartesianState",
    "DerivedRates",
    "Dual",
    "Event",
    "EventHit",
    "FormSelection",
    "ImplicitConstant",
    "IntegratorConfig",
    "ParamPoint",
    "ReducedCurve",
    "ReducedState",
    "ResidualReport",
    "RhoValue",
    "SignReport",
    "SphericalState",
    "SphericalVelocity",
    "Trajectory",
    "TurningPointError",
    "UVPair",
    "Velocity3",
    "bessel_i0",
    "bessel_i1",
    "bessel_k0",
    "bessel_k1",
    "bessel_k_continued",
    "bessel_quad",
    "cartesian_ode",
    "conservation_check",
    "derivative",
    "derived_rates",
    "eval_cartesian",
    "eval_spherical",
    "fd_check",
    "from_spherical",
    "h_pde_residual",
    "h_rhs",
    "implicit_constant",
    "implicit_residual",
    "integrate",
    "integrate_scalar",
    "linear_pde_residual",
    "parametric_relation_residual",
    "phi_flow_derivative",
    "pushforward_sign",
    "psi_rhs",
    "reconstruct_H",
    "relative_to_terms",
    "rho_eval",
    "run_battery",
    "second_derivative",
    "select_effective_form",
    "solve_implicit",
    "spherical_ode",
    "substitution_check",
    "to_spherical",
    "trace_h",
    "trace_reduced",
    "turning_locus",
    "uv_from_rho",
    "value",
    "xi_substitution_residual",
]
