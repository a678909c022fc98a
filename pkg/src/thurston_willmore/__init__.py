"""CMC spheres and Willmore-type energies in the E(k, tau) geometries."""

from .geometry import (
    CylindricalPoint,
    DomainError,
    GeometryParams,
    ambient_metric_cylindrical,
    orbit_volume_factor,
    quotient_metric,
    ricci_normal,
    sectional_curvature,
)
from .profile import (
    Closure,
    ExistenceViolation,
    InadmissiblePerturbation,
    IntegrationError,
    PerturbationSpec,
    Profile,
    ProfileState,
    StopCondition,
    cmc_sigma_rate,
    first_integral,
    generate_cmc_sphere,
    integrate,
    ode_rhs,
    perturbed_sphere,
    profile_first_integral,
    sphere_from_modes,
)
from .functional import (
    EnergyReport,
    FunctionalCoefficients,
    SurfacePointData,
    canonical_coefficients,
    div_nuT_profile,
    el_residual,
    energy,
    gauss_bonnet_total,
    gauss_curvature_profile,
    h_squared_identity_check,
    max_interior_residual,
    mean_curvature,
    nu_on_profile,
    second_summand_derivative_check,
    surface_point_data,
    willmore_relation_check,
)

__version__ = "0.1.0"

__all__ = [
    "CylindricalPoint",
    "DomainError",
    "GeometryParams",
    "ambient_metric_cylindrical",
    "orbit_volume_factor",
    "quotient_metric",
    "ricci_normal",
    "sectional_curvature",
    "Closure",
    "ExistenceViolation",
    "InadmissiblePerturbation",
    "IntegrationError",
    "PerturbationSpec",
    "Profile",
    "ProfileState",
    "StopCondition",
    "cmc_sigma_rate",
    "first_integral",
    "generate_cmc_sphere",
    "integrate",
    "ode_rhs",
    "perturbed_sphere",
    "profile_first_integral",
    "sphere_from_modes",
    "EnergyReport",
    "FunctionalCoefficients",
    "SurfacePointData",
    "canonical_coefficients",
    "div_nuT_profile",
    "el_residual",
    "energy",
    "gauss_bonnet_total",
    "gauss_curvature_profile",
    "h_squared_identity_check",
    "max_interior_residual",
    "mean_curvature",
    "nu_on_profile",
    "second_summand_derivative_check",
    "surface_point_data",
    "willmore_relation_check",
    "__version__",
]
