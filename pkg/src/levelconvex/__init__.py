"""Numerical checks of log-convexity for level-set norms of harmonic functions."""

from .comparison import CurvatureDomainError, cos_k, cot_k, sin_k, tan_k
from .convexity import (CheckRow, NormCurve, VerificationReport, build_curve,
                        differential_inequality_check, dnorm_analytic,
                        eigen_convexity_check, frequency_monotonicity_check,
                        growth_check, hormander_bound_check, hormander_identity_check,
                        mean_value_check, monotonicity_check, norm_H, solve_alpha,
                        sphere_theorem_check, square_counterexample, three_point_check)
from .families import (DomainError, Ellipsoid, ModelSpace2D, SquareBoundary, TorusDistance,
                       ellipsoid_AB, homogeneous_constants_sampled, radial, torus_CB)
from .harmonics import (eigen_extension_integrand, exp_cos, harmonic_from_label,
                        model_space_harmonic, planar_homogeneous, poly_catalog)
from .quadrature import QuadratureSpec, surface_integral

__all__ = [name for name in dir() if not name.startswith("_")]
