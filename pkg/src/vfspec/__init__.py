"""Point spectra of vector fields on chart domains.

Compute, verify and estimate real eigenvalues of first-order operators
X f = lambda f, with the Riemannian machinery (metrics, norms, Lie
derivatives, flows) needed to test the classical structure results.
"""

__version__ = "0.1.0"

from .analysis import bound_check, h1_norm, l2_norm, norm_report, rayleigh_quotient, sup_norm_field
from .calculus import (DiffeoMap, ScalarField, VectorField, apply_field, classify,
                       covariant_derivative, gradient, lie_bracket, lie_derivative_metric,
                       parse_field, pushforward)
from .errors import (EvalDomainError, FlowError, FlowExitError, GeometryError, ParseError,
                     PreconditionError, SpecError, VfspecError)
from .expr import diff, eval_dual, evaluate, parse_scalar, to_string
from .flow import Trajectory, detect_period, flow_map, integrate
from .geometry import Domain, Grid, Metric, build_grid, christoffels_at, parse_domain, parse_metric
from .kernels import BACKEND
from .spectral import (closed_orbit_check, commuting_transport, critical_point_check,
                       eigenspace_dim_probe, estimate_eigenvalue, flow_law_check,
                       isometry_transport, power_chain_verify, scan_eigenvalues,
                       triviality_battery, verify_eigenpair)

__all__ = [
    "__version__", "BACKEND",
    "parse_scalar", "to_string", "evaluate", "eval_dual", "diff",
    "Domain", "Metric", "Grid", "parse_domain", "parse_metric", "build_grid", "christoffels_at",
    "ScalarField", "VectorField", "DiffeoMap", "parse_field", "apply_field", "gradient",
    "lie_bracket", "lie_derivative_metric", "covariant_derivative", "pushforward", "classify",
    "l2_norm", "h1_norm", "sup_norm_field", "rayleigh_quotient", "norm_report", "bound_check",
    "Trajectory", "integrate", "flow_map", "detect_period",
    "verify_eigenpair", "power_chain_verify", "eigenspace_dim_probe", "estimate_eigenvalue",
    "flow_law_check", "closed_orbit_check", "scan_eigenvalues", "triviality_battery",
    "critical_point_check", "isometry_transport", "commuting_transport",
    "VfspecError", "ParseError", "SpecError", "EvalDomainError", "GeometryError",
    "FlowExitError", "FlowError", "PreconditionError",
]
