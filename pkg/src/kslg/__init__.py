"""kslg: finite-volume simulation and certification toolkit for chemotaxis
with heterogeneous logistic damping."""

from .exponents import (
    ExponentSet,
    ParamConfig,
    derived_exponents,
    feasible_by_search,
    kappa_threshold,
    mu_integrability_exponent_bound,
    prototype_alpha_threshold,
    prototype_kappa_threshold,
    r_admissible_range,
    select_exponents,
    theta,
)
from .grid import (
    CoefficientField,
    Field,
    GridSpec,
    grad_sq_faces,
    integrate,
    sample_prototype_mu,
)
from .solver import RunConfig, State, TruncationSpec, f_eps, run, step
from .config import ConfigError, parse_config

__version__ = "0.1.0"

__all__ = [
    "CoefficientField", "ConfigError", "ExponentSet", "Field", "GridSpec",
    "ParamConfig", "RunConfig", "State", "TruncationSpec",
    "derived_exponents", "f_eps", "feasible_by_search", "grad_sq_faces",
    "integrate", "kappa_threshold", "mu_integrability_exponent_bound",
    "parse_config", "prototype_alpha_threshold", "prototype_kappa_threshold",
    "r_admissible_range", "run", "sample_prototype_mu", "select_exponents",
    "step", "theta",
]
