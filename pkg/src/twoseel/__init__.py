"""Two-sample empirical likelihood inference for differences of estimating-equation parameters."""

from .bartlett import bel_loglik, estimate_eta
from .eel import EEL1, MappingConfig, eel_loglik, forward_map, inverse_map, ray_monotonicity_diagnostic
from .errors import InputError, SolverError, TwoSEELError
from .estfun import TwoSampleData, gini_data, gini_ef, mean_ef, regression_ef
from .oel import DomainStatus, TwoSampleEL
from .regions import MethodId, confidence_interval, covers, region_contour_2d, statistic
from .simulate import ScenarioSpec, run_coverage, true_difference

__all__ = [
    "DomainStatus",
    "EEL1",
    "InputError",
    "MappingConfig",
    "MethodId",
    "ScenarioSpec",
    "SolverError",
    "TwoSEELError",
    "TwoSampleData",
    "TwoSampleEL",
    "bel_loglik",
    "confidence_interval",
    "covers",
    "eel_loglik",
    "estimate_eta",
    "forward_map",
    "gini_data",
    "gini_ef",
    "inverse_map",
    "mean_ef",
    "ray_monotonicity_diagnostic",
    "region_contour_2d",
    "regression_ef",
    "run_coverage",
    "statistic",
    "true_difference",
]
