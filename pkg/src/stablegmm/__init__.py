"""Method-of-moments estimation of stable distribution parameters."""

__version__ = "0.1.0"

from .core import (
    ParameterError,
    Regime,
    RegionConfig,
    StableParams,
    c_from_c_tilde,
    c_tilde_from_c,
    series_skew,
    standardize,
    unstandardize,
)
from .density import Adaptive, Fixed, char_fn, density, oracle_density
from .gmm import FitConfig, FitResult, Status, fit, select_regime
from .moments import MomentConfig, expected_moment, sample_moment
from .sampler import SamplerSpec, sample

__all__ = [
    "Adaptive",
    "FitConfig",
    "FitResult",
    "Fixed",
    "MomentConfig",
    "ParameterError",
    "Regime",
    "RegionConfig",
    "SamplerSpec",
    "StableParams",
    "Status",
    "__version__",
    "c_from_c_tilde",
    "c_tilde_from_c",
    "char_fn",
    "density",
    "expected_moment",
    "fit",
    "oracle_density",
    "sample",
    "sample_moment",
    "select_regime",
    "series_skew",
    "standardize",
    "unstandardize",
]
