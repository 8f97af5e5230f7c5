"""Asymmetric space-time covariance models built as hierarchical mixtures.

Modules by task: ``special`` (Bessel and Tricomi functions), ``kernels``
(covariance families), ``oracles`` (independent quadrature checks), ``gp``
(exact Gaussian process likelihood and simulation), ``vecchia`` (nearest
neighbor likelihood), ``inference`` (fitting and model comparison),
``diagnostics`` (empirical asymmetry statistics) and ``cli``.
"""

from .diagnostics import StationGrid, delta, delta_bar, delta_bar_table, delta_table, emp_semivariogram
from .estimator import SpaceTimeCovarianceEstimator
from .exceptions import (
    ComparisonError,
    ConditioningError,
    DomainError,
    InitializationError,
    InputError,
    InsufficientDataError,
    InvalidParameterError,
    QuadratureError,
    StmixError,
)
from .gp import MeanMode, SpaceTimeDataset, cov_matrix, exact_loglik, simulate
from .inference import Exact, FitResult, OptConfig, Vecchia, compare, fit
from .kernels import (
    Anisotropy,
    CHBase,
    CovarianceModel,
    GLParams,
    LCHParams,
    LGaussParams,
    LGHParams,
    LMaternParams,
    MaternBase,
    evaluate,
)
from .parameterization import model_from_params, param_names, params_from_model
from .vecchia import VecchiaPlan, vecchia_loglik

__version__ = "0.1.0"

__all__ = [
    "Anisotropy",
    "CHBase",
    "ComparisonError",
    "ConditioningError",
    "CovarianceModel",
    "DomainError",
    "Exact",
    "FitResult",
    "GLParams",
    "InitializationError",
    "InputError",
    "InsufficientDataError",
    "InvalidParameterError",
    "LCHParams",
    "LGHParams",
    "LGaussParams",
    "LMaternParams",
    "MaternBase",
    "MeanMode",
    "OptConfig",
    "QuadratureError",
    "SpaceTimeCovarianceEstimator",
    "SpaceTimeDataset",
    "StationGrid",
    "StmixError",
    "Vecchia",
    "VecchiaPlan",
    "compare",
    "cov_matrix",
    "delta",
    "delta_bar",
    "delta_bar_table",
    "delta_table",
    "emp_semivariogram",
    "evaluate",
    "exact_loglik",
    "fit",
    "model_from_params",
    "param_names",
    "params_from_model",
    "simulate",
    "vecchia_loglik",
]
