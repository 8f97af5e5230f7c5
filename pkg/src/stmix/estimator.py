"""scikit-learn style wrapper around :func:`stmix.inference.fit`.

``X`` holds one row per observation: the spatial coordinates followed by the
time in the last column.  ``y`` holds the observed values.  There is no
``predict``; ``score`` returns the log-likelihood of new data under the
fitted covariance.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .exceptions import InputError
from .gp import MeanMode, SpaceTimeDataset, exact_loglik
from .gp import simulate as _simulate
from .inference import Exact, OptConfig, Vecchia, fit
from .vecchia import VecchiaPlan, vecchia_loglik

__all__ = ["SpaceTimeCovarianceEstimator"]


def _split(X, y=None):
    if y is None:
        X = check_array(X, dtype=np.float64, ensure_min_features=2)
        return X[:, :-1], X[:, -1], None
    X, y = check_X_y(X, y, dtype=np.float64, ensure_min_features=2, y_numeric=True)
    return X[:, :-1], X[:, -1], y


class SpaceTimeCovarianceEstimator(BaseEstimator):
    """Maximum-likelihood space-time covariance model.

    Parameters
    ----------
    family : str, default="lmatern"
        One of ``lgauss, lmatern, lch, lgh, glmatern, glch``.
    likelihood : {"vecchia", "exact"}, default="vecchia"
    m : int, default=30
        Vecchia conditioning-set size.
    time_scale : float, optional
        Space units per time unit in the neighbor metric.
    mean : {"profiled", "zero"}, default="profiled"
    init : dict, optional
        Starting values by parameter name.
    fixed : tuple of str, default=()
        Parameters held at their starting values.
    bounds : dict, optional
        ``name -> (lo, hi)`` box constraints.
    n_starts : int, default=3
    max_evals : int, default=5000
    seed : int, default=0

    Attributes
    ----------
    result_ : FitResult
    params_ : dict
    model_ : CovarianceModel
    loglik_, aic_, bic_ : float
    mean_ : float
        Profiled constant mean (0 for ``mean="zero"``).
    n_features_in_ : int
    """

    def __init__(
        self,
        family="lmatern",
        likelihood="vecchia",
        m=30,
        time_scale=None,
        mean="profiled",
        init=None,
        fixed=(),
        bounds=None,
        n_starts=3,
        max_evals=5000,
        seed=0,
    ):
        self.family = family
        self.likelihood = likelihood
        self.m = m
        self.time_scale = time_scale
        self.mean = mean
        self.init = init
        self.fixed = fixed
        self.bounds = bounds
        self.n_starts = n_starts
        self.max_evals = max_evals
        self.seed = seed

    def _plan_config(self):
        if self.likelihood == "exact":
            return Exact()
        if self.likelihood == "vecchia":
            return Vecchia(int(self.m), self.time_scale)
        raise InputError(f"likelihood must be 'vecchia' or 'exact' (got {self.likelihood!r})")

    def fit(self, X, y):
        coords, times, y = _split(X, y)
        data = SpaceTimeDataset(coords, times, y)
        opt = OptConfig(n_starts=int(self.n_starts), max_evals=int(self.max_evals), seed=int(self.seed))
        res = fit(
            data,
            self.family,
            init=self.init,
            plan_config=self._plan_config(),
            opt_config=opt,
            fixed=tuple(self.fixed),
            bounds=self.bounds,
            mean_mode=MeanMode.coerce(self.mean),
        )
        self.result_ = res
        self.params_ = dict(res.params)
        self.model_ = res.model
        self.loglik_, self.aic_, self.bic_ = res.loglik, res.aic, res.bic
        self.mean_ = res.mean_hat
        self.n_features_in_ = coords.shape[1] + 1
        return self

    def score(self, X, y):
        """Log-likelihood of ``(X, y)`` under the fitted covariance and plan."""
        check_is_fitted(self, "result_")
        coords, times, y = _split(X, y)
        if coords.shape[1] + 1 != self.n_features_in_:
            raise InputError(f"X has {coords.shape[1] + 1} columns; the model was fitted with {self.n_features_in_}")
        data = SpaceTimeDataset(coords, times, y)
        plan = self.result_.plan_config
        mode = MeanMode.coerce(self.mean)
        if isinstance(plan, Vecchia):
            return vecchia_loglik(self.model_, data, VecchiaPlan.build(data, plan.m, plan.time_scale), mode)[0]
        return exact_loglik(self.model_, data, mode)[0]

    def simulate(self, X, seed=0):
        """One realization of the fitted zero-mean field at the rows of ``X``."""
        check_is_fitted(self, "result_")
        coords, times, _ = _split(X)
        return _simulate(self.model_, coords, times, seed)
