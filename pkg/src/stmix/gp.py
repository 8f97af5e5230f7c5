"""Dense Gaussian-process machinery: data container, covariance assembly,
exact log-likelihood with a profiled constant mean, and simulation."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .exceptions import ConditioningError, InputError
from .kernels import CovarianceModel

__all__ = [
    "MeanMode",
    "SpaceTimeDataset",
    "cov_matrix",
    "cross_cov",
    "cov_matrix_points",
    "cholesky_jitter",
    "exact_loglik",
    "simulate",
    "JITTER_LEVELS",
]

_LOG_2PI = math.log(2.0 * math.pi)
# multiples of the mean diagonal tried after a plain factorization fails
JITTER_LEVELS = (1e-8, 1e-7, 1e-6, 1e-5, 1e-4)


class MeanMode(str, enum.Enum):
    ZERO = "zero"
    PROFILED = "profiled"

    @classmethod
    def coerce(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InputError(f"mean_mode must be 'zero' or 'profiled' (got {value!r})") from None


@dataclass(frozen=True, eq=False)
class SpaceTimeDataset:
    """``n`` observations ``z(s_i, t_i)``.

    Parameters
    ----------
    coords : array_like, shape (n, d)
    times : array_like, shape (n,)
    values : array_like, shape (n,)
    station_ids : sequence of str, optional
    constant_mean : bool
        Whether likelihoods profile out an unknown constant mean by default.
    """

    coords: np.ndarray
    times: np.ndarray
    values: np.ndarray
    station_ids: tuple | None = None
    constant_mean: bool = True
    _key: bytes = field(init=False, repr=False)

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        times = np.asarray(self.times, dtype=float).ravel()
        values = np.asarray(self.values, dtype=float).ravel()
        n = coords.shape[0]
        if coords.ndim != 2 or n < 1 or coords.shape[1] < 1:
            raise InputError(f"coords must have shape (n, d) with n >= 1; got {coords.shape}")
        if times.shape != (n,) or values.shape != (n,):
            raise InputError(f"coords, times and values disagree in length ({n}, {times.size}, {values.size})")
        for name, arr in (("coords", coords), ("times", times), ("values", values)):
            if not np.all(np.isfinite(arr)):
                raise InputError(f"{name} contains non-finite entries")
        pts = np.column_stack([coords, times])
        if np.unique(pts, axis=0).shape[0] != n:
            raise InputError("duplicate (coordinate, time) pairs are not allowed")
        ids = self.station_ids
        if ids is not None:
            ids = tuple(str(s) for s in ids)
            if len(ids) != n:
                raise InputError("station_ids must have one label per observation")
        for arr in (coords, times, values):
            arr.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "station_ids", ids)
        object.__setattr__(self, "constant_mean", bool(self.constant_mean))
        object.__setattr__(self, "_key", pts.tobytes() + values.tobytes())

    @property
    def n(self):
        return self.coords.shape[0]

    @property
    def d(self):
        return self.coords.shape[1]

    def permuted(self, perm):
        perm = np.asarray(perm)
        ids = None if self.station_ids is None else tuple(self.station_ids[i] for i in perm)
        return SpaceTimeDataset(self.coords[perm], self.times[perm], self.values[perm], ids, self.constant_mean)

    def same_data(self, other):
        return isinstance(other, SpaceTimeDataset) and self._key == other._key

    def __len__(self):
        return self.n


def cross_cov(model: CovarianceModel, coords_a, times_a, coords_b, times_b):
    """Covariance block between two point sets, without the nugget."""
    h = coords_a[:, None, :] - coords_b[None, :, :]
    u = times_a[:, None] - times_b[None, :]
    return model.cov(h, u)


def cov_matrix_points(model, coords, times):
    """Covariance matrix of arbitrary points; the nugget sits on the diagonal only."""
    coords = np.asarray(coords, dtype=float)
    if coords.ndim == 1:
        coords = coords[:, None]
    times = np.asarray(times, dtype=float).ravel()
    n = coords.shape[0]
    K = np.empty((n, n))
    iu, ju = np.triu_indices(n, k=1)
    if iu.size:
        vals = model.cov(coords[iu] - coords[ju], times[iu] - times[ju])
        K[iu, ju] = vals
        K[ju, iu] = vals
    K[np.diag_indices(n)] = model.sigma2 * (1.0 + model.tau2)
    return K


def cov_matrix(model: CovarianceModel, data: SpaceTimeDataset):
    """``n x n`` covariance with entries ``K(s_i - s_j, t_i - t_j)`` and the
    nugget on the diagonal."""
    if model.d != data.d:
        raise InputError(f"model dimension {model.d} does not match data dimension {data.d}")
    return cov_matrix_points(model, data.coords, data.times)


def cholesky_jitter(K, context=""):
    """Lower Cholesky factor of ``K``, adding escalating diagonal jitter on failure.

    Returns
    -------
    L : ndarray
    jitter : float
        The absolute jitter added (0.0 if none was needed).
    """
    try:
        return np.linalg.cholesky(K), 0.0
    except np.linalg.LinAlgError:
        pass
    mean_diag = float(np.mean(np.diag(K)))
    tried = []
    if math.isfinite(mean_diag) and mean_diag > 0:
        eye = np.eye(K.shape[0])
        for level in JITTER_LEVELS:
            jitter = level * mean_diag
            tried.append(jitter)
            try:
                return np.linalg.cholesky(K + jitter * eye), jitter
            except np.linalg.LinAlgError:
                continue
    where = f" {context}" if context else ""
    levels = ", ".join(f"{j:.3g}" for j in tried) or "none (non-positive diagonal)"
    raise ConditioningError(f"covariance matrix{where} is not positive definite; jitter tried: {levels}")


def gaussian_loglik(L, y, mean_mode):
    """Log-density of ``y`` under ``N(mu 1, L L^T)`` with ``mu`` zero or GLS-profiled."""
    n = y.shape[0]
    alpha = solve_triangular(L, y, lower=True, check_finite=False)
    mean_hat = 0.0
    if mean_mode is MeanMode.PROFILED:
        beta = solve_triangular(L, np.ones(n), lower=True, check_finite=False)
        mean_hat = float(beta @ alpha / (beta @ beta))
        alpha = alpha - mean_hat * beta
    logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    return -0.5 * (n * _LOG_2PI + logdet + float(alpha @ alpha)), mean_hat


def exact_loglik(model: CovarianceModel, data: SpaceTimeDataset, mean_mode="profiled"):
    """Exact Gaussian log-likelihood.

    Returns
    -------
    loglik : float
    mean_hat : float
        ``(1^T S^-1 y) / (1^T S^-1 1)`` for the profiled mode, else 0.
    """
    mean_mode = MeanMode.coerce(mean_mode)
    L, _ = cholesky_jitter(cov_matrix(model, data))
    return gaussian_loglik(L, data.values, mean_mode)


def _check_seed(seed):
    if isinstance(seed, (bool, np.bool_)) or not isinstance(seed, (int, np.integer)):
        raise InputError(f"seed must be an integer (got {seed!r})")
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise InputError("seed must lie in [0, 2**64)")
    return seed


def simulate(model: CovarianceModel, coords, times, seed):
    """Draw one zero-mean realization at the given points.

    ``y = L z`` with ``L`` the lower Cholesky factor and ``z`` standard normal
    from a Philox (counter-based) generator keyed by ``seed``.
    """
    seed = _check_seed(seed)
    coords = np.asarray(coords, dtype=float)
    if coords.ndim == 1:
        coords = coords[:, None]
    times = np.asarray(times, dtype=float).ravel()
    if coords.shape[0] != times.shape[0]:
        raise InputError("coords and times disagree in length")
    if model.d != coords.shape[1]:
        raise InputError(f"model dimension {model.d} does not match coordinate dimension {coords.shape[1]}")
    K = cov_matrix_points(model, coords, times)
    z = np.random.Generator(np.random.Philox(seed)).standard_normal(coords.shape[0])
    if not np.any(K):
        return np.zeros(coords.shape[0])
    L, _ = cholesky_jitter(K, "for simulation")
    return L @ z
