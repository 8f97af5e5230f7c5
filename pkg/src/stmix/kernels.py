r"""Closed-form asymmetric space-time covariance families.

Every family is evaluated at a space-time lag ``(h, u)`` with ``h`` of shape
``(..., d)`` and ``u`` of shape ``(...)``.  The Lagrangian families share the
transported lag

.. math::
    h_u = \{(h - u\lambda)^\top (I + u^2\Lambda)^{-1} (h - u\lambda)\}^{1/2}

and a temporal damping factor ``|I + u^2 Lambda|^{-1/2}`` (``-a/(2d)`` for the
generalized family).  All terms are combined in log space so that large lags
underflow gracefully instead of producing ``0 * inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy import special as sc

from .exceptions import InvalidParameterError
from .special import LogBesselTable, LogTricomiTable, log_bessel_k, log_tricomi_u

__all__ = [
    "Anisotropy",
    "LGaussParams",
    "LMaternParams",
    "LCHParams",
    "LGHParams",
    "MaternBase",
    "CHBase",
    "GLParams",
    "CovarianceModel",
    "FAMILIES",
    "mahalanobis_lag",
    "matern_corr",
    "log_matern_corr",
    "ch_corr",
    "log_ch_corr",
    "evaluate",
]

_LN2 = math.log(2.0)
# arrays with more positive arguments than this go through a Chebyshev table
_TABLE_MIN_POINTS = 2048


def _log_bessel_k_bulk(nu, x):
    """``ln K_nu(x)`` for positive ``x``, tabulated when the array is large."""
    x = np.asarray(x, dtype=float)
    if x.size > _TABLE_MIN_POINTS:
        return LogBesselTable(nu, float(x.min()), float(x.max()))(x)
    return log_bessel_k(nu, x)


def _positive(name, value, allow_zero=False):
    value = float(value)
    ok = value >= 0 if allow_zero else value > 0
    if not (math.isfinite(value) and ok):
        bound = ">= 0" if allow_zero else "> 0"
        raise InvalidParameterError(f"{name} must be finite and {bound} (got {value!r})")
    return value


class Anisotropy:
    """Prior velocity ``lambda_vec`` and velocity covariance ``Lambda``.

    ``Lambda`` must be symmetric positive definite.  Its eigendecomposition is
    cached because every lag evaluation needs ``(I + u^2 Lambda)^{-1}``.
    """

    def __init__(self, lambda_vec, Lambda, _eig=None):
        lam = np.atleast_1d(np.asarray(lambda_vec, dtype=float)).copy()
        mat = np.atleast_2d(np.asarray(Lambda, dtype=float)).copy()
        d = lam.shape[0]
        if lam.ndim != 1 or mat.shape != (d, d):
            raise InvalidParameterError(
                f"lambda_vec must have shape (d,) and Lambda (d, d); got {lam.shape} and {mat.shape}"
            )
        if not (np.all(np.isfinite(lam)) and np.all(np.isfinite(mat))):
            raise InvalidParameterError("lambda_vec and Lambda must be finite")
        scale = max(1.0, float(np.max(np.abs(mat))))
        if np.max(np.abs(mat - mat.T)) > 1e-12 * scale:
            raise InvalidParameterError("Lambda must be symmetric positive definite (not symmetric)")
        mat = 0.5 * (mat + mat.T)
        if _eig is None:
            try:
                np.linalg.cholesky(mat)
            except np.linalg.LinAlgError:
                raise InvalidParameterError("Lambda must be symmetric positive definite") from None
            eigval, eigvec = np.linalg.eigh(mat)
        else:
            # a known factorization stays valid when one eigenvalue is tiny
            # and rounding makes the assembled matrix look indefinite
            eigval, eigvec = (np.array(a, dtype=float) for a in _eig)
        if np.any(eigval <= 0):
            raise InvalidParameterError("Lambda must be symmetric positive definite")
        for arr in (lam, mat, eigval, eigvec):
            arr.setflags(write=False)
        self.lambda_vec = lam
        self.Lambda = mat
        self._eigval = eigval
        self._eigvec = eigvec

    @classmethod
    def from_polar(cls, lambda0, theta0, theta1, lambda1, lambda2):
        """Planar constructor: speed/direction of the mean velocity plus a
        rotated diagonal velocity covariance."""
        lambda0 = float(lambda0)
        if not (math.isfinite(lambda0) and lambda0 >= 0):
            raise InvalidParameterError(f"lambda0 must be >= 0 (got {lambda0!r})")
        lambda1 = _positive("lambda1", lambda1)
        lambda2 = _positive("lambda2", lambda2)
        lam = lambda0 * np.array([math.cos(theta0), math.sin(theta0)])
        c, s = math.cos(theta1), math.sin(theta1)
        rot = np.array([[c, -s], [s, c]])
        eigval = np.array([lambda1, lambda2])
        return cls(lam, (rot * eigval) @ rot.T, _eig=(eigval, rot))

    @classmethod
    def isotropic(cls, d, scale=1.0, lambda_vec=None):
        lam = np.zeros(d) if lambda_vec is None else lambda_vec
        return cls(lam, _positive("scale", scale) * np.eye(d))

    @property
    def d(self):
        return self.lambda_vec.shape[0]

    def scaled(self, factor):
        """Same velocity, ``Lambda`` multiplied by ``factor``."""
        return Anisotropy(self.lambda_vec, self.Lambda * factor, _eig=(self._eigval * factor, self._eigvec))

    def __eq__(self, other):
        return (
            isinstance(other, Anisotropy)
            and np.array_equal(self.lambda_vec, other.lambda_vec)
            and np.array_equal(self.Lambda, other.Lambda)
        )

    def __hash__(self):
        return hash((self.lambda_vec.tobytes(), self.Lambda.tobytes()))

    def __repr__(self):
        return f"Anisotropy(lambda_vec={self.lambda_vec.tolist()}, Lambda={self.Lambda.tolist()})"


def _broadcast_lag(h, u, d):
    h = np.asarray(h, dtype=float)
    u = np.asarray(u, dtype=float)
    if h.ndim == 0 or h.shape[-1] != d:
        if d != 1:
            raise InvalidParameterError(f"spatial lag must have trailing dimension {d}; got shape {h.shape}")
        h = h[..., None]
    shape = np.broadcast_shapes(h.shape[:-1], u.shape)
    return np.broadcast_to(h, shape + (d,)), np.broadcast_to(u, shape)


def mahalanobis_lag(h, u, aniso: Anisotropy):
    """Transported lag length and ``ln |I + u^2 Lambda|``.

    Returns
    -------
    h_u : ndarray
        ``{(h - u lambda)^T (I + u^2 Lambda)^{-1} (h - u lambda)}^{1/2}``.
    logdet : ndarray
        ``ln |I + u^2 Lambda|`` (non-negative).
    """
    h, u = _broadcast_lag(h, u, aniso.d)
    resid = h - u[..., None] * aniso.lambda_vec
    proj = resid @ aniso._eigvec
    u2k = (u * u)[..., None] * aniso._eigval
    h2 = np.sum(proj * proj / (1.0 + u2k), axis=-1)
    # purely spatial lags skip the rotation so the margin is exact
    h2 = np.where(u == 0, np.sum(h * h, axis=-1), h2)
    logdet = np.sum(np.log1p(u2k), axis=-1)
    return np.sqrt(h2), logdet


def log_matern_corr(h, nu, phi):
    """ln of the Matern correlation ``2^(1-nu)/Gamma(nu) (h/phi)^nu K_nu(h/phi)``."""
    z = np.asarray(h, dtype=float) / phi
    out = np.zeros(z.shape)
    pos = z > 0
    if np.any(pos):
        zp = z[pos]
        out[pos] = (1.0 - nu) * _LN2 - sc.gammaln(nu) + nu * np.log(zp) + _log_bessel_k_bulk(nu, zp)
    # rounding can nudge tiny lags a hair above 1
    return np.minimum(out, 0.0) if out.ndim else min(float(out), 0.0)


def matern_corr(h, nu, phi):
    """Matern correlation; exactly 1 at ``h = 0``."""
    return np.exp(log_matern_corr(h, nu, phi))


def log_ch_corr(h, nu, alpha, beta):
    """ln of the confluent hypergeometric correlation
    ``Gamma(nu+alpha)/Gamma(nu) U(alpha, 1-nu, (h/beta)^2)``."""
    x = (np.asarray(h, dtype=float) / beta) ** 2
    out = np.zeros(x.shape)
    pos = x > 0
    n_pos = int(np.count_nonzero(pos))
    if n_pos:
        xp = x[pos]
        if n_pos > _TABLE_MIN_POINTS:
            log_u = LogTricomiTable(alpha, 1.0 - nu, float(xp.min()), float(xp.max()))(xp)
        else:
            log_u = log_tricomi_u(alpha, 1.0 - nu, xp)
        out[pos] = sc.gammaln(nu + alpha) - sc.gammaln(nu) + log_u
    return np.minimum(out, 0.0) if out.ndim else min(float(out), 0.0)


def ch_corr(h, nu, alpha, beta):
    """CH correlation; exactly 1 at ``h = 0``, tail ``~ h^(-2 alpha)``."""
    return np.exp(log_ch_corr(h, nu, alpha, beta))


# --------------------------------------------------------------------------
# Families
# --------------------------------------------------------------------------


def _check_aniso(aniso):
    if not isinstance(aniso, Anisotropy):
        raise InvalidParameterError("aniso must be an Anisotropy instance")
    return aniso


@dataclass(frozen=True, eq=False)
class LGaussParams:
    """Lagrangian Gaussian covariance with Gaussian velocity ``N(mu_v, D_v/2)``."""

    sigma2: float
    rho: float
    mu_v: np.ndarray
    D_v: np.ndarray
    family = "lgauss"
    _aniso: Anisotropy = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "sigma2", _positive("sigma2", self.sigma2, allow_zero=True))
        object.__setattr__(self, "rho", _positive("rho", self.rho))
        D = np.atleast_2d(np.asarray(self.D_v, dtype=float))
        try:
            aniso = Anisotropy(self.mu_v, D / self.rho**2)
        except InvalidParameterError as exc:
            raise InvalidParameterError(str(exc).replace("Lambda", "D_v")) from None
        object.__setattr__(self, "mu_v", aniso.lambda_vec)
        object.__setattr__(self, "D_v", D)
        object.__setattr__(self, "_aniso", aniso)

    @classmethod
    def from_anisotropy(cls, sigma2, rho, velocity: Anisotropy):
        """Record with ``mu_v = velocity.lambda_vec`` and ``D_v = velocity.Lambda``."""
        rec = cls(sigma2, rho, velocity.lambda_vec, np.eye(velocity.d))
        object.__setattr__(rec, "D_v", velocity.Lambda)
        object.__setattr__(rec, "_aniso", velocity.scaled(1.0 / rec.rho**2))
        return rec

    @property
    def d(self):
        return self._aniso.d

    def log_cov(self, h, u):
        h_u, logdet = mahalanobis_lag(h, u, self._aniso)
        return _log(self.sigma2) - 0.5 * logdet - (h_u / self.rho) ** 2


@dataclass(frozen=True, eq=False)
class LMaternParams:
    """Lagrangian Matern covariance ``sigma2 |I+u^2 Lambda|^{-1/2} M(h_u; nu, phi)``."""

    sigma2: float
    nu: float
    phi: float
    aniso: Anisotropy
    family = "lmatern"

    def __post_init__(self):
        object.__setattr__(self, "sigma2", _positive("sigma2", self.sigma2, allow_zero=True))
        object.__setattr__(self, "nu", _positive("nu", self.nu))
        object.__setattr__(self, "phi", _positive("phi", self.phi))
        _check_aniso(self.aniso)

    @property
    def d(self):
        return self.aniso.d

    def log_cov(self, h, u):
        h_u, logdet = mahalanobis_lag(h, u, self.aniso)
        return _log(self.sigma2) - 0.5 * logdet + log_matern_corr(h_u, self.nu, self.phi)


@dataclass(frozen=True, eq=False)
class LCHParams:
    """Lagrangian CH covariance ``sigma2 |I+u^2 Lambda|^{-1/2} CH(h_u; nu, alpha, beta)``."""

    sigma2: float
    nu: float
    alpha: float
    beta: float
    aniso: Anisotropy
    family = "lch"

    def __post_init__(self):
        object.__setattr__(self, "sigma2", _positive("sigma2", self.sigma2, allow_zero=True))
        for name in ("nu", "alpha", "beta"):
            object.__setattr__(self, name, _positive(name, getattr(self, name)))
        _check_aniso(self.aniso)

    @property
    def d(self):
        return self.aniso.d

    def log_cov(self, h, u):
        h_u, logdet = mahalanobis_lag(h, u, self.aniso)
        return _log(self.sigma2) - 0.5 * logdet + log_ch_corr(h_u, self.nu, self.alpha, self.beta)


@dataclass(frozen=True, eq=False)
class LGHParams:
    """Lagrangian generalized hyperbolic covariance (GIG range mixing)."""

    sigma2: float
    p: float
    phi: float
    beta: float
    aniso: Anisotropy
    family = "lgh"
    _log_norm: float = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "sigma2", _positive("sigma2", self.sigma2, allow_zero=True))
        p = float(self.p)
        if not math.isfinite(p):
            raise InvalidParameterError(f"p must be finite (got {self.p!r})")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "phi", _positive("phi", self.phi))
        object.__setattr__(self, "beta", _positive("beta", self.beta))
        _check_aniso(self.aniso)
        object.__setattr__(self, "_log_norm", float(log_bessel_k(abs(p), self.phi * self.beta)))

    @property
    def d(self):
        return self.aniso.d

    def log_corr(self, h_u):
        h_u = np.asarray(h_u, dtype=float)
        r2 = (h_u / self.beta) ** 2
        arg = self.phi * self.beta * np.sqrt(1.0 + r2)
        return 0.5 * self.p * np.log1p(r2) + _log_bessel_k_bulk(abs(self.p), arg) - self._log_norm

    def log_cov(self, h, u):
        h_u, logdet = mahalanobis_lag(h, u, self.aniso)
        out = self.log_corr(h_u)
        out = np.where(h_u == 0, 0.0, np.minimum(out, 0.0))
        return _log(self.sigma2) - 0.5 * logdet + out


@dataclass(frozen=True)
class MaternBase:
    nu: float
    phi: float

    def __post_init__(self):
        object.__setattr__(self, "nu", _positive("nu", self.nu))
        object.__setattr__(self, "phi", _positive("phi", self.phi))

    def log_corr(self, h):
        return log_matern_corr(h, self.nu, self.phi)


@dataclass(frozen=True)
class CHBase:
    nu: float
    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("nu", "alpha", "beta"):
            object.__setattr__(self, name, _positive(name, getattr(self, name)))

    def log_corr(self, h):
        return log_ch_corr(h, self.nu, self.alpha, self.beta)


@dataclass(frozen=True, eq=False)
class GLParams:
    """Generalized Lagrangian covariance
    ``sigma2 |I+u^2 Lambda|^{-a/(2d)} phi(h_u)`` with a Matern or CH ``phi``.

    Notes
    -----
    Positive definiteness is guaranteed for ``a_exp >= d``, where the extra
    determinant power is itself a covariance in ``u``.  For ``a_exp < d``
    the function can fail to be positive definite (the test suite carries a
    counterexample), so fitting bounds ``a_exp`` below by ``d``.
    """

    base: Union[MaternBase, CHBase]
    a_exp: float
    sigma2: float
    aniso: Anisotropy

    def __post_init__(self):
        if not isinstance(self.base, (MaternBase, CHBase)):
            raise InvalidParameterError("base must be MaternBase or CHBase")
        object.__setattr__(self, "a_exp", _positive("a_exp", self.a_exp))
        object.__setattr__(self, "sigma2", _positive("sigma2", self.sigma2, allow_zero=True))
        _check_aniso(self.aniso)

    @property
    def family(self):
        return "glmatern" if isinstance(self.base, MaternBase) else "glch"

    @property
    def d(self):
        return self.aniso.d

    def log_cov(self, h, u):
        h_u, logdet = mahalanobis_lag(h, u, self.aniso)
        return _log(self.sigma2) - self.a_exp / (2.0 * self.aniso.d) * logdet + self.base.log_corr(h_u)


FamilyParams = Union[LGaussParams, LMaternParams, LCHParams, LGHParams, GLParams]

FAMILIES = ("lgauss", "lmatern", "lch", "lgh", "glmatern", "glch")


def _log(x):
    with np.errstate(divide="ignore"):
        return np.log(x)


@dataclass(frozen=True, eq=False)
class CovarianceModel:
    """A covariance family plus a nugget ``sigma2 * tau2`` at the zero lag.

    Calling the model evaluates it at ``(h, u)``.
    """

    family: FamilyParams
    tau2: float = 0.0

    def __post_init__(self):
        if not hasattr(self.family, "log_cov"):
            raise InvalidParameterError("family must be a covariance family parameter record")
        object.__setattr__(self, "tau2", _positive("tau2", self.tau2, allow_zero=True))

    @property
    def name(self):
        return self.family.family

    @property
    def sigma2(self):
        return self.family.sigma2

    @property
    def d(self):
        return self.family.d

    def cov(self, h, u):
        """Covariance without the nugget."""
        return np.exp(self.family.log_cov(h, u))

    def __call__(self, h, u):
        return evaluate(self, h, u)


def evaluate(model: CovarianceModel, h, u):
    """Covariance at lag ``(h, u)``; the nugget is added only at the exact zero lag."""
    h, u = _broadcast_lag(h, u, model.d)
    out = model.cov(h, u)
    if model.tau2 > 0:
        zero = np.all(h == 0, axis=-1) & (u == 0)
        out = out + model.sigma2 * model.tau2 * zero
    return float(out) if np.ndim(out) == 0 else out
