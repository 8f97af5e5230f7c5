"""Named flat parameterizations of the covariance families.

In the plane the anisotropy is written in polar form: speed ``lambda0`` and
direction ``theta0`` of the mean velocity, plus the rotation ``theta1`` and
eigenvalues ``lambda1, lambda2`` of the velocity covariance.  On the line it
is a signed velocity ``lambda0`` and a variance ``lambda1``.
"""

from __future__ import annotations

import math

import numpy as np

from .exceptions import InputError
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
)

__all__ = [
    "FAMILY_LABELS",
    "param_names",
    "model_from_params",
    "params_from_model",
    "default_init",
    "default_bounds",
    "wrap_angle",
    "canonicalize",
    "max_scaled_distance",
]

FAMILY_LABELS = {
    "lgauss": "L-Gauss",
    "lmatern": "L-Matern",
    "lch": "L-CH",
    "lgh": "L-GH",
    "glmatern": "GL-Matern",
    "glch": "GL-CH",
}

_SHAPE = {
    "lgauss": ("rho",),
    "lmatern": ("nu", "phi"),
    "lch": ("nu", "alpha", "beta"),
    "lgh": ("p", "phi", "beta"),
    "glmatern": ("nu", "phi", "a_exp"),
    "glch": ("nu", "alpha", "beta", "a_exp"),
}

ANGLES = frozenset({"theta0", "theta1"})
# parameters without a positivity constraint
SIGNED = frozenset({"lambda0", "p"})


def _check_family(family):
    if family not in _SHAPE:
        raise InputError(f"unknown family {family!r}; expected one of {', '.join(_SHAPE)}")


def _aniso_names(d):
    if d == 1:
        return ("lambda0", "lambda1")
    if d == 2:
        return ("lambda0", "theta0", "theta1", "lambda1", "lambda2")
    raise InputError(f"named parameterizations exist for d = 1 or 2 (got d = {d})")


def param_names(family, d=2):
    """Ordered parameter names of ``family`` in dimension ``d``."""
    _check_family(family)
    return ("sigma2", "tau2") + _SHAPE[family] + _aniso_names(d)


def wrap_angle(theta):
    """Map an angle to ``(-pi, pi]``."""
    w = math.remainder(float(theta), 2.0 * math.pi)
    return math.pi if w == -math.pi else w


def _anisotropy(params, d):
    if d == 1:
        return Anisotropy([params["lambda0"]], [[params["lambda1"]]])
    lam0, th0 = params["lambda0"], params["theta0"]
    if lam0 < 0:
        lam0, th0 = -lam0, th0 + math.pi
    return Anisotropy.from_polar(lam0, th0, params["theta1"], params["lambda1"], params["lambda2"])


def model_from_params(family, params, d=2):
    """Build a :class:`CovarianceModel` from a complete name -> value mapping."""
    names = param_names(family, d)
    missing = [k for k in names if k not in params]
    if missing:
        raise InputError(f"missing parameters for {family}: {', '.join(missing)}")
    extra = sorted(set(params) - set(names))
    if extra:
        raise InputError(f"unknown parameters for {family}: {', '.join(extra)}")
    p = {k: float(params[k]) for k in names}
    aniso = _anisotropy(p, d)
    if family == "lgauss":
        fam = LGaussParams.from_anisotropy(p["sigma2"], p["rho"], aniso)
    elif family == "lmatern":
        fam = LMaternParams(p["sigma2"], p["nu"], p["phi"], aniso)
    elif family == "lch":
        fam = LCHParams(p["sigma2"], p["nu"], p["alpha"], p["beta"], aniso)
    elif family == "lgh":
        fam = LGHParams(p["sigma2"], p["p"], p["phi"], p["beta"], aniso)
    elif family == "glmatern":
        fam = GLParams(MaternBase(p["nu"], p["phi"]), p["a_exp"], p["sigma2"], aniso)
    else:
        fam = GLParams(CHBase(p["nu"], p["alpha"], p["beta"]), p["a_exp"], p["sigma2"], aniso)
    return CovarianceModel(fam, tau2=p["tau2"])


def _polar(lambda_vec, Lambda):
    lam0 = float(np.hypot(*lambda_vec))
    th0 = float(np.arctan2(lambda_vec[1], lambda_vec[0])) if lam0 > 0 else 0.0
    eigval, eigvec = np.linalg.eigh(Lambda)
    th1 = float(np.arctan2(eigvec[1, 0], eigvec[0, 0]))
    out = {"lambda0": lam0, "theta0": wrap_angle(th0), "theta1": th1, "lambda1": float(eigval[0]), "lambda2": float(eigval[1])}
    return canonicalize(out)


def params_from_model(model: CovarianceModel):
    """Inverse of :func:`model_from_params` up to the canonical angle ranges."""
    fam = model.family
    name = fam.family
    d = fam.d
    if name == "lgauss":
        # the polar parameters describe mu_v and D_v directly
        lam, Lam = fam.mu_v, fam.D_v
        out = {"rho": fam.rho}
    else:
        lam, Lam = fam.aniso.lambda_vec, fam.aniso.Lambda
        if name == "lmatern":
            out = {"nu": fam.nu, "phi": fam.phi}
        elif name == "lch":
            out = {"nu": fam.nu, "alpha": fam.alpha, "beta": fam.beta}
        elif name == "lgh":
            out = {"p": fam.p, "phi": fam.phi, "beta": fam.beta}
        elif name == "glmatern":
            out = {"nu": fam.base.nu, "phi": fam.base.phi, "a_exp": fam.a_exp}
        else:
            out = {"nu": fam.base.nu, "alpha": fam.base.alpha, "beta": fam.base.beta, "a_exp": fam.a_exp}
    if d == 1:
        aniso = {"lambda0": float(lam[0]), "lambda1": float(Lam[0, 0])}
    elif d == 2:
        aniso = _polar(lam, Lam)
    else:
        raise InputError(f"named parameterizations exist for d = 1 or 2 (got d = {d})")
    params = {"sigma2": fam.sigma2, "tau2": model.tau2, **out, **aniso}
    return {k: float(params[k]) for k in param_names(name, d)}


def canonicalize(params):
    """Nonnegative speed, ``theta0`` in ``(-pi, pi]``, ``theta1`` in ``(-pi/2, pi/2]``.

    ``Lambda`` is unchanged by ``theta1 -> theta1 + pi``, so the half-open
    half-circle is a complete range.
    """
    out = dict(params)
    if "theta0" in out:
        if out["lambda0"] < 0:
            out["lambda0"] = -out["lambda0"]
            out["theta0"] = out["theta0"] + math.pi
        out["theta0"] = wrap_angle(out["theta0"])
    if "theta1" in out:
        th = wrap_angle(out["theta1"])
        if th > math.pi / 2:
            th -= math.pi
        elif th <= -math.pi / 2:
            th += math.pi
        out["theta1"] = th
    return out


def max_scaled_distance(coords, times, time_scale):
    """Diagonal of the bounding box of the scaled points ``(s, time_scale * t)``."""
    span = np.concatenate([np.ptp(coords, axis=0), [time_scale * np.ptp(times)]])
    dist = float(np.sqrt(np.sum(span * span)))
    return dist if dist > 0 else 1.0


def default_init(family, data, time_scale=1.0):
    """Heuristic starting values.

    ``sigma2`` is the sample variance, ranges are 20% of the scaled data
    extent, ``nu = 0.5``, ``alpha = 1``, ``tau2 = 0.1``, zero drift and a
    small isotropic velocity covariance.
    """
    d = data.d
    names = param_names(family, d)
    var = float(np.var(data.values)) if data.n > 1 else 1.0
    scale = 0.2 * max_scaled_distance(data.coords, data.times, time_scale)
    guess = {
        "sigma2": var if var > 0 else 1.0,
        "tau2": 0.1,
        "rho": scale,
        "phi": scale,
        "beta": scale,
        "nu": 0.5,
        "alpha": 1.0,
        "p": 0.5,
        "a_exp": d + 1.0,
        "lambda0": 0.0,
        "theta0": 0.0,
        "theta1": 0.0,
        "lambda1": 0.01,
        "lambda2": 0.01,
    }
    if family == "lgh":
        # GIG-mixed range: phi is an inverse range
        guess["phi"] = 1.0 / scale
    return {k: guess[k] for k in names}


def default_bounds(family, d=2):
    """Default box constraints on the constrained scale (``None`` = open)."""
    names = param_names(family, d)
    bounds = {k: (None, None) for k in names}
    if "nu" in bounds:
        bounds["nu"] = (1e-3, 20.0)
    if "alpha" in bounds:
        # large alpha only approaches the Matern limit; U is validated for a <= 50
        bounds["alpha"] = (None, 50.0)
    if "a_exp" in bounds:
        # positive definiteness needs a >= d
        bounds["a_exp"] = (float(d), None)
    return bounds
