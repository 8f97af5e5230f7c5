"""Random parameter draws shared by the test modules."""

import numpy as np

from stmix.kernels import (
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

FAMILY_NAMES = ("lgauss", "lmatern", "lch", "lgh", "glmatern", "glch")


def random_aniso(rng, d=2, symmetric=False):
    lam = np.zeros(d) if symmetric else rng.uniform(-1, 1, d)
    A = rng.normal(size=(d, d))
    Lambda = A @ A.T / d + rng.uniform(0.05, 0.5) * np.eye(d)
    return Anisotropy(lam, Lambda)


def random_family(name, rng, d=2, symmetric=False):
    aniso = random_aniso(rng, d, symmetric)
    sigma2 = rng.uniform(0.5, 2.0)
    if name == "lgauss":
        return LGaussParams(sigma2, rng.uniform(0.3, 2.0), aniso.lambda_vec, aniso.Lambda)
    if name == "lmatern":
        return LMaternParams(sigma2, rng.uniform(0.2, 2.5), rng.uniform(0.1, 1.5), aniso)
    if name == "lch":
        return LCHParams(sigma2, rng.uniform(0.2, 2.5), rng.uniform(0.2, 2.5), rng.uniform(0.1, 1.5), aniso)
    if name == "lgh":
        return LGHParams(sigma2, rng.uniform(-1.5, 2.5), rng.uniform(0.5, 4.0), rng.uniform(0.1, 1.5), aniso)
    if name == "glmatern":
        base = MaternBase(rng.uniform(0.2, 2.5), rng.uniform(0.1, 1.5))
        return GLParams(base, rng.uniform(d, d + 3.0), sigma2, aniso)
    if name == "glch":
        base = CHBase(rng.uniform(0.2, 2.5), rng.uniform(0.2, 2.5), rng.uniform(0.1, 1.5))
        return GLParams(base, rng.uniform(d, d + 3.0), sigma2, aniso)
    raise KeyError(name)


def random_model(name, rng, d=2, symmetric=False, tau2=0.0):
    return CovarianceModel(random_family(name, rng, d, symmetric), tau2=tau2)


def random_points(rng, n, d=2):
    return rng.uniform(0, 1, (n, d)), rng.uniform(0, 1, n)


def pairwise_matrix(model, coords, times):
    h = coords[:, None, :] - coords[None, :, :]
    u = times[:, None] - times[None, :]
    return model(h, u)
