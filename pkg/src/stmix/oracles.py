"""Quadrature reconstructions of the closed-form kernels from their mixtures.

These functions integrate the Gaussian location/scale-mixture hierarchies
directly and never call the closed-form correlations in ``kernels``.  They
are slow and exist to check the fast code paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import betaln, gammaln

from .exceptions import DomainError, QuadratureError

__all__ = [
    "QuadSpec",
    "lgauss_closed",
    "oracle_lgauss_gh",
    "oracle_lgauss_mc",
    "oracle_lmatern",
    "oracle_lch",
    "oracle_lch_nested",
    "oracle_lgh",
    "oracle_matern_corr",
    "oracle_ch_corr",
    "tail_slope",
]


@dataclass(frozen=True)
class QuadSpec:
    """Tolerances for the adaptive quadrature behind every oracle.

    ``transform="log"`` integrates semi-infinite ranges in ``s = ln(x/c)``,
    ``None`` hands ``[0, inf)`` to the integrator as is.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_subdivisions: int = 2000
    transform: str | None = "log"

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("quadrature tolerances must be > 0")
        if int(self.max_subdivisions) < 1:
            raise ValueError("max_subdivisions must be >= 1")
        if self.transform not in (None, "log"):
            raise ValueError("transform must be None or 'log'")


_DEFAULT = QuadSpec()


def _quad(f, a, b, spec):
    val, err, info = integrate.quad(
        f, a, b, epsabs=spec.abs_tol, epsrel=spec.rel_tol, limit=int(spec.max_subdivisions), full_output=1
    )[:3]
    if not math.isfinite(val) or err > 100 * max(spec.abs_tol, spec.rel_tol * abs(val)):
        raise QuadratureError(f"quadrature did not converge (value {val!r}, error estimate {err!r})")
    return val


def _integrate_density(log_density, f, center, spec):
    """``int_0^inf f(r) exp(log_density(r)) dr`` with the range centred at ``center``."""
    if spec.transform is None:
        g = lambda r: f(r) * math.exp(log_density(r)) if r > 0 else 0.0  # noqa: E731
        return _quad(g, 0.0, center, spec) + _quad(g, center, math.inf, spec)

    def g(s):
        if abs(s) > 700.0:
            return 0.0
        r = center * math.exp(s)
        if r == 0.0 or not math.isfinite(r):
            return 0.0
        return f(r) * math.exp(log_density(r) + math.log(r))

    return _quad(g, -math.inf, 0.0, spec) + _quad(g, 0.0, math.inf, spec)


def _lag_terms(h, u, lambda_vec, Lambda):
    """Squared transported lag and ``ln|I + u^2 Lambda|`` by direct solve."""
    h = np.atleast_1d(np.asarray(h, dtype=float))
    lam = np.atleast_1d(np.asarray(lambda_vec, dtype=float))
    L = np.atleast_2d(np.asarray(Lambda, dtype=float))
    A = np.eye(h.size) + u * u * L
    r = h - u * lam
    sign, logdet = np.linalg.slogdet(A)
    if sign <= 0:
        raise DomainError("I + u^2 Lambda is not positive definite")
    return float(r @ np.linalg.solve(A, r)), float(logdet)


def lgauss_closed(h, u, rho, lambda_vec, Lambda, sigma2=1.0):
    """Exact Gaussian location mixture ``sigma2 |I+u^2 Lambda|^{-1/2} exp(-h_u^2/rho^2)``.

    The velocity law is ``N(lambda_vec, rho^2 Lambda / 2)`` acting on the
    base covariance ``exp(-|h|^2 / rho^2)``.
    """
    h2, logdet = _lag_terms(h, u, lambda_vec, Lambda)
    return sigma2 * math.exp(-0.5 * logdet - h2 / rho**2)


def _lgauss_integrand(h, u, params, x):
    """Base covariance at whitened velocities ``v = mu_v + sqrt(2) chol x``."""
    chol = np.linalg.cholesky(np.atleast_2d(params.D_v) / 2.0)
    v = params.mu_v + math.sqrt(2.0) * x @ chol.T
    resid = h - u * v
    return np.exp(-np.sum(resid * resid, axis=1) / params.rho**2)


def _tensor(points, weights, d):
    grids = np.meshgrid(*([points] * d), indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=-1)
    return nodes, np.prod(np.meshgrid(*([weights] * d), indexing="ij"), axis=0).ravel()


def _lgauss_gh_rule(h, u, params, n_nodes):
    nodes, weights = _tensor(*np.polynomial.hermite.hermgauss(n_nodes), h.size)
    return params.sigma2 * float(weights @ _lgauss_integrand(h, u, params, nodes)) / math.pi ** (h.size / 2)


def _lgauss_trapezoid_rule(h, u, params, step, half_width=9.0):
    x = np.arange(-half_width, half_width + 0.5 * step, step)
    nodes, weights = _tensor(x, np.full(x.size, step), h.size)
    dens = np.exp(-np.sum(nodes * nodes, axis=1))
    return params.sigma2 * float((weights * dens) @ _lgauss_integrand(h, u, params, nodes)) / math.pi ** (h.size / 2)


def oracle_lgauss_gh(h, u, params, n_nodes=None, rel_tol=1e-9):
    """Average of ``exp(-|h - v u|^2 / rho^2)`` over ``v ~ N(mu_v, D_v/2)``.

    With ``n_nodes`` given this is one tensor Gauss-Hermite rule.  Otherwise
    the rule doubles from 40 to 160 nodes per axis until two consecutive
    rules agree to ``rel_tol``.  When the velocity spread is wide relative to
    ``rho / |u|`` the integrand is too narrow for Hermite rules, and a
    trapezoid rule on the same whitened variable is halved instead.
    """
    h = np.atleast_1d(np.asarray(h, dtype=float))
    if n_nodes is not None:
        return _lgauss_gh_rule(h, u, params, int(n_nodes))
    prev = _lgauss_gh_rule(h, u, params, 40)
    for n in (80, 160):
        cur = _lgauss_gh_rule(h, u, params, n)
        if abs(cur - prev) <= rel_tol * abs(cur):
            return cur
        prev = cur
    step = 0.2
    prev = _lgauss_trapezoid_rule(h, u, params, step)
    while step > 0.01:
        step /= 2
        cur = _lgauss_trapezoid_rule(h, u, params, step)
        if abs(cur - prev) <= rel_tol * abs(cur):
            return cur
        prev = cur
    raise QuadratureError("velocity quadrature did not settle by step 0.01")


def oracle_lgauss_mc(h, u, params, n_samples=10_000_000, seed=0):
    """Monte Carlo estimate and standard error of the L-Gauss mixture."""
    h = np.atleast_1d(np.asarray(h, dtype=float))
    rng = np.random.Generator(np.random.Philox(seed))
    chol = np.linalg.cholesky(np.atleast_2d(params.D_v) / 2.0)
    total = 0.0
    total2 = 0.0
    done = 0
    while done < n_samples:
        size = min(1_000_000, n_samples - done)
        v = params.mu_v + rng.standard_normal((size, h.size)) @ chol.T
        resid = h - u * v
        vals = np.exp(-np.sum(resid * resid, axis=1) / params.rho**2)
        total += vals.sum()
        total2 += (vals * vals).sum()
        done += size
    mean = total / n_samples
    se = math.sqrt(max(total2 / n_samples - mean * mean, 0.0) / n_samples)
    return params.sigma2 * mean, params.sigma2 * se


def oracle_lmatern(h, u, params, quad: QuadSpec = _DEFAULT):
    """L-Matern as ``rho^2 ~ Ga(nu, rate 1/(4 phi^2))`` mixture of the Gaussian closed form."""
    nu, phi = params.nu, params.phi
    h2, logdet = _lag_terms(h, u, params.aniso.lambda_vec, params.aniso.Lambda)
    if h2 == 0.0:
        return params.sigma2 * math.exp(-0.5 * logdet)
    scale = 4.0 * phi * phi

    def log_density(r):
        return (nu - 1.0) * math.log(r) - r / scale - gammaln(nu) - nu * math.log(scale)

    # the integrand peaks near r ~ sqrt(h2 * scale)
    center = max(math.sqrt(h2 * scale), 1e-300)
    val = _integrate_density(log_density, lambda r: math.exp(-h2 / r), center, quad)
    return params.sigma2 * math.exp(-0.5 * logdet) * val


def _lch_log_marginal(nu, alpha, beta):
    b2 = beta * beta
    c = 2.0 * alpha * math.log(beta) - betaln(nu, alpha)
    return lambda r: c + (nu - 1.0) * math.log(r) - (nu + alpha) * math.log(r + b2)


def oracle_lch(h, u, params, quad: QuadSpec = _DEFAULT):
    """L-CH via the range mixture with ``phi^2 ~ IG(alpha, beta^2/4)`` integrated
    analytically, leaving ``r^{nu-1} (r + beta^2)^{-(nu+alpha)}`` for ``rho^2``."""
    h2, logdet = _lag_terms(h, u, params.aniso.lambda_vec, params.aniso.Lambda)
    if h2 == 0.0:
        return params.sigma2 * math.exp(-0.5 * logdet)
    log_density = _lch_log_marginal(params.nu, params.alpha, params.beta)
    center = max(math.sqrt(h2) * params.beta, 1e-300)
    val = _integrate_density(log_density, lambda r: math.exp(-h2 / r), center, quad)
    return params.sigma2 * math.exp(-0.5 * logdet) * val


def oracle_lch_nested(h, u, params, quad: QuadSpec = _DEFAULT):
    """Fully nested ``(phi^2, rho^2)`` quadrature; a slow cross-check of :func:`oracle_lch`."""
    nu, alpha, beta = params.nu, params.alpha, params.beta
    h2, logdet = _lag_terms(h, u, params.aniso.lambda_vec, params.aniso.Lambda)
    if h2 == 0.0:
        return params.sigma2 * math.exp(-0.5 * logdet)
    b4 = beta * beta / 4.0

    def log_ig(w):
        return alpha * math.log(b4) - gammaln(alpha) - (alpha + 1.0) * math.log(w) - b4 / w

    def inner(w):
        scale = 4.0 * w

        def log_ga(r):
            return (nu - 1.0) * math.log(r) - r / scale - gammaln(nu) - nu * math.log(scale)

        return _integrate_density(log_ga, lambda r: math.exp(-h2 / r), math.sqrt(h2 * scale), quad)

    val = _integrate_density(log_ig, inner, b4 / (alpha + 1.0), quad)
    return params.sigma2 * math.exp(-0.5 * logdet) * val


def oracle_lgh(h, u, params, quad: QuadSpec = _DEFAULT):
    """L-GH as a ``rho^2 ~ GIG`` mixture, density ``r^{p-1} exp(-(phi^2 r/4 + beta^2/r))``
    normalized by quadrature."""
    p, phi, beta = params.p, params.phi, params.beta
    h2, logdet = _lag_terms(h, u, params.aniso.lambda_vec, params.aniso.Lambda)
    a = phi * phi / 4.0
    b = beta * beta
    mode = math.sqrt(b / a)

    def log_kernel(r):
        return (p - 1.0) * math.log(r) - a * r - b / r

    # shift by the log-kernel at the mode to keep exp() in range
    shift = log_kernel(mode)
    log_density = lambda r: log_kernel(r) - shift  # noqa: E731
    norm = _integrate_density(log_density, lambda r: 1.0, mode, quad)
    if h2 == 0.0:
        val = 1.0
    else:
        val = _integrate_density(log_density, lambda r: math.exp(-h2 / r), mode, quad) / norm
    return params.sigma2 * math.exp(-0.5 * logdet) * val


def oracle_matern_corr(h, nu, phi, quad: QuadSpec = _DEFAULT):
    """``E exp(-h^2 / (2U))`` with ``U ~ Ga(nu, rate 1/(2 phi^2))``."""
    h2 = float(h) ** 2
    if h2 == 0.0:
        return 1.0
    scale = 2.0 * phi * phi

    def log_density(x):
        return (nu - 1.0) * math.log(x) - x / scale - gammaln(nu) - nu * math.log(scale)

    center = math.sqrt(h2 * scale / 2.0)
    return _integrate_density(log_density, lambda x: math.exp(-h2 / (2.0 * x)), center, quad)


def oracle_ch_corr(h, nu, alpha, beta, quad: QuadSpec = _DEFAULT):
    """``E exp(-h^2 / (2U))`` with ``U = (beta^2/2) X``, ``X ~ BetaPrime(nu, alpha)``."""
    h2 = float(h) ** 2
    if h2 == 0.0:
        return 1.0
    c = beta * beta / 2.0

    def log_density(x):
        return (nu - 1.0) * math.log(x) - (nu + alpha) * math.log1p(x) - betaln(nu, alpha)

    center = max(math.sqrt(h2) / beta, 1e-300)
    return _integrate_density(log_density, lambda x: math.exp(-h2 / (2.0 * c * x)), center, quad)


def tail_slope(f, x_lo, x_hi, n_pts=20):
    """Least-squares slope of ``ln f`` against ``ln x`` on log-spaced points."""
    if not (0 < x_lo and x_hi / x_lo >= 10):
        raise DomainError("need 0 < x_lo and x_hi / x_lo >= 10")
    x = np.geomspace(x_lo, x_hi, int(n_pts))
    y = np.array([float(f(xi)) for xi in x])
    if np.any(~(y > 0)):
        raise DomainError("tail_slope needs f > 0 on the whole range")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])
