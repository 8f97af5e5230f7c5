r"""Special functions behind the closed-form kernels.

Three families are needed:

* :func:`log_gamma` -- :math:`\ln\Gamma(x)`;
* :func:`bessel_k`, :func:`bessel_k_scaled`, :func:`log_bessel_k` -- the
  modified Bessel function of the second kind :math:`K_\nu(x)` of real order;
* :func:`tricomi_u`, :func:`log_tricomi_u` -- the confluent hypergeometric
  function of the second kind,

  .. math::
      U(a, b, x) = \frac{1}{\Gamma(a)} \int_0^\infty t^{a-1} (1+t)^{b-a-1}
      e^{-xt}\, dt .

``U`` is evaluated from its integral representation.  After substituting
:math:`t = e^s` the log-integrand
:math:`\phi(s) = a s - (1-b+a)\log(1+e^s) - x e^s` is strictly concave, so the
integrand is unimodal on the real line.  We centre a sinh map on the mode and
apply the trapezoidal rule, halving the step until successive levels agree.
For large arrays sharing ``(a, b)`` a piecewise Chebyshev table of
:math:`\ln U(a, b, e^y)` built from the same quadrature avoids paying the full
quadrature per point.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special as sc

from .exceptions import DomainError

__all__ = [
    "EvalConfig",
    "log_gamma",
    "bessel_k",
    "bessel_k_scaled",
    "log_bessel_k",
    "tricomi_u",
    "log_tricomi_u",
    "LogTricomiTable",
    "LogBesselTable",
]

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class EvalConfig:
    """Accuracy knobs for the quadrature-backed special functions.

    Parameters
    ----------
    rel_tol : float
        Relative agreement required between successive trapezoid levels.
    max_quad_nodes : int
        Maximum number of integrand evaluations per point.
    log_scale_threshold : float
        Arguments above which ``exp(-x)`` is combined in log space.
    """

    rel_tol: float = 1e-10
    max_quad_nodes: int = 4096
    log_scale_threshold: float = 700.0

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be > 0 (got {self.rel_tol})")
        if self.max_quad_nodes < 16:
            raise ValueError(f"max_quad_nodes must be >= 16 (got {self.max_quad_nodes})")


DEFAULT_CONFIG = EvalConfig()


def _as_float_array(x, name):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr


def _maybe_scalar(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


def log_gamma(x):
    """Natural log of the gamma function for positive arguments."""
    arr = _as_float_array(x, "x")
    if np.any(arr <= 0):
        raise DomainError("log_gamma requires x > 0")
    return _maybe_scalar(sc.gammaln(arr), x)


def _check_bessel_args(nu, x):
    nu_arr = _as_float_array(nu, "nu")
    x_arr = _as_float_array(x, "x")
    if np.any(x_arr <= 0):
        raise DomainError("Bessel K requires x > 0")
    # K_nu = K_{-nu}; subnormal orders are flushed to 0 (kve returns inf there)
    nu_arr = np.abs(nu_arr)
    return np.where(nu_arr < 1e-300, 0.0, nu_arr), x_arr


def bessel_k_scaled(nu, x):
    """Exponentially scaled Bessel function ``exp(x) * K_nu(x)``."""
    nu_arr, x_arr = _check_bessel_args(nu, x)
    out = sc.kve(nu_arr, x_arr)
    if np.any(np.isinf(out)):
        raise OverflowError("K_nu(x) overflows here; use log_bessel_k")
    return _maybe_scalar(out, np.broadcast(nu, x))


def log_bessel_k(nu, x):
    """``ln K_nu(x)``, finite wherever ``K_nu(x)`` is positive.

    Where the scaled value overflows (tiny ``x`` with large order) the leading
    small-argument term ``Gamma(nu) 2^(nu-1) x^(-nu)`` is used; in that regime
    the neglected relative correction is below ``x^2 / (4 (nu - 1))``.
    """
    nu_arr, x_arr = _check_bessel_args(nu, x)
    nu_b, x_b = np.broadcast_arrays(nu_arr, x_arr)
    with np.errstate(over="ignore"):
        kve = sc.kve(nu_b, x_b)
    out = np.empty(nu_b.shape)
    ok = np.isfinite(kve)
    out[ok] = np.log(kve[ok]) - x_b[ok]
    bad = ~ok
    if np.any(bad):
        nb, xb = nu_b[bad], x_b[bad]
        out[bad] = sc.gammaln(nb) + (nb - 1.0) * _LN2 - nb * np.log(xb)
    return _maybe_scalar(out, np.broadcast(nu, x))


def bessel_k(nu, x):
    """Modified Bessel function of the second kind ``K_nu(x)``.

    Raises
    ------
    OverflowError
        If the value is not representable; callers should switch to
        :func:`log_bessel_k` or :func:`bessel_k_scaled`.
    """
    nu_arr, x_arr = _check_bessel_args(nu, x)
    nu_b, x_b = np.broadcast_arrays(nu_arr, x_arr)
    with np.errstate(over="ignore"):
        kve = sc.kve(nu_b, x_b)
    if np.any(np.isinf(kve)):
        raise OverflowError("K_nu(x) overflows here; use log_bessel_k")
    out = kve * np.exp(-np.minimum(x_b, DEFAULT_CONFIG.log_scale_threshold))
    big = x_b > DEFAULT_CONFIG.log_scale_threshold
    if np.any(big):
        # exp(-x) is subnormal here; combine in log space
        out[big] = np.exp(np.log(kve[big]) - x_b[big])
    return _maybe_scalar(out, np.broadcast(nu, x))


# --------------------------------------------------------------------------
# Tricomi U via mode-centred sinh quadrature
# --------------------------------------------------------------------------

_TAIL = 44.0  # integrand truncated below exp(-_TAIL) of its peak
_H0 = 0.5
_MAX_EXTENT = 14.0


def _log_integrand(a, c, x, s):
    s = np.minimum(s, 700.0)
    return a * s - c * np.logaddexp(0.0, s) - x * np.exp(s)


def _mode_and_scale(a, c, x):
    if c > a:
        s_inf = math.log(a / (c - a))
        s = np.where(x > 0, np.minimum(np.log(a / np.where(x > 0, x, 1.0)), s_inf), s_inf)
    else:
        s = np.log(a / x)
    s = np.array(s, dtype=float)
    for _ in range(100):
        es = np.exp(s)
        p = es / (1.0 + es)
        grad = a - c * p - x * es
        curv = c * p * (1.0 - p) + x * es
        step = np.clip(grad / curv, -2.0, 2.0)
        s = s + step
        if np.all(np.abs(step) <= 1e-12 * (1.0 + np.abs(s))):
            break
    es = np.exp(s)
    p = es / (1.0 + es)
    # scale capped at 1: beyond that the double-exponential factor narrows the
    # analyticity strip of the mapped integrand
    scale = np.minimum(1.0 / np.sqrt(c * p * (1.0 - p) + x * es), 1.0)
    return s, scale


def _extent(a, c, x, s, scale, peak, sign):
    t = 2.0
    while np.max(_log_integrand(a, c, x, s + scale * math.sinh(sign * t)) - peak) > -_TAIL:
        t += 0.5
        if t > _MAX_EXTENT:
            warnings.warn(
                f"U({a:g}, .) quadrature tail not resolved; result may be truncated",
                RuntimeWarning,
                stacklevel=4,
            )
            break
    return t


def _trapezoid(a, c, x, s, scale, peak, tau, h):
    arg = s[:, None] + scale[:, None] * np.sinh(tau)
    vals = np.exp(_log_integrand(a, c, x[:, None], arg) - peak[:, None])
    return h * (vals @ np.cosh(tau))


def _log_u_integral(a, b, x, config):
    """ln of the U integral (without the 1/Gamma(a) factor) for x > 0."""
    c = 1.0 - b + a
    s, scale = _mode_and_scale(a, c, x)
    peak = _log_integrand(a, c, x, s)
    k_lo = math.ceil(_extent(a, c, x, s, scale, peak, -1.0) / _H0)
    k_hi = math.ceil(_extent(a, c, x, s, scale, peak, 1.0) / _H0)
    tau = _H0 * np.arange(-k_lo, k_hi + 1)
    total = _trapezoid(a, c, x, s, scale, peak, tau, _H0)
    n_nodes = tau.size
    todo = np.arange(x.size)
    # a point is accepted after two consecutive agreeing levels; single
    # agreements can occur on an error plateau when a far cutoff is coarsely
    # sampled by the stretched map
    streak = np.zeros(x.size, dtype=int)
    h = _H0
    while todo.size:
        h *= 0.5
        tau = np.arange(-k_lo * _H0 + h, k_hi * _H0, 2.0 * h)
        n_nodes += tau.size
        if n_nodes > config.max_quad_nodes:
            warnings.warn(
                f"U({a:g}, {b:g}, x) quadrature hit max_quad_nodes at {todo.size} points",
                RuntimeWarning,
                stacklevel=3,
            )
            break
        fresh = 0.5 * total[todo] + _trapezoid(a, c, x[todo], s[todo], scale[todo], peak[todo], tau, h)
        agree = np.abs(fresh - total[todo]) <= config.rel_tol * fresh
        streak[todo] = np.where(agree, streak[todo] + 1, 0)
        total[todo] = fresh
        todo = todo[streak[todo] < 2]
    return peak + np.log(scale * total)


def _check_u_args(a, b, x):
    if not (np.isfinite(a) and np.isfinite(b)):
        raise DomainError("U(a, b, x) requires finite a and b")
    if a <= 0:
        raise DomainError(f"U(a, b, x) requires a > 0 (got a={a})")
    x_arr = _as_float_array(x, "x")
    if np.any(x_arr < 0):
        raise DomainError("U(a, b, x) requires x >= 0")
    if b >= 1 and np.any(x_arr == 0):
        raise DomainError("U(a, b, 0) is finite only for b < 1")
    return x_arr


def log_tricomi_u(a, b, x, config: EvalConfig | None = None):
    """``ln U(a, b, x)`` by direct quadrature of the integral representation.

    ``a`` and ``b`` are scalars; ``x`` may be an array.  At ``x = 0`` the
    closed form ``Gamma(1-b) / Gamma(a-b+1)`` is returned (``b < 1``).
    """
    config = config or DEFAULT_CONFIG
    a = float(a)
    b = float(b)
    x_arr = _check_u_args(a, b, x)
    flat = x_arr.ravel()
    out = np.empty(flat.shape)
    zero = flat == 0
    if np.any(zero):
        out[zero] = sc.gammaln(1.0 - b) - sc.gammaln(a - b + 1.0)
    pos = ~zero
    if np.any(pos):
        out[pos] = _log_u_integral(a, b, flat[pos], config) - sc.gammaln(a)
    return _maybe_scalar(out.reshape(x_arr.shape), x)


def tricomi_u(a, b, x, config: EvalConfig | None = None):
    """Tricomi confluent hypergeometric function ``U(a, b, x)`` for ``a > 0``."""
    return np.exp(log_tricomi_u(a, b, x, config))


class _LogChebyshevTable:
    """Piecewise Chebyshev interpolant of ``y -> f(e^y)`` on panels of width 1.

    Each panel interpolates at first-kind Chebyshev nodes.  Coefficients are
    stored one degree per row so evaluation is a contiguous gather plus
    Clenshaw's recurrence.  Subclasses provide ``_node_values(x)``.
    """

    panel_width = 1.0
    degree = 16

    def _build(self, x_min, x_max):
        if not (0 < x_min <= x_max and math.isfinite(x_max)):
            raise DomainError("table range must satisfy 0 < x_min <= x_max < inf")
        n = self.degree + 1
        nodes = np.cos(np.pi * (np.arange(n) + 0.5) / n)
        self.y_lo = math.log(x_min)
        n_panels = max(1, math.ceil((math.log(x_max) - self.y_lo) / self.panel_width))
        self.n_panels = n_panels
        centres = self.y_lo + self.panel_width * (np.arange(n_panels) + 0.5)
        y_nodes = centres[:, None] + 0.5 * self.panel_width * nodes[None, :]
        vals = self._node_values(np.exp(y_nodes))
        # discrete Chebyshev transform on first-kind nodes
        basis = np.cos(np.pi * np.outer(np.arange(n), np.arange(n) + 0.5) / n)
        coef = (2.0 / n) * basis @ vals.T
        coef[0] *= 0.5
        self._coef = np.ascontiguousarray(coef)

    def _interp(self, y):
        s = (y - self.y_lo) / self.panel_width
        idx = np.clip(np.floor(s).astype(np.intp), 0, self.n_panels - 1)
        t2 = 2.0 * (2.0 * (s - idx) - 1.0)
        coef = self._coef
        b1 = coef[-1][idx]
        b2 = np.zeros_like(b1)
        for k in range(coef.shape[0] - 2, 0, -1):
            b1, b2 = t2 * b1 - b2 + coef[k][idx], b1
        return 0.5 * t2 * b1 - b2 + coef[0][idx]


class LogTricomiTable(_LogChebyshevTable):
    """Piecewise Chebyshev interpolant of ``y -> ln U(a, b, e^y)``.

    ``ln U(a, b, e^y)`` is analytic in the strip ``|Im y| < pi``, so unit-width
    panels of degree 16 interpolate it to near machine precision.
    Node values come from :func:`log_tricomi_u`.

    Parameters
    ----------
    a, b : float
        Fixed parameters of ``U``.
    x_min, x_max : float
        Positive range the table must cover.
    """

    def __init__(self, a, b, x_min, x_max, config: EvalConfig | None = None):
        self.a, self.b = float(a), float(b)
        self._config = config
        self._build(x_min, x_max)

    def _node_values(self, x):
        return log_tricomi_u(self.a, self.b, x, self._config)

    def __call__(self, x):
        return self._interp(np.log(np.asarray(x, dtype=float)))


class LogBesselTable(_LogChebyshevTable):
    """Piecewise Chebyshev interpolant of ``ln K_nu(x)`` for fixed ``nu``.

    The tabulated function is ``ln(e^x K_nu(x))``, which is analytic in
    ``|Im ln x| < pi/2`` and grows only logarithmically; ``x`` is subtracted
    after interpolation.
    """

    def __init__(self, nu, x_min, x_max):
        self.nu = abs(float(nu))
        self._build(x_min, x_max)

    def _node_values(self, x):
        return log_bessel_k(self.nu, x) + x

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self._interp(np.log(x)) - x
