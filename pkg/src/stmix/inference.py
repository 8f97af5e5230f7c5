"""Maximum-likelihood fitting by Nelder-Mead on transformed parameters, and
AIC/BIC model comparison."""

from __future__ import annotations

import enum
import hashlib
import math
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np
from scipy.optimize import minimize

from .exceptions import ComparisonError, ConditioningError, InitializationError, InputError, InvalidParameterError
from .gp import MeanMode, SpaceTimeDataset, exact_loglik
from .kernels import CovarianceModel
from .parameterization import (
    ANGLES,
    SIGNED,
    canonicalize,
    default_bounds,
    default_init,
    model_from_params,
    param_names,
    params_from_model,
    wrap_angle,
)
from .vecchia import VecchiaPlan, default_time_scale, vecchia_loglik

__all__ = [
    "Transform",
    "ParamTransform",
    "Exact",
    "Vecchia",
    "OptConfig",
    "FitResult",
    "ComparisonTable",
    "fit",
    "compare",
    "information_criteria",
    "make_objective",
]

_BOUND_TOL = 1e-6


class Transform(str, enum.Enum):
    LOG_POSITIVE = "log"
    ANGLE_WRAP = "angle"
    IDENTITY = "identity"


_EDGE = 1e-12


def _logit(p):
    # a start exactly on a bound maps just inside it
    p = min(max(p, _EDGE), 1.0 - _EDGE)
    return math.log(p) - math.log1p(-p)


def _log_gap(g, scale):
    return math.log(max(g, _EDGE * max(1.0, abs(scale))))


def _expit(z):
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


@dataclass(frozen=True)
class ParamTransform:
    """Per-parameter bijection between the constrained box and the real line.

    ``LOG_POSITIVE`` uses ``ln x``, or a logit of ``ln x`` between finite
    positive bounds; ``IDENTITY`` is the identity, or a scaled logit between
    finite bounds; ``ANGLE_WRAP`` is the identity followed by a periodic wrap
    into ``(-pi, pi]``.
    """

    names: tuple
    kinds: tuple
    bounds: tuple

    def __post_init__(self):
        if not (len(self.names) == len(self.kinds) == len(self.bounds)):
            raise InputError("names, kinds and bounds must have equal length")
        norm = []
        for name, kind, (lo, hi) in zip(self.names, self.kinds, self.bounds):
            kind = Transform(kind)
            lo = None if lo is None or lo == -math.inf else float(lo)
            hi = None if hi is None or hi == math.inf else float(hi)
            if kind is Transform.LOG_POSITIVE and lo is not None and lo < 0:
                raise InputError(f"lower bound of positive parameter {name} must be >= 0")
            if lo is not None and hi is not None and not lo < hi:
                raise InputError(f"empty bounds for {name}: ({lo}, {hi})")
            if kind is Transform.ANGLE_WRAP and (lo is not None or hi is not None):
                raise InputError(f"angle parameter {name} cannot be bounded")
            norm.append((kind, (lo, hi)))
        object.__setattr__(self, "kinds", tuple(k for k, _ in norm))
        object.__setattr__(self, "bounds", tuple(b for _, b in norm))
        object.__setattr__(self, "names", tuple(self.names))

    @classmethod
    def for_names(cls, names, bounds=None):
        bounds = bounds or {}
        kinds = []
        for n in names:
            if n in ANGLES:
                kinds.append(Transform.ANGLE_WRAP)
            elif n in SIGNED:
                kinds.append(Transform.IDENTITY)
            else:
                kinds.append(Transform.LOG_POSITIVE)
        return cls(tuple(names), tuple(kinds), tuple(bounds.get(n, (None, None)) for n in names))

    def _forward(self, kind, lo, hi, x):
        if kind is Transform.ANGLE_WRAP:
            return wrap_angle(x)
        if kind is Transform.LOG_POSITIVE:
            if not x > 0:
                raise InvalidParameterError(f"positive parameter has value {x!r}")
            if lo is not None and hi is not None and lo > 0:
                return _logit((math.log(x) - math.log(lo)) / (math.log(hi) - math.log(lo)))
            if hi is not None:
                return _logit(x / hi) if (lo is None or lo == 0) else _logit((x - lo) / (hi - lo))
            if lo is not None and lo > 0:
                return _log_gap(x - lo, lo)
            return math.log(x)
        if lo is not None and hi is not None:
            return _logit((x - lo) / (hi - lo))
        if lo is not None:
            return _log_gap(x - lo, lo)
        if hi is not None:
            return _log_gap(hi - x, hi)
        return x

    def _inverse(self, kind, lo, hi, z):
        if kind is Transform.ANGLE_WRAP:
            return wrap_angle(z)
        if kind is Transform.LOG_POSITIVE:
            if lo is not None and hi is not None and lo > 0:
                return math.exp(math.log(lo) + _expit(z) * (math.log(hi) - math.log(lo)))
            if hi is not None:
                return hi * _expit(z) if (lo is None or lo == 0) else lo + (hi - lo) * _expit(z)
            if lo is not None and lo > 0:
                return lo + math.exp(z)
            return math.exp(z)
        if lo is not None and hi is not None:
            return lo + (hi - lo) * _expit(z)
        if lo is not None:
            return lo + math.exp(z)
        if hi is not None:
            return hi - math.exp(z)
        return z

    def to_unconstrained(self, values):
        """Constrained values (mapping or sequence in ``names`` order) -> array."""
        if isinstance(values, dict) or hasattr(values, "keys"):
            values = [values[n] for n in self.names]
        out = []
        for name, kind, (lo, hi), x in zip(self.names, self.kinds, self.bounds, values):
            x = float(x)
            if (lo is not None and x < lo) or (hi is not None and x > hi):
                raise InvalidParameterError(f"{name} = {x!r} lies outside its bounds ({lo}, {hi})")
            out.append(self._forward(kind, lo, hi, x))
        return np.array(out, dtype=float)

    def to_constrained(self, z):
        return {
            name: self._inverse(kind, lo, hi, float(zi))
            for name, kind, (lo, hi), zi in zip(self.names, self.kinds, self.bounds, z)
        }

    def at_bound(self, values, tol=_BOUND_TOL):
        """Names whose value lies within ``tol`` (relative to the bound scale) of a declared bound."""
        hits = []
        for name, (lo, hi) in zip(self.names, self.bounds):
            x = values[name]
            for b in (lo, hi):
                if b is not None and abs(x - b) <= tol * max(1.0, abs(b)):
                    hits.append(name)
                    break
        return tuple(hits)


@dataclass(frozen=True)
class Exact:
    """Dense exact likelihood."""

    def describe(self):
        return "exact"


@dataclass(frozen=True)
class Vecchia:
    """Vecchia likelihood with ``m`` neighbors; ``time_scale=None`` picks the default."""

    m: int = 30
    time_scale: float | None = None

    def __post_init__(self):
        if int(self.m) < 0:
            raise InputError("Vecchia m must be >= 0")
        if self.time_scale is not None and not float(self.time_scale) > 0:
            raise InputError("time_scale must be > 0")

    def describe(self):
        return f"vecchia(m={self.m}, time_scale={self.time_scale!r})"


@dataclass(frozen=True)
class OptConfig:
    """Nelder-Mead settings.

    Parameters
    ----------
    max_evals : int
        Objective-evaluation cap per start.
    fatol, xatol : float
        Convergence thresholds on objective spread and simplex diameter.
    n_starts : int
        Number of starts; start 0 is the given initial point, the others are
        jittered on the unconstrained scale.
    jitter : float
        Standard deviation of the start jitter (unconstrained scale).
    seed : int
        Seed of the jitter stream.
    step_fraction, step_floor : float
        Initial simplex edge ``max(step_fraction * |z_j|, step_floor)``.
    record_trace : bool
    """

    max_evals: int = 5000
    fatol: float = 1e-6
    xatol: float = 1e-6
    n_starts: int = 3
    jitter: float = 0.5
    seed: int = 0
    step_fraction: float = 0.1
    step_floor: float = 0.1
    record_trace: bool = True

    def __post_init__(self):
        if int(self.max_evals) < 1 or int(self.n_starts) < 1:
            raise InputError("max_evals and n_starts must be >= 1")
        if not (self.fatol > 0 and self.xatol > 0):
            raise InputError("fatol and xatol must be > 0")


def information_criteria(loglik, k, n):
    """``(aic, bic) = (2k - 2 LL, k ln n - 2 LL)``."""
    return 2.0 * k - 2.0 * loglik, k * math.log(n) - 2.0 * loglik


@dataclass(frozen=True, eq=False)
class FitResult:
    """Outcome of :func:`fit`; ``params`` are on the constrained scale."""

    family: str
    params: MappingProxyType
    model: CovarianceModel
    loglik: float
    aic: float
    bic: float
    n_obs: int
    k_params: int
    n_evals: int
    converged: bool
    mean_hat: float
    plan_config: object
    free: tuple
    at_bound: tuple = ()
    trace: tuple | None = None
    start_logliks: tuple = ()
    data_fingerprint: str = field(default="", repr=False)

    @property
    def params_hat(self):
        return dict(self.params)


def _fingerprint(data):
    return hashlib.sha256(data._key).hexdigest()


def _resolve_plan(data, plan_config):
    if isinstance(plan_config, Exact):
        return plan_config, None
    if isinstance(plan_config, Vecchia):
        ts = default_time_scale(data) if plan_config.time_scale is None else float(plan_config.time_scale)
        resolved = Vecchia(int(plan_config.m), ts)
        return resolved, VecchiaPlan.build(data, resolved.m, ts)
    raise InputError("plan_config must be Exact() or Vecchia(m, time_scale)")


def make_objective(data, plan_config=Exact(), mean_mode="profiled"):
    """Return ``loglik(model) -> (loglik, mean_hat)`` for a resolved plan."""
    mean_mode = MeanMode.coerce(mean_mode)
    _, plan = _resolve_plan(data, plan_config)
    if plan is None:
        return lambda model: exact_loglik(model, data, mean_mode)
    return lambda model: vecchia_loglik(model, data, plan, mean_mode)


def fit(
    data: SpaceTimeDataset,
    family,
    init=None,
    plan_config=Exact(),
    opt_config: OptConfig | None = None,
    fixed=(),
    bounds=None,
    mean_mode=None,
):
    """Maximize the selected log-likelihood over the free parameters.

    Parameters
    ----------
    data : SpaceTimeDataset
    family : str
        One of ``lgauss, lmatern, lch, lgh, glmatern, glch``.
    init : dict or CovarianceModel, optional
        Starting values; missing entries come from :func:`default_init`.
    plan_config : Exact or Vecchia
    opt_config : OptConfig, optional
    fixed : iterable of str
        Parameters held at their initial value.  Pinning ``lambda0 = 0``
        also pins ``theta0``, which is then unidentified.
    bounds : dict, optional
        ``name -> (lo, hi)`` on the constrained scale, merged over
        :func:`default_bounds`.
    mean_mode : {"profiled", "zero"}, optional
        Defaults to ``"profiled"`` when ``data.constant_mean`` else ``"zero"``.

    Returns
    -------
    FitResult
    """
    opt = opt_config or OptConfig()
    names = param_names(family, data.d)
    if mean_mode is None:
        mean_mode = "profiled" if data.constant_mean else "zero"
    mean_mode = MeanMode.coerce(mean_mode)
    resolved, plan = _resolve_plan(data, plan_config)
    ts = resolved.time_scale if isinstance(resolved, Vecchia) else default_time_scale(data)
    start = default_init(family, data, ts)
    if isinstance(init, CovarianceModel):
        if init.name != family:
            raise InputError(f"init model is {init.name}, not {family}")
        start.update(params_from_model(init))
    elif init is not None:
        unknown = sorted(set(init) - set(names))
        if unknown:
            raise InputError(f"unknown parameters for {family}: {', '.join(unknown)}")
        start.update({k: float(v) for k, v in init.items()})
    fixed = set(fixed)
    unknown = sorted(fixed - set(names))
    if unknown:
        raise InputError(f"cannot fix unknown parameters: {', '.join(unknown)}")
    if "lambda0" in fixed and start["lambda0"] == 0.0 and "theta0" in names:
        fixed.add("theta0")
    box = default_bounds(family, data.d)
    box.update(bounds or {})
    free = tuple(n for n in names if n not in fixed)
    transform = ParamTransform.for_names(free, box)

    def evaluate(params):
        model = model_from_params(family, params, data.d)
        if plan is None:
            return exact_loglik(model, data, mean_mode)
        return vecchia_loglik(model, data, plan, mean_mode)

    def full(z):
        params = dict(start)
        params.update(transform.to_constrained(z))
        return params

    try:
        ll0, mean0 = evaluate(start)
    except (ConditioningError, InvalidParameterError, FloatingPointError) as exc:
        raise InitializationError(f"log-likelihood cannot be evaluated at the initial point: {exc}") from exc
    if not math.isfinite(ll0):
        raise InitializationError(f"log-likelihood is not finite at the initial point ({ll0!r})")

    n = data.n
    if not free:
        aic, bic = information_criteria(ll0, 0, n)
        model = model_from_params(family, start, data.d)
        return FitResult(
            family, MappingProxyType(canonicalize(start)), model, ll0, aic, bic, n, 0, 1, True,
            mean0, resolved, free, (), ((1, ll0),) if opt.record_trace else None, (ll0,),
            _fingerprint(data),
        )

    z0 = transform.to_unconstrained(start)
    rng = np.random.Generator(np.random.Philox(int(opt.seed)))
    starts = [z0]
    for _ in range(1, int(opt.n_starts)):
        for _attempt in range(20):
            cand = z0 + opt.jitter * rng.standard_normal(z0.size)
            if math.isfinite(_safe_loglik(evaluate, full(cand))):
                break
        starts.append(cand)

    best = None
    total_evals = 0
    start_lls = []
    for zs in starts:
        run = _run_nelder_mead(lambda z: _safe_loglik(evaluate, full(z)), zs, opt)
        total_evals += run["nfev"]
        start_lls.append(run["loglik"])
        if best is None or run["loglik"] > best["loglik"]:
            best = run
    params = canonicalize(full(best["z"]))
    model = model_from_params(family, params, data.d)
    loglik, mean_hat = evaluate(params)
    k = len(free)
    aic, bic = information_criteria(loglik, k, n)
    return FitResult(
        family=family,
        params=MappingProxyType(params),
        model=model,
        loglik=loglik,
        aic=aic,
        bic=bic,
        n_obs=n,
        k_params=k,
        n_evals=total_evals,
        converged=best["converged"],
        mean_hat=mean_hat,
        plan_config=resolved,
        free=free,
        at_bound=transform.at_bound(params),
        trace=tuple(best["trace"]) if opt.record_trace else None,
        start_logliks=tuple(start_lls),
        data_fingerprint=_fingerprint(data),
    )


def _safe_loglik(evaluate, params):
    try:
        ll, _ = evaluate(params)
    except (ConditioningError, InvalidParameterError, FloatingPointError, OverflowError):
        return -math.inf
    return ll if math.isfinite(ll) else -math.inf


def _run_nelder_mead(loglik, z0, opt):
    trace = []
    best = [-math.inf]

    def objective(z):
        ll = loglik(z)
        if ll > best[0]:
            best[0] = ll
        trace.append((len(trace) + 1, best[0]))
        return -ll if math.isfinite(ll) else math.inf

    step = np.maximum(opt.step_fraction * np.abs(z0), opt.step_floor)
    simplex = np.vstack([z0, z0 + np.diag(step)])
    res = minimize(
        objective,
        z0,
        method="Nelder-Mead",
        options={
            "initial_simplex": simplex,
            "maxfev": int(opt.max_evals),
            "maxiter": 10 * int(opt.max_evals),
            "fatol": opt.fatol,
            "xatol": opt.xatol,
            "adaptive": False,
        },
    )
    return {
        "z": np.asarray(res.x, dtype=float),
        "loglik": -float(res.fun),
        "nfev": int(res.nfev),
        "converged": bool(res.status == 0),
        "trace": trace,
    }


@dataclass(frozen=True)
class ComparisonTable:
    """Rows ``(label, family, k_params, loglik, aic, bic)`` sorted by AIC."""

    rows: tuple

    def __len__(self):
        return len(self.rows)

    @property
    def labels(self):
        return [r[0] for r in self.rows]

    def to_text(self):
        head = f"{'model':<14}{'k':>4}{'loglik':>16}{'AIC':>16}{'BIC':>16}"
        lines = [head, "-" * len(head)]
        for label, _, k, ll, aic, bic in self.rows:
            lines.append(f"{label:<14}{k:>4}{ll:>16.4f}{aic:>16.4f}{bic:>16.4f}")
        return "\n".join(lines)


def compare(results, labels=None):
    """AIC-sorted comparison of fits on the same data and likelihood plan."""
    results = list(results)
    if not results:
        raise ComparisonError("nothing to compare")
    labels = list(labels) if labels is not None else [r.family for r in results]
    if len(labels) != len(results):
        raise ComparisonError("one label per result is required")
    ref = results[0]
    for r in results[1:]:
        if r.plan_config != ref.plan_config:
            raise ComparisonError(
                f"results use different likelihood plans: {ref.plan_config.describe()} vs {r.plan_config.describe()}"
            )
        if r.data_fingerprint != ref.data_fingerprint or r.n_obs != ref.n_obs:
            raise ComparisonError("results were fitted to different data")
    rows = sorted(
        ((lab, r.family, r.k_params, r.loglik, r.aic, r.bic) for lab, r in zip(labels, results)),
        key=lambda row: (row[4], row[2]),
    )
    return ComparisonTable(tuple(rows))
