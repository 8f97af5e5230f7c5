"""Ungrouped Vecchia approximation of the Gaussian log-likelihood.

Points are put in maximin order under the metric
``|ds|^2 + (time_scale * dt)^2`` and each point is conditioned on its ``m``
nearest predecessors.  Conditionals are computed in batches of equal
conditioning-set size, and the kernel is evaluated once per distinct point
pair appearing in any local covariance.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConditioningError, InputError
from .gp import JITTER_LEVELS, MeanMode, SpaceTimeDataset, cholesky_jitter
from .kernels import CovarianceModel

__all__ = [
    "VecchiaPlan",
    "default_time_scale",
    "maximin_order",
    "nearest_neighbors",
    "vecchia_loglik",
]

_LOG_2PI = math.log(2.0 * math.pi)


def default_time_scale(data: SpaceTimeDataset):
    """Spatial coordinate range divided by the time range (1 when degenerate)."""
    space = float(np.max(np.ptp(data.coords, axis=0)))
    time = float(np.ptp(data.times))
    if space > 0 and time > 0:
        return space / time
    return 1.0


def _check_time_scale(time_scale):
    time_scale = float(time_scale)
    if not (math.isfinite(time_scale) and time_scale > 0):
        raise InputError(f"time_scale must be finite and > 0 (got {time_scale!r})")
    return time_scale


def _scaled_points(data, time_scale):
    return np.column_stack([data.coords, time_scale * data.times])


def maximin_order(data: SpaceTimeDataset, time_scale):
    """Greedy maximin permutation of the observations.

    The first point is the one nearest the centroid; each later point
    maximizes its minimum distance to the points already ordered.  Ties go to
    the smallest original index.
    """
    pts = _scaled_points(data, _check_time_scale(time_scale))
    n = pts.shape[0]
    diff = pts - pts.mean(axis=0)
    first = int(np.argmin(np.einsum("ij,ij->i", diff, diff)))
    order = np.empty(n, dtype=np.intp)
    order[0] = first
    diff = pts - pts[first]
    mind = np.einsum("ij,ij->i", diff, diff)
    mind[first] = -np.inf
    for i in range(1, n):
        nxt = int(np.argmax(mind))
        order[i] = nxt
        diff = pts - pts[nxt]
        np.minimum(mind, np.einsum("ij,ij->i", diff, diff), out=mind)
        mind[order[: i + 1]] = -np.inf
    return order


def nearest_neighbors(data: SpaceTimeDataset, order, m, time_scale):
    """For each ordered position ``i`` the ``min(i, m)`` nearest earlier points.

    Returns a tuple of integer arrays of original indices, nearest first;
    distance ties go to the smaller original index.
    """
    m = int(m)
    if m < 0:
        raise InputError("m must be >= 0")
    pts = _scaled_points(data, _check_time_scale(time_scale))
    order = np.asarray(order, dtype=np.intp)
    out = [np.empty(0, dtype=np.intp)]
    for i in range(1, order.size):
        prev = order[:i]
        diff = pts[prev] - pts[order[i]]
        dist = np.einsum("ij,ij->i", diff, diff)
        k = min(i, m)
        if k == i:
            pick = np.lexsort((prev, dist))
        else:
            # partial selection first, then an exact ordered tie-break
            cut = np.partition(dist, k - 1)[k - 1]
            cand = np.flatnonzero(dist <= cut)
            pick = cand[np.lexsort((prev[cand], dist[cand]))][:k]
        out.append(prev[pick].astype(np.intp))
    return tuple(out)


# ordered positions batched per linear-algebra call
_CHUNK = 2048


@dataclass(frozen=True, eq=False)
class _Group:
    positions: np.ndarray  # ordered positions in this batch
    local: np.ndarray  # (B, k+1) original indices, -1 for padding, the point last
    pad: np.ndarray  # (B,) number of leading padding slots per row
    pair_index: np.ndarray  # (B, npairs) index into the pair list; the last slot is 0
    iu: tuple  # upper-triangle local indices


@dataclass(frozen=True, eq=False)
class _Workspace:
    groups: tuple
    lag_h: np.ndarray
    lag_u: np.ndarray
    values: np.ndarray


@dataclass(frozen=True, eq=False)
class VecchiaPlan:
    """Maximin order plus nearest-predecessor conditioning sets."""

    order: np.ndarray
    neighbors: tuple
    m: int
    time_scale: float
    _cache: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @classmethod
    def build(cls, data: SpaceTimeDataset, m, time_scale=None):
        ts = default_time_scale(data) if time_scale is None else _check_time_scale(time_scale)
        order = maximin_order(data, ts)
        neighbors = nearest_neighbors(data, order, m, ts)
        order.setflags(write=False)
        for nb in neighbors:
            nb.setflags(write=False)
        return cls(order, neighbors, int(m), ts)

    @property
    def n(self):
        return self.order.size

    def same_as(self, other):
        return (
            isinstance(other, VecchiaPlan)
            and self.m == other.m
            and self.time_scale == other.time_scale
            and np.array_equal(self.order, other.order)
        )

    def _workspace(self, data: SpaceTimeDataset):
        key = data._key
        with self._lock:
            ws = self._cache.get(key)
            if ws is None:
                ws = _build_workspace(self, data)
                self._cache.clear()
                self._cache[key] = ws
        return ws


def _build_workspace(plan, data):
    # Short conditioning sets are padded in front with independent unit-variance
    # dummies; the local factor is then block diagonal and the last row, which
    # carries the conditional, is unchanged.
    n = data.n
    if plan.n != n:
        raise InputError(f"plan was built for {plan.n} points, data has {n}")
    sizes = np.array([nb.size for nb in plan.neighbors])
    groups = []
    codes = []
    for start in range(0, n, _CHUNK):
        positions = np.arange(start, min(start + _CHUNK, n))
        k = int(sizes[positions].max())
        local = np.full((positions.size, k + 1), -1, dtype=np.intp)
        for row, pos in enumerate(positions):
            nb = plan.neighbors[pos]
            local[row, k - nb.size : k] = nb
            local[row, k] = plan.order[pos]
        iu = np.triu_indices(k + 1, k=1)
        a, b = local[:, iu[0]], local[:, iu[1]]
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        code = lo * n + hi
        code[lo < 0] = -1
        codes.append(code.ravel())
        groups.append((positions, local, k - sizes[positions], iu))
    codes = np.concatenate(codes)
    real = codes >= 0
    uniq, inverse = np.unique(codes[real], return_inverse=True)
    index = np.full(codes.size, uniq.size, dtype=np.intp)
    index[real] = inverse
    lo, hi = np.divmod(uniq, n)
    out = []
    start = 0
    for positions, local, pad, iu in groups:
        size = positions.size * iu[0].size
        pair_index = index[start : start + size].reshape(positions.size, iu[0].size)
        start += size
        out.append(_Group(positions, local, pad, pair_index, iu))
    # K(h, u) = K(-h, -u), so the canonical (lo, hi) lag serves both entries
    return _Workspace(tuple(out), data.coords[lo] - data.coords[hi], data.times[lo] - data.times[hi], data.values)


def _local_factor(K, group):
    try:
        return np.linalg.cholesky(K)
    except np.linalg.LinAlgError:
        pass
    L = np.zeros_like(K)
    for row in range(K.shape[0]):
        p = int(group.pad[row])
        pos = int(group.positions[row])
        L[row, np.arange(p), np.arange(p)] = 1.0
        try:
            L[row, p:, p:], _ = cholesky_jitter(K[row, p:, p:], f"at ordered index {pos}")
        except ConditioningError as exc:
            raise ConditioningError(
                f"local covariance at ordered index {pos} is not positive definite "
                f"(jitter up to {JITTER_LEVELS[-1]:g} x mean diagonal tried)"
            ) from exc
    return L


def _forward_last(L, rhs):
    """Last row of ``L^{-1} rhs`` for a batch of lower-triangular ``L``."""
    k1 = L.shape[1]
    w = np.empty_like(rhs)
    w[:, 0] = rhs[:, 0] / L[:, 0, :1]
    for j in range(1, k1):
        acc = np.einsum("bi,bic->bc", L[:, j, :j], w[:, :j])
        w[:, j] = (rhs[:, j] - acc) / L[:, j, j : j + 1]
    return w[:, -1]


def vecchia_terms(model: CovarianceModel, data: SpaceTimeDataset, plan: VecchiaPlan):
    """Per-ordered-point standardized conditional terms.

    Returns arrays ``(log_v, a, c)`` with ``a = (y_i - b^T y_N) / sqrt(v)``
    and ``c = (1 - b^T 1) / sqrt(v)``.
    """
    if model.d != data.d:
        raise InputError(f"model dimension {model.d} does not match data dimension {data.d}")
    ws = plan._workspace(data)
    pair_vals = np.zeros(ws.lag_u.size + 1)
    if ws.lag_u.size:
        pair_vals[:-1] = model.cov(ws.lag_h, ws.lag_u)
    diag = model.sigma2 * (1.0 + model.tau2)
    n = data.n
    log_v = np.empty(n)
    a = np.empty(n)
    c = np.empty(n)
    for g in ws.groups:
        B, k1 = g.local.shape
        K = np.empty((B, k1, k1))
        vals = pair_vals[g.pair_index]
        K[:, g.iu[0], g.iu[1]] = vals
        K[:, g.iu[1], g.iu[0]] = vals
        dummy = g.local < 0
        idx = np.arange(k1)
        K[:, idx, idx] = np.where(dummy, 1.0, diag)
        L = _local_factor(K, g)
        rhs = np.empty((B, k1, 2))
        rhs[..., 0] = np.where(dummy, 0.0, ws.values[g.local])
        rhs[..., 1] = np.where(dummy, 0.0, 1.0)
        w = _forward_last(L, rhs)
        log_v[g.positions] = 2.0 * np.log(L[:, -1, -1])
        a[g.positions] = w[:, 0]
        c[g.positions] = w[:, 1]
    return log_v, a, c


def vecchia_loglik(model: CovarianceModel, data: SpaceTimeDataset, plan: VecchiaPlan, mean_mode="profiled"):
    """Vecchia log-likelihood and its self-consistent profiled mean.

    Returns
    -------
    loglik : float
    mean_hat : float
        ``sum(a c) / sum(c^2)`` over the standardized conditional terms, the
        maximizer of the Vecchia objective in the mean; 0 for ``"zero"``.
    """
    mean_mode = MeanMode.coerce(mean_mode)
    log_v, a, c = vecchia_terms(model, data, plan)
    mean_hat = 0.0
    if mean_mode is MeanMode.PROFILED:
        mean_hat = math.fsum(a * c) / math.fsum(c * c)
        a = a - mean_hat * c
    loglik = -0.5 * (data.n * _LOG_2PI + math.fsum(log_v) + math.fsum(a * a))
    return loglik, mean_hat
