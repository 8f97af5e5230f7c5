"""Empirical space-time semivariogram differences for detecting asymmetry.

For stations ``s1, s2`` and temporal lag ``k`` the empirical semivariogram is

    g(s1, s2; k) = 1 / (2 N) * sum_t {z(s1, t + k) - z(s2, t)}^2

over the ``N`` times at which both terms are observed, and the asymmetry
statistic is ``delta(s1, s2; k) = g(s1, s2; k) - g(s2, s1; k)``.  Under a
fully symmetric covariance ``E delta = 0``; with a dominant flow the sign of
``delta`` follows ``K(-h, k) - K(h, k)`` where ``h = s1 - s2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InputError, InsufficientDataError

__all__ = [
    "StationGrid",
    "emp_semivariogram",
    "delta",
    "delta_bar",
    "delta_table",
    "delta_bar_table",
]


@dataclass(frozen=True, eq=False)
class StationGrid:
    """Station-by-time value matrix on a common integer time grid.

    Parameters
    ----------
    stations : array_like, shape (n_s, d)
        Station coordinates.
    time_index : array_like of int, shape (n_t,)
        Consecutive integers; column ``t`` of ``z`` is time ``time_index[t]``.
    z : array_like, shape (n_s, n_t)
        Values, with NaN marking missing observations.
    mask : array_like of bool, optional
        ``True`` where observed; combined with the NaN pattern of ``z``.
    station_ids : sequence of str, optional
    """

    stations: np.ndarray
    time_index: np.ndarray
    z: np.ndarray
    mask: np.ndarray | None = None
    station_ids: tuple | None = None

    def __post_init__(self):
        stations = np.asarray(self.stations, dtype=float)
        if stations.ndim == 1:
            stations = stations[:, None]
        time_index = np.asarray(self.time_index)
        z = np.array(self.z, dtype=float)
        n_s = stations.shape[0]
        if stations.ndim != 2 or not np.all(np.isfinite(stations)):
            raise InputError("stations must be a finite (n_s, d) array")
        if time_index.ndim != 1 or not np.issubdtype(time_index.dtype, np.integer):
            if time_index.ndim == 1 and np.all(time_index == np.round(time_index)):
                time_index = time_index.astype(np.int64)
            else:
                raise InputError("time_index must be a 1-d array of integers")
        n_t = time_index.size
        if n_s < 2 or n_t < 2:
            raise InputError(f"a station grid needs >= 2 stations and >= 2 times (got {n_s} x {n_t})")
        if np.any(np.diff(time_index) != 1):
            raise InputError("time_index must be consecutive integers")
        if z.shape != (n_s, n_t):
            raise InputError(f"z must have shape ({n_s}, {n_t}); got {z.shape}")
        observed = np.isfinite(z)
        if self.mask is not None:
            mask = np.asarray(self.mask, dtype=bool)
            if mask.shape != z.shape:
                raise InputError("mask must have the shape of z")
            observed &= mask
        if np.any(np.isinf(z[observed])):
            raise InputError("observed values must be finite")
        empty = np.flatnonzero(~observed.any(axis=1))
        if empty.size:
            raise InputError(f"stations without any observation: {empty.tolist()}")
        z[~observed] = 0.0
        ids = self.station_ids
        if ids is not None:
            ids = tuple(str(s) for s in ids)
            if len(ids) != n_s:
                raise InputError("station_ids must have one label per station")
        for arr in (stations, time_index, z, observed):
            arr.setflags(write=False)
        object.__setattr__(self, "stations", stations)
        object.__setattr__(self, "time_index", time_index)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "mask", observed)
        object.__setattr__(self, "station_ids", ids)

    @property
    def n_stations(self):
        return self.stations.shape[0]

    @property
    def n_times(self):
        return self.time_index.size

    def label(self, i):
        return self.station_ids[i] if self.station_ids is not None else str(i)

    def drop(self, i):
        """Grid without station ``i``."""
        keep = np.arange(self.n_stations) != i
        z = np.where(self.mask, self.z, np.nan)[keep]
        ids = None if self.station_ids is None else tuple(s for s, k in zip(self.station_ids, keep) if k)
        return StationGrid(self.stations[keep], self.time_index, z, None, ids)


def _check_station(grid, i):
    if isinstance(i, (bool, np.bool_)) or not isinstance(i, (int, np.integer)) or not 0 <= i < grid.n_stations:
        raise InputError(f"station index {i!r} out of range 0..{grid.n_stations - 1}")
    return int(i)


def _check_lag(grid, k):
    if isinstance(k, (bool, np.bool_)) or not isinstance(k, (int, np.integer)) or not 0 <= k < grid.n_times:
        raise InputError(f"lag must be an integer in [0, {grid.n_times - 1}] (got {k!r})")
    return int(k)


def _semivariogram_row(grid, i, k):
    """``g(i, j; k)`` for every ``j``; NaN where no pair is jointly observed."""
    T = grid.n_times - k
    lead, lead_ok = grid.z[i, k:], grid.mask[i, k:]
    lag, lag_ok = grid.z[:, :T], grid.mask[:, :T]
    ok = lead_ok[None, :] & lag_ok
    diff = np.where(ok, lead[None, :] - lag, 0.0)
    count = ok.sum(axis=1)
    total = np.sum(diff * diff, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(count > 0, total / (2.0 * count), np.nan)


def emp_semivariogram(grid: StationGrid, i, j, k):
    """``g(s_i, s_j; k)``, averaged over jointly observed time pairs.

    Raises
    ------
    InsufficientDataError
        If no time ``t`` has both ``z(s_i, t + k)`` and ``z(s_j, t)`` observed.
    """
    i, j, k = _check_station(grid, i), _check_station(grid, j), _check_lag(grid, k)
    g = _semivariogram_row(grid, i, k)[j]
    if np.isnan(g):
        raise InsufficientDataError(f"no jointly observed pairs for stations ({i}, {j}) at lag {k}")
    return float(g)


def _delta_matrix(grid, k):
    G = np.stack([_semivariogram_row(grid, i, k) for i in range(grid.n_stations)])
    return G - G.T


def delta(grid: StationGrid, i, j, k):
    """``g(s_i, s_j; k) - g(s_j, s_i; k)``; exactly antisymmetric in ``(i, j)``."""
    return emp_semivariogram(grid, i, j, k) - emp_semivariogram(grid, j, i, k)


def delta_bar(grid: StationGrid, j, k):
    """Station average ``(1/n_s) sum_i delta(s_i, s_j; k)``, including ``i = j``."""
    j, k = _check_station(grid, j), _check_lag(grid, k)
    col = _delta_matrix(grid, k)[:, j]
    bad = np.flatnonzero(np.isnan(col))
    if bad.size:
        raise InsufficientDataError(f"no jointly observed pairs for stations {bad.tolist()} with station {j} at lag {k}")
    return float(np.mean(col))


def delta_table(grid: StationGrid, lags):
    """All ordered station pairs ``i != j`` for each lag.

    Returns
    -------
    list of tuple
        ``(i, j, k, dx, delta)`` with ``dx = s_i - s_j`` as an array.
    """
    rows = []
    for k in lags:
        k = _check_lag(grid, k)
        D = _delta_matrix(grid, k)
        for i in range(grid.n_stations):
            for j in range(grid.n_stations):
                if i == j:
                    continue
                if np.isnan(D[i, j]):
                    raise InsufficientDataError(f"no jointly observed pairs for stations ({i}, {j}) at lag {k}")
                rows.append((i, j, k, grid.stations[i] - grid.stations[j], float(D[i, j])))
    return rows


def delta_bar_table(grid: StationGrid, lags, stations=None):
    """``(j, k, delta_bar)`` rows for the requested reference stations (default: all)."""
    stations = range(grid.n_stations) if stations is None else stations
    rows = []
    for k in lags:
        k = _check_lag(grid, k)
        D = _delta_matrix(grid, k)
        for j in stations:
            j = _check_station(grid, j)
            col = D[:, j]
            if np.any(np.isnan(col)):
                raise InsufficientDataError(f"station {j} lacks jointly observed pairs at lag {k}")
            rows.append((j, k, float(np.mean(col))))
    return rows
