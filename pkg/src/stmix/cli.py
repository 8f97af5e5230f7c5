"""Command-line front end.

Subcommands ``eval-grid``, ``simulate``, ``fit``, ``compare`` and
``diagnose`` read settings from an optional ``key = value`` config file and
from flags (flags win).  Every output file starts with ``#`` lines echoing
the effective configuration, defaults included.  Floats are written with 17
significant digits.

Exit codes: 0 success, 2 input or configuration error, 3 numerical
conditioning failure, 4 optimizer initialization failure.

The environment variable ``STMIX_NUM_THREADS`` caps BLAS/LAPACK threads.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from .diagnostics import StationGrid, delta_bar_table, delta_table
from .exceptions import (
    ComparisonError,
    ConditioningError,
    DomainError,
    InitializationError,
    InputError,
    InsufficientDataError,
    InvalidParameterError,
)
from .gp import SpaceTimeDataset, simulate
from .inference import Exact, FitResult, OptConfig, Vecchia, compare, fit, information_criteria
from .parameterization import FAMILY_LABELS, default_init, model_from_params, param_names
from .vecchia import default_time_scale

__all__ = ["main", "parse_config_text", "THREADS_ENV"]

THREADS_ENV = "STMIX_NUM_THREADS"

EXIT_OK, EXIT_INPUT, EXIT_CONDITIONING, EXIT_INIT = 0, 2, 3, 4


def fmt(x):
    """17-significant-digit rendering; integers and strings pass through."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class Key:
    name: str
    kind: str  # "float", "int", "str", "bool", "choice"
    default: object = None
    help: str = ""
    choices: tuple = ()


def _convert(key, raw):
    text = str(raw).strip()
    try:
        if key.kind == "float":
            value = float(text)
            if not math.isfinite(value):
                raise ValueError
            return value
        if key.kind == "int":
            return int(text)
        if key.kind == "bool":
            low = text.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError
    except ValueError:
        raise InputError(f"{key.name}: cannot read {text!r} as {key.kind}") from None
    if key.kind == "choice" and text not in key.choices:
        raise InputError(f"{key.name} must be one of {', '.join(key.choices)} (got {text!r})")
    return text


def parse_config_text(text, source="<config>"):
    """``key = value`` lines with ``#`` comments -> ordered dict of strings."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise InputError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in body.split("=", 1))
        if not key:
            raise InputError(f"{source}:{lineno}: empty key")
        if key in out:
            raise InputError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


_ALL_PARAMS = ("sigma2", "tau2", "rho", "nu", "phi", "alpha", "beta", "p", "a_exp",
               "lambda0", "theta0", "theta1", "lambda1", "lambda2")

# defaults for commands that evaluate a fully specified model
_MODEL_DEFAULTS = dict(
    sigma2=1.0, tau2=0.0, rho=1.0, nu=0.5, phi=1.0, alpha=1.0, beta=1.0, p=0.5, a_exp=3.0,
    lambda0=0.0, theta0=0.0, theta1=0.0, lambda1=0.1, lambda2=0.1,
)

_FAMILY = Key("family", "choice", "lmatern", "covariance family", tuple(FAMILY_LABELS))
_OUT = Key("out", "str", None, "output path")
_SEED = Key("seed", "int", 0, "64-bit seed")


def _param_keys(with_defaults):
    return [Key(n, "float", _MODEL_DEFAULTS[n] if with_defaults else None, f"model parameter {n}") for n in _ALL_PARAMS]


COMMANDS = {
    "eval-grid": [
        _FAMILY, *_param_keys(True), _OUT,
        Key("h_axis", "choice", "h1", "spatial axis that varies along the grid", ("h1", "h2")),
        Key("h_fixed", "float", 0.0, "value of the other spatial lag coordinate"),
        Key("h_min", "float", -2.0), Key("h_max", "float", 2.0), Key("h_steps", "int", 41),
        Key("u_min", "float", -2.0), Key("u_max", "float", 2.0), Key("u_steps", "int", 41),
    ],
    "simulate": [
        _FAMILY, *_param_keys(True), _OUT, _SEED,
        Key("points", "str", None, "CSV with header x,y,t; overrides the lattice"),
        Key("nx", "int", 5), Key("ny", "int", 5), Key("nt", "int", 4),
        Key("x_min", "float", 0.0), Key("x_max", "float", 1.0),
        Key("y_min", "float", 0.0), Key("y_max", "float", 1.0),
        Key("t_min", "float", 0.0), Key("t_max", "float", 3.0),
    ],
    "fit": [
        _FAMILY, *_param_keys(False), _OUT, _SEED,
        Key("input", "str", None, "CSV with header x,y,t,value[,station]"),
        Key("likelihood", "choice", "vecchia", "likelihood plan", ("vecchia", "exact")),
        Key("m", "int", 30, "Vecchia conditioning-set size"),
        Key("time_scale", "float", None, "space units per time unit (default: coordinate range / time range)"),
        Key("mean", "choice", "profiled", "constant-mean handling", ("profiled", "zero")),
        Key("fixed", "str", "", "comma-separated parameters held at their initial values"),
        Key("bounds", "str", "", "comma-separated name:lo:hi (empty side = open)"),
        Key("n_starts", "int", 3), Key("max_evals", "int", 5000),
    ],
    "compare": [
        _OUT,
        Key("results", "str", None, "comma-separated fit result files (key = value or JSON)"),
        Key("labels", "str", "", "comma-separated row labels (default: family)"),
    ],
    "diagnose": [
        _OUT,
        Key("input", "str", None, "CSV with header x,y,t,value,station; t holds integer time indices"),
        Key("lags", "str", "1,2,3", "comma-separated temporal lags"),
        Key("reference", "str", "", "comma-separated reference stations for delta_bar (default: all)"),
        Key("out_bar", "str", None, "delta_bar CSV path (default: <out stem>_bar.csv)"),
    ],
}

_REQUIRED = {"fit": ("input", "out"), "compare": ("results", "out"), "diagnose": ("input", "out"),
             "eval-grid": ("out",), "simulate": ("out",)}


@dataclass
class RunConfig:
    command: str
    values: dict
    explicit: set

    def __getitem__(self, name):
        return self.values[name]

    def echo(self, names=None):
        names = names if names is not None else list(self.values)
        lines = [f"# stmix {self.command}"]
        for n in names:
            v = self.values[n]
            if v is None:
                continue
            tag = "" if n in self.explicit else "  (default)"
            lines.append(f"# {n} = {fmt(v)}{tag}")
        return lines


def resolve_config(command, file_values, flag_values):
    keys = {k.name: k for k in COMMANDS[command]}
    unknown = sorted(set(file_values) - set(keys))
    if unknown:
        raise InputError(f"unknown config keys for {command}: {', '.join(unknown)}")
    merged = {**file_values, **{k: v for k, v in flag_values.items() if v is not None}}
    values = {}
    for name, key in keys.items():
        values[name] = _convert(key, merged[name]) if name in merged else key.default
    missing = [k for k in _REQUIRED[command] if values.get(k) is None]
    if missing:
        raise InputError(f"{command}: missing required keys: {', '.join(missing)}")
    return RunConfig(command, values, set(merged))


def _model_params(cfg, names, fill_defaults):
    mine = set(names)
    stray = sorted(n for n in _ALL_PARAMS if n in cfg.explicit and n not in mine)
    if stray:
        raise InputError(f"parameters {', '.join(stray)} do not apply to family {cfg['family']}")
    if fill_defaults:
        return {n: cfg[n] for n in names}
    return {n: cfg[n] for n in names if n in cfg.explicit}


# ---------------------------------------------------------------------------
# files


def _read_rows(path, required, optional=()):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise InputError(f"{path}: no header line")
    reader = csv.reader(lines)
    header = [h.strip() for h in next(reader)]
    missing = [c for c in required if c not in header]
    extra = [c for c in header if c not in required and c not in optional]
    if missing or extra or len(set(header)) != len(header):
        want = ",".join(list(required) + [f"[{c}]" for c in optional])
        raise InputError(f"{path}: header must be {want} (got {','.join(header)})")
    pos = {c: header.index(c) for c in header}
    rows = []
    for lineno, row in enumerate(reader, 2):
        if len(row) != len(header):
            raise InputError(f"{path}: data row {lineno} has {len(row)} fields, expected {len(header)}")
        rows.append(row)
    if not rows:
        raise InputError(f"{path}: no data rows")
    return pos, rows


def _float_column(path, pos, rows, name):
    out = np.empty(len(rows))
    for r, row in enumerate(rows):
        try:
            out[r] = float(row[pos[name]])
        except ValueError:
            raise InputError(f"{path}: column {name}, data row {r + 1}: not a number ({row[pos[name]]!r})") from None
    if not np.all(np.isfinite(out)):
        raise InputError(f"{path}: column {name} contains non-finite values")
    return out


def read_observations(path):
    pos, rows = _read_rows(path, ("x", "y", "t", "value"), ("station",))
    coords = np.column_stack([_float_column(path, pos, rows, "x"), _float_column(path, pos, rows, "y")])
    times = _float_column(path, pos, rows, "t")
    values = _float_column(path, pos, rows, "value")
    ids = [row[pos["station"]].strip() for row in rows] if "station" in pos else None
    return coords, times, values, ids


def read_points(path):
    pos, rows = _read_rows(path, ("x", "y", "t"))
    coords = np.column_stack([_float_column(path, pos, rows, "x"), _float_column(path, pos, rows, "y")])
    return coords, _float_column(path, pos, rows, "t")


def grid_observations(coords, times, values, ids):
    """Arrange station-labelled observations on a common integer time grid."""
    if ids is None:
        raise InputError("diagnostics need a station column")
    if np.any(times != np.round(times)):
        raise InputError("diagnostics need integer time indices in column t")
    labels = list(dict.fromkeys(ids))
    if len(labels) < 2:
        raise InputError(f"diagnostics need at least 2 stations (got {len(labels)})")
    index = {s: i for i, s in enumerate(labels)}
    t_int = times.astype(np.int64)
    t0 = int(t_int.min())
    n_t = int(t_int.max()) - t0 + 1
    z = np.full((len(labels), n_t), np.nan)
    where = np.full((len(labels), 2), np.nan)
    for c, t, v, s in zip(coords, t_int, values, ids):
        i = index[s]
        if np.isnan(where[i, 0]):
            where[i] = c
        elif not np.array_equal(where[i], c):
            raise InputError(f"station {s} appears at more than one location")
        if not np.isnan(z[i, t - t0]):
            raise InputError(f"station {s} has two values at time {t}")
        z[i, t - t0] = v
    return StationGrid(where, np.arange(t0, t0 + n_t), z, station_ids=labels)


def _write(path, text):
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror or exc}") from None


def _csv_text(header_lines, columns, rows):
    buf = io.StringIO()
    for line in header_lines:
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _int_list(cfg, name):
    try:
        return [int(s) for s in cfg[name].split(",") if s.strip()]
    except ValueError:
        raise InputError(f"{name} must be a comma-separated list of integers (got {cfg[name]!r})") from None


def _str_list(text):
    return [s.strip() for s in text.split(",") if s.strip()]


# ---------------------------------------------------------------------------
# commands


def cmd_eval_grid(cfg):
    family = cfg["family"]
    names = param_names(family)
    model = model_from_params(family, _model_params(cfg, names, True))
    for ax in ("h", "u"):
        if cfg[f"{ax}_steps"] < 1:
            raise InputError(f"{ax}_steps must be >= 1")
        if cfg[f"{ax}_steps"] > 1 and not cfg[f"{ax}_min"] < cfg[f"{ax}_max"]:
            raise InputError(f"{ax}_min must be < {ax}_max")
    hs = np.linspace(cfg["h_min"], cfg["h_max"], cfg["h_steps"])
    us = np.linspace(cfg["u_min"], cfg["u_max"], cfg["u_steps"])
    H, U = np.meshgrid(hs, us)
    H, U = H.ravel(), U.ravel()
    fixed = np.full(H.shape, cfg["h_fixed"])
    h1, h2 = (H, fixed) if cfg["h_axis"] == "h1" else (fixed, H)
    vals = model(np.column_stack([h1, h2]), U)
    echo = cfg.echo(["family", *names, "h_axis", "h_fixed", "h_min", "h_max", "h_steps", "u_min", "u_max", "u_steps"])
    _write(cfg["out"], _csv_text(echo, ["h1", "h2", "u", "value"], zip(h1, h2, U, vals)))
    return EXIT_OK


def _lattice(cfg):
    ax = []
    for name in ("x", "y", "t"):
        n = cfg[f"n{name}"]
        if n < 1:
            raise InputError(f"n{name} must be >= 1")
        ax.append(np.linspace(cfg[f"{name}_min"], cfg[f"{name}_max"], n))
    X, Y, T = np.meshgrid(*ax, indexing="ij")
    # time varies slowest, so each time slice is contiguous
    order = np.lexsort((X.ravel(), Y.ravel(), T.ravel()))
    return np.column_stack([X.ravel(), Y.ravel()])[order], T.ravel()[order]


def cmd_simulate(cfg):
    family = cfg["family"]
    names = param_names(family)
    model = model_from_params(family, _model_params(cfg, names, True))
    if cfg["points"]:
        coords, times = read_points(cfg["points"])
        design = ["points"]
    else:
        coords, times = _lattice(cfg)
        design = ["nx", "ny", "nt", "x_min", "x_max", "y_min", "y_max", "t_min", "t_max"]
    y = simulate(model, coords, times, cfg["seed"])
    echo = cfg.echo(["family", *names, "seed", *design])
    rows = zip(coords[:, 0], coords[:, 1], times, y)
    _write(cfg["out"], _csv_text(echo, ["x", "y", "t", "value"], rows))
    return EXIT_OK


def _parse_bounds(text, names):
    out = {}
    for item in _str_list(text):
        parts = item.split(":")
        if len(parts) != 3 or parts[0].strip() not in names:
            raise InputError(f"bounds entry {item!r} must be name:lo:hi with name in {', '.join(names)}")
        try:
            lo = float(parts[1]) if parts[1].strip() else None
            hi = float(parts[2]) if parts[2].strip() else None
        except ValueError:
            raise InputError(f"bounds entry {item!r}: limits must be numbers") from None
        out[parts[0].strip()] = (lo, hi)
    return out


def _result_records(cfg, res: FitResult, data):
    plan = res.plan_config
    rec = {"family": res.family}
    rec.update({k: res.params[k] for k in param_names(res.family, data.d)})
    rec.update(
        loglik=res.loglik, aic=res.aic, bic=res.bic, n=res.n_obs, k_params=res.k_params,
        likelihood="vecchia" if isinstance(plan, Vecchia) else "exact",
        m=plan.m if isinstance(plan, Vecchia) else data.n - 1,
        time_scale=plan.time_scale if isinstance(plan, Vecchia) else default_time_scale(data),
        mean_hat=res.mean_hat, converged=res.converged, n_evals=res.n_evals, seed=cfg["seed"],
        free=",".join(res.free), at_bound=",".join(res.at_bound), data_sha256=res.data_fingerprint,
    )
    return rec


def _summary(rec, names):
    lines = [f"{FAMILY_LABELS[rec['family']]} fit on n = {rec['n']} ({rec['likelihood']}, m = {rec['m']})"]
    width = max(len(n) for n in names)
    for n in names:
        lines.append(f"  {n:<{width}}  {rec[n]:.6g}")
    lines.append(f"  loglik {rec['loglik']:.6f}  AIC {rec['aic']:.4f}  BIC {rec['bic']:.4f}")
    lines.append(f"  converged {fmt(rec['converged'])} after {rec['n_evals']} evaluations")
    if rec["at_bound"]:
        lines.append(f"  at bound: {rec['at_bound']}")
    return "\n".join(lines)


def cmd_fit(cfg, stdout):
    family = cfg["family"]
    coords, times, values, ids = read_observations(cfg["input"])
    data = SpaceTimeDataset(coords, times, values, station_ids=ids)
    names = param_names(family, data.d)
    init = _model_params(cfg, names, False)
    fixed = _str_list(cfg["fixed"])
    bad = [n for n in fixed if n not in names]
    if bad:
        raise InputError(f"fixed: unknown parameters for {family}: {', '.join(bad)}")
    bounds = _parse_bounds(cfg["bounds"], names)
    plan = Exact() if cfg["likelihood"] == "exact" else Vecchia(cfg["m"], cfg["time_scale"])
    opt = OptConfig(n_starts=cfg["n_starts"], max_evals=cfg["max_evals"], seed=cfg["seed"])
    res = fit(data, family, init=init, plan_config=plan, opt_config=opt, fixed=fixed, bounds=bounds,
              mean_mode=cfg["mean"])
    rec = _result_records(cfg, res, data)
    ts = rec["time_scale"]
    start = default_init(family, data, ts)
    start.update(init)
    echo = cfg.echo(["family", "input", "likelihood", "m", "time_scale", "mean", "fixed", "bounds",
                     "n_starts", "max_evals", "seed"])
    if cfg["time_scale"] is None and cfg["likelihood"] == "vecchia":
        echo.append(f"# time_scale (resolved) = {fmt(ts)}")
    for n in names:
        echo.append(f"# init.{n} = {fmt(start[n])}" + ("" if n in init else "  (default)"))
    body = "\n".join(echo + [f"{k} = {fmt(v)}" for k, v in rec.items()]) + "\n"
    _write(cfg["out"], body)
    mirror = {"config": {k: v for k, v in cfg.values.items() if v is not None}, "init": start, "result": rec}
    _write(cfg["out"] + ".json", json.dumps(mirror, indent=2, sort_keys=False, default=_json_default) + "\n")
    stdout.write(_summary(rec, names) + "\n")
    return EXIT_OK


def _json_default(x):
    if isinstance(x, np.generic):
        return x.item()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def read_result(path):
    """Load a fit result written by ``fit`` (JSON mirror or key = value file)."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None
    if text.lstrip().startswith("{"):
        try:
            return json.loads(text)["result"]
        except (ValueError, KeyError) as exc:
            raise InputError(f"{path}: not a fit result ({exc})") from None
    raw = parse_config_text(text, path)
    rec = {}
    for k, v in raw.items():
        if k in ("family", "likelihood", "free", "at_bound", "data_sha256"):
            rec[k] = v
        elif k == "converged":
            rec[k] = v == "true"
        elif k in ("n", "k_params", "m", "n_evals", "seed"):
            rec[k] = int(v)
        else:
            rec[k] = float(v)
    return rec


def cmd_compare(cfg, stdout):
    paths = _str_list(cfg["results"])
    if not paths:
        raise InputError("results: no files given")
    recs = [read_result(p) for p in paths]
    labels = _str_list(cfg["labels"]) or None
    results = []
    for p, r in zip(paths, recs):
        try:
            plan = Vecchia(r["m"], r["time_scale"]) if r["likelihood"] == "vecchia" else Exact()
            ll, k, n = float(r["loglik"]), int(r["k_params"]), int(r["n"])
            aic, bic = information_criteria(ll, k, n)
            results.append(FitResult(r["family"], {}, None, ll, aic, bic, n, k, int(r["n_evals"]), bool(r["converged"]),
                                     float(r["mean_hat"]), plan, (), data_fingerprint=r["data_sha256"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"{p}: incomplete fit result ({exc})") from None
    table = compare(results, labels)
    echo = cfg.echo(["results", "labels"])
    rows = [(lab, fam, k, ll, aic, bic) for lab, fam, k, ll, aic, bic in table.rows]
    _write(cfg["out"], _csv_text(echo, ["label", "family", "k", "loglik", "aic", "bic"], rows))
    stdout.write(table.to_text() + "\n")
    return EXIT_OK


def cmd_diagnose(cfg):
    coords, times, values, ids = read_observations(cfg["input"])
    grid = grid_observations(coords, times, values, ids)
    lags = _int_list(cfg, "lags")
    if not lags:
        raise InputError("lags: at least one lag is required")
    labels = list(grid.station_ids)
    refs = _str_list(cfg["reference"])
    unknown = [r for r in refs if r not in labels]
    if unknown:
        raise InputError(f"reference: unknown stations {', '.join(unknown)}")
    ref_idx = [labels.index(r) for r in refs] if refs else None
    out_bar = cfg["out_bar"] or (os.path.splitext(cfg["out"])[0] + "_bar.csv")
    echo = cfg.echo(["input", "lags", "reference"])
    rows = [(labels[i], labels[j], k, dx[0], dx[1], d) for i, j, k, dx, d in delta_table(grid, lags)]
    bar = [(labels[j], k, v) for j, k, v in delta_bar_table(grid, lags, ref_idx)]
    _write(cfg["out"], _csv_text(echo, ["station_i", "station_j", "k", "dx", "dy", "delta"], rows))
    _write(out_bar, _csv_text(echo, ["station", "k", "delta_bar"], bar))
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def build_parser():
    parser = argparse.ArgumentParser(prog="stmix", description="Asymmetric space-time covariance toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, keys in COMMANDS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value config file")
        for key in keys:
            extra = f" (default {fmt(key.default)})" if key.default not in (None, "") else ""
            p.add_argument(f"--{key.name.replace('_', '-')}", dest=key.name, default=None,
                           help=(key.help or key.name) + extra)
    return parser


def _thread_limit():
    raw = os.environ.get(THREADS_ENV)
    if raw is None or not raw.strip():
        return None
    try:
        n = int(raw)
    except ValueError:
        raise InputError(f"{THREADS_ENV} must be a positive integer (got {raw!r})") from None
    if n < 1:
        raise InputError(f"{THREADS_ENV} must be a positive integer (got {raw!r})")
    return n


def run(argv, stdout, stderr):
    args = build_parser().parse_args(argv)
    try:
        limit = _thread_limit()
        file_values = {}
        if args.config:
            try:
                with open(args.config, encoding="utf-8") as fh:
                    file_values = parse_config_text(fh.read(), args.config)
            except OSError as exc:
                raise InputError(f"cannot read {args.config}: {exc.strerror or exc}") from None
        flags = {k.name: getattr(args, k.name) for k in COMMANDS[args.command]}
        cfg = resolve_config(args.command, file_values, flags)
        from threadpoolctl import threadpool_limits

        with threadpool_limits(limits=limit):
            if args.command == "eval-grid":
                return cmd_eval_grid(cfg)
            if args.command == "simulate":
                return cmd_simulate(cfg)
            if args.command == "fit":
                return cmd_fit(cfg, stdout)
            if args.command == "compare":
                return cmd_compare(cfg, stdout)
            return cmd_diagnose(cfg)
    except ConditioningError as exc:
        stderr.write(f"stmix: conditioning failure: {exc}\n")
        return EXIT_CONDITIONING
    except InitializationError as exc:
        stderr.write(f"stmix: optimizer initialization failed: {exc}\n")
        return EXIT_INIT
    except (InputError, InvalidParameterError, DomainError, InsufficientDataError, ComparisonError) as exc:
        stderr.write(f"stmix: {exc}\n")
        return EXIT_INPUT


def main(argv=None):
    try:
        return run(argv, sys.stdout, sys.stderr)
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
