"""Acceptance criteria 1-10, one test each; the conftest prints a PASS/FAIL line per criterion."""

import io
import math
import time

import numpy as np

from helpers import FAMILY_NAMES, pairwise_matrix, random_family, random_model, random_points
from stmix.cli import run
from stmix.diagnostics import StationGrid, delta, delta_bar
from stmix.gp import SpaceTimeDataset, exact_loglik, simulate
from stmix.inference import Exact, OptConfig, Vecchia, fit
from stmix.kernels import (
    Anisotropy,
    CHBase,
    CovarianceModel,
    GLParams,
    LMaternParams,
    MaternBase,
    ch_corr,
    matern_corr,
)
from stmix.oracles import (
    oracle_ch_corr,
    oracle_lch,
    oracle_lgauss_gh,
    oracle_lgh,
    oracle_lmatern,
    oracle_matern_corr,
    tail_slope,
)
from stmix.parameterization import model_from_params
from stmix.special import bessel_k, bessel_k_scaled, tricomi_u
from stmix.vecchia import VecchiaPlan, vecchia_loglik


def tol_ratio(value, ref, abs_tol, rel_tol):
    """Error measured in units of the allowed error; <= 1 passes."""
    return abs(value - ref) / max(abs_tol, rel_tol * abs(ref))


# 1. closed forms against the mixture oracles


def _lagrangian_case(name, oracle):
    def case(rng):
        p = random_family(name, rng)
        h, u = rng.uniform(-2, 2, 2), rng.uniform(-2, 2)
        return float(np.exp(p.log_cov(h, u))), oracle(h, u, p)

    return case


def _matern_case(rng):
    h, nu, phi = rng.uniform(0, 5), rng.uniform(0.1, 3), rng.uniform(0.1, 2)
    return float(matern_corr(h, nu, phi)), oracle_matern_corr(h, nu, phi)


def _ch_case(rng):
    h, nu, alpha, beta = rng.uniform(0, 5), rng.uniform(0.1, 3), rng.uniform(0.1, 3), rng.uniform(0.1, 2)
    return float(ch_corr(h, nu, alpha, beta)), oracle_ch_corr(h, nu, alpha, beta)


ORACLE_CASES = {
    "lmatern": _lagrangian_case("lmatern", oracle_lmatern),
    "lch": _lagrangian_case("lch", oracle_lch),
    "lgh": _lagrangian_case("lgh", oracle_lgh),
    "matern": _matern_case,
    "ch": _ch_case,
    "lgauss": _lagrangian_case("lgauss", oracle_lgauss_gh),
}


def test_criterion_01_oracle_equivalence(report):
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst = {}
    for name, case in ORACLE_CASES.items():
        worst[name] = max(tol_ratio(*case(rng), 1e-6, 1e-5) for _ in range(200))
    elapsed = time.perf_counter() - start
    ok = all(w <= 1 for w in worst.values()) and elapsed < 120
    summary = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    report(f"200 pairs per family, worst error/tolerance {summary}; {elapsed:.1f} s")
    assert ok


# 2. positive definiteness


def test_criterion_02_positive_definite(report):
    rng = np.random.default_rng(202)
    start = time.perf_counter()
    worst = {}
    for name in FAMILY_NAMES:
        ratios = []
        for _ in range(50):
            m = random_model(name, rng)
            eig = np.linalg.eigvalsh(pairwise_matrix(m, *random_points(rng, 40)))
            ratios.append(eig[0] / eig[-1])
        worst[name] = min(ratios)
    elapsed = time.perf_counter() - start
    ok = all(w >= -1e-8 for w in worst.values()) and elapsed < 60
    summary = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    report(f"min eig / max eig over 50 draws x 40 points: {summary}; {elapsed:.1f} s")
    assert ok


# 3. tails


def _gl_limit(gl):
    a = gl.aniso
    lam, Lam = a.lambda_vec, a.Lambda
    d = a.d
    lag = math.sqrt(lam @ np.linalg.solve(Lam, lam))
    return gl.sigma2 * np.linalg.det(Lam) ** (-gl.a_exp / (2 * d)) * math.exp(gl.base.log_corr(lag))


def test_criterion_03_tails(report):
    start = time.perf_counter()
    checks = []
    for d in (1, 2):
        m = CovarianceModel(LMaternParams(1.0, 0.5, 1.0, Anisotropy(np.full(d, 0.3), 0.7 * np.eye(d))))
        slope = tail_slope(lambda u: m(np.zeros(d), u), 1e2, 1e4)
        checks.append((f"L-Matern d={d} slope {slope:.3f}", abs(slope + d) <= 0.05 * d))
    u = 1e4
    for d, aniso in ((1, Anisotropy([0.4], [[0.6]])), (2, Anisotropy.from_polar(0.5, 0.3, 0.9, 0.6, 0.3))):
        for base in (MaternBase(0.8, 0.5), CHBase(0.6, 1.2, 0.7)):
            gl = GLParams(base, d + 0.7, 1.4, aniso)
            ratio = float(np.exp(gl.log_cov(np.full(d, 0.2), u))) * u**gl.a_exp / _gl_limit(gl)
            checks.append((f"GL d={d} {type(base).__name__} ratio {ratio:.4f}", abs(ratio - 1) < 0.02))
    for alpha in (0.3, 1.0, 2.0):
        slope = tail_slope(lambda h: ch_corr(h, 0.5, alpha, 1.0), 1e2, 1e4)
        checks.append((f"CH alpha={alpha} slope {slope:.3f}", abs(slope + 2 * alpha) <= 0.05 * 2 * alpha))
    elapsed = time.perf_counter() - start
    ok = all(c for _, c in checks) and elapsed < 30
    report("; ".join(t for t, _ in checks) + f"; {elapsed:.1f} s")
    assert ok


# 4. full symmetry without drift


def test_criterion_04_symmetry(report):
    rng = np.random.default_rng(404)
    worst = {}
    for name in FAMILY_NAMES:
        m = random_model(name, rng, symmetric=True)
        h, u = rng.normal(size=(1000, 2)), rng.normal(size=1000)
        k = m(h, u)
        worst[name] = max(np.max(np.abs(m(-h, u) - k) / k), np.max(np.abs(m(h, -u) - k) / k))
    summary = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    report(f"max relative asymmetry over 1000 lags: {summary}")
    assert all(w <= 1e-12 for w in worst.values())


# 5. special functions


def test_criterion_05_special_functions(report):
    x = np.geomspace(1e-4, 500, 2000)
    base = np.sqrt(np.pi / (2 * x)) * np.exp(-x)
    half = float(np.max(np.abs(bessel_k(0.5, x) / base - 1)))
    three_half = float(np.max(np.abs(bessel_k(1.5, x) / (base * (1 + 1 / x)) - 1)))

    rng = np.random.default_rng(505)
    nu, z = rng.uniform(1, 49, 500), np.exp(rng.uniform(math.log(1e-3), math.log(700), 500))
    lo, mid, hi = bessel_k_scaled(nu - 1, z), bessel_k_scaled(nu, z), bessel_k_scaled(nu + 1, z)
    bessel_res = float(np.max(np.abs(hi - lo - 2 * nu / z * mid) / hi))

    kummer_res = 0.0
    for _ in range(300):
        a, b, xx = rng.uniform(1.05, 20), rng.uniform(-10, 0.95), rng.uniform(1e-3, 50)
        terms = [tricomi_u(a - 1, b, xx), (b - 2 * a - xx) * tricomi_u(a, b, xx), a * (a - b + 1) * tricomi_u(a + 1, b, xx)]
        kummer_res = max(kummer_res, abs(sum(terms)) / max(abs(t) for t in terms))

    origin = [float(matern_corr(0.0, n, 0.7)) for n in (0.3, 0.5, 2.5)] + [
        float(ch_corr(0.0, n, a, 0.7)) for n, a in ((0.3, 0.5), (1.5, 2.0))
    ]
    report(
        f"K_1/2 {half:.1e}, K_3/2 {three_half:.1e}, recurrence {bessel_res:.1e}, "
        f"Kummer {kummer_res:.1e}, M(0) and CH(0) exactly 1: {all(v == 1.0 for v in origin)}"
    )
    assert half <= 1e-12 and three_half <= 1e-12
    assert bessel_res <= 1e-7 and kummer_res <= 1e-7
    assert all(v == 1.0 for v in origin)


# 6. Vecchia with full conditioning


def _lmatern_station_model():
    return CovarianceModel(LMaternParams(1.0, 0.5, 0.3, Anisotropy.from_polar(0.4, 0.6, 0.3, 0.05, 0.02)), tau2=0.05)


def test_criterion_06_vecchia_exactness(report):
    rng = np.random.default_rng(606)
    worst = 0.0
    for name in FAMILY_NAMES:
        for n in (10, 30, 60):
            m = random_model(name, rng, tau2=0.05)
            c, t = random_points(rng, n)
            ds = SpaceTimeDataset(c, t, simulate(m, c, t, seed=n))
            ll = vecchia_loglik(m, ds, VecchiaPlan.build(ds, n - 1))[0]
            ll_ex = exact_loglik(m, ds)[0]
            worst = max(worst, abs(ll - ll_ex) / abs(ll_ex))
    m = _lmatern_station_model()
    st_ = np.random.default_rng(607).uniform(0, 1, (20, 2))
    c, t = np.repeat(st_, 5, axis=0), np.tile(np.arange(5.0), 20)
    ds = SpaceTimeDataset(c, t, simulate(m, c, t, seed=607))
    exact = exact_loglik(m, ds)[0]
    err10 = abs(vecchia_loglik(m, ds, VecchiaPlan.build(ds, 10))[0] - exact)
    err30 = abs(vecchia_loglik(m, ds, VecchiaPlan.build(ds, 30))[0] - exact)
    report(f"m=n-1 worst relative gap {worst:.1e}; n=100 |gap| m=10 {err10:.3g}, m=30 {err30:.3g}")
    assert worst <= 1e-8
    assert err30 < err10


# 7. parameter recovery

RECOVERY_TRUTH = dict(sigma2=1.0, tau2=0.05, nu=0.5, phi=0.3, lambda0=0.4, theta0=0.6, theta1=0.3, lambda1=0.05, lambda2=0.02)


def recovery_data(rep):
    """40 uniform stations on the unit square observed at 10 consecutive times."""
    m = model_from_params("lmatern", RECOVERY_TRUTH)
    st_ = np.random.default_rng(1000 + rep).uniform(0, 1, (40, 2))
    c, t = np.repeat(st_, 10, axis=0), np.tile(np.arange(10.0), 40)
    return SpaceTimeDataset(c, t, simulate(m, c, t, rep))


def test_recovery_bracket_oracle():
    # sampling spread of the closed-form variance estimate r' R^-1 r / n under
    # the true correlation sits well inside the +-0.7 bracket on the log scale
    ds = recovery_data(0)
    m = model_from_params("lmatern", RECOVERY_TRUTH)
    L = np.linalg.cholesky(pairwise_matrix(m, ds.coords, ds.times) + 0.05 * np.eye(ds.n))
    rng = np.random.default_rng(7)
    y = L @ rng.standard_normal((ds.n, 200))
    white = np.linalg.solve(L, y - y.mean(axis=0))
    log_s2 = np.log(np.sum(white * white, axis=0) / ds.n)
    assert np.all(np.abs(log_s2) < 0.7)


def test_criterion_07_parameter_recovery(report):
    start = time.perf_counter()
    hits = 0
    worst = []
    for rep in range(20):
        res = fit(recovery_data(rep), "lmatern", plan_config=Vecchia(30), opt_config=OptConfig(n_starts=1))
        p = res.params
        dev = (math.log(p["sigma2"]), math.log(p["phi"] / 0.3), math.log(p["nu"] / 0.5))
        worst.append(max(map(abs, dev)))
        hits += max(map(abs, dev)) <= 0.7
    elapsed = time.perf_counter() - start
    report(f"{hits}/20 replicates within 0.7 on log sigma2, log phi, log nu "
           f"(median worst deviation {np.median(worst):.2f}); {elapsed / 60:.1f} min")
    assert hits >= 16
    assert elapsed < 20 * 60


# 8. model selection on rough asymmetric fields

SELECTION_TRUTH = dict(sigma2=1.0, tau2=0.02, nu=0.4, phi=0.5, lambda0=0.5, theta0=0.0, theta1=0.0, lambda1=0.05, lambda2=0.05)
# the richer models get one start each, the L-Gauss baseline three; alpha is
# capped because large alpha only approaches the Matern limit at high cost
SELECTION_FITS = {
    "lmatern": dict(n_starts=1, bounds=None),
    "lch": dict(n_starts=1, bounds={"alpha": (None, 20.0)}),
    "lgauss": dict(n_starts=3, bounds=None),
}


def selection_data(rep):
    """60 uniform stations on the unit square observed at 4 consecutive times."""
    m = model_from_params("lmatern", SELECTION_TRUTH)
    st_ = np.random.default_rng(2000 + rep).uniform(0, 1, (60, 2))
    c, t = np.repeat(st_, 4, axis=0), np.tile(np.arange(4.0), 60)
    return SpaceTimeDataset(c, t, simulate(m, c, t, rep))


def test_criterion_08_model_selection(report):
    start = time.perf_counter()
    wins = 0
    gaps = []
    for rep in range(20):
        ds = selection_data(rep)
        res = {
            fam: fit(ds, fam, plan_config=Exact(), bounds=cfg["bounds"],
                     opt_config=OptConfig(n_starts=cfg["n_starts"], max_evals=3000))
            for fam, cfg in SELECTION_FITS.items()
        }
        g = res["lgauss"]
        wins += all(res[f].loglik > g.loglik and res[f].aic < g.aic for f in ("lmatern", "lch"))
        gaps.append(g.aic - max(res["lmatern"].aic, res["lch"].aic))
    elapsed = time.perf_counter() - start
    report(f"L-Matern and L-CH beat L-Gauss on log-likelihood and AIC in {wins}/20 replicates "
           f"(median AIC margin {np.median(gaps):.1f}); {elapsed / 60:.1f} min")
    assert wins >= 18


# 9. asymmetry diagnostics

FLOW_STATIONS = np.column_stack([np.linspace(0.0, 1.2, 7), np.zeros(7)])


def flow_grid(lambda0, rep, n_t=120):
    """Stations on a line along the drift direction."""
    p = dict(sigma2=1.0, tau2=0.05, nu=0.5, phi=0.3, lambda0=lambda0, theta0=0.0, theta1=0.0, lambda1=0.05, lambda2=0.05)
    m = model_from_params("lmatern", p)
    c, t = np.repeat(FLOW_STATIONS, n_t, axis=0), np.tile(np.arange(float(n_t)), len(FLOW_STATIONS))
    z = simulate(m, c, t, 3000 + rep).reshape(len(FLOW_STATIONS), n_t)
    return m, StationGrid(FLOW_STATIONS, np.arange(n_t), z)


def test_criterion_09_diagnostics(report):
    ref = 0
    exact_ok = True
    null, flow, agree = [], [], 0
    for rep in range(20):
        _, g = flow_grid(0.0, rep)
        null.append(delta_bar(g, ref, 1))
        m, g = flow_grid(0.5, rep)
        for i in range(g.n_stations):
            for j in range(g.n_stations):
                exact_ok &= delta(g, i, j, 0) == 0.0
                exact_ok &= all(delta(g, i, j, k) == -delta(g, j, i, k) for k in (1, 2))
        # h runs from each station to the reference
        h = FLOW_STATIONS[ref] - FLOW_STATIONS
        model_sign = np.sign(np.mean(m(h, np.ones(len(h))) - m(-h, np.ones(len(h)))))
        flow.append(delta_bar(g, ref, 1))
        agree += np.sign(flow[-1]) == model_sign
    null = np.array(null)
    se = null.std(ddof=1) / math.sqrt(null.size)
    report(f"exact zero-lag and antisymmetry: {exact_ok}; lambda=0 mean delta_bar {null.mean():.4f} "
           f"(3 SE = {3 * se:.4f}); sign agreement {agree}/20")
    assert exact_ok
    assert abs(null.mean()) <= 3 * se
    assert agree >= 18


# 10. CLI determinism


def test_criterion_10_cli_determinism(report, tmp_path):
    data = tmp_path / "obs.csv"
    m = _lmatern_station_model()
    st_ = np.random.default_rng(10).uniform(0, 1, (8, 2))
    c, t = np.repeat(st_, 5, axis=0), np.tile(np.arange(5.0), 8)
    y = simulate(m, c, t, 10)
    with open(data, "w") as fh:
        fh.write("x,y,t,value,station\n")
        for k, ((a, b), ti, yi) in enumerate(zip(c, t, y)):
            fh.write(f"{float(a)!r},{float(b)!r},{float(ti)!r},{float(yi)!r},s{k // 5}\n")
    cfg = tmp_path / "run.cfg"
    cfg.write_text("seed = 42\n")
    runs = {
        "eval-grid": ["--family", "lch", "--lambda0", "0.4", "--h-steps", "21", "--u-steps", "11"],
        "simulate": ["--tau2", "0.2", "--nx", "6", "--ny", "6", "--nt", "5"],
        "fit": ["--input", str(data), "--n-starts", "2", "--max-evals", "300", "--m", "8"],
        "diagnose": ["--input", str(data), "--lags", "0,1,2"],
    }
    identical = {}
    for cmd, args in runs.items():
        out = tmp_path / f"{cmd}.out"
        snapshots = []
        for _ in range(2):
            flags = ["--config", str(cfg)] if cmd in ("simulate", "fit") else []
            code = run([cmd, "--out", str(out), *flags, *args], io.StringIO(), io.StringIO())
            files = sorted(p for p in tmp_path.iterdir() if p.name.startswith(cmd))
            snapshots.append((code, [p.read_bytes() for p in files]))
        identical[cmd] = snapshots[0] == snapshots[1] and snapshots[0][0] == 0
    report("byte-identical reruns: " + ", ".join(f"{k} {v}" for k, v in identical.items()))
    assert all(identical.values())
