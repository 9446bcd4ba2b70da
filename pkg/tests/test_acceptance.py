"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -v`` (or execute this
file).  Lines look like ``[ 6] PASS  CIR parameter recovery  (...)``.
"""
import sys
import time

import numpy as np
import pytest

from conftest import CIR_TRUTH, CVV_TRUTH
from curvelab import (TREASURY_GRID, AffineModelSpec, Flavor, MarketPriceOfRisk, MaturityGrid,
                      SimConfig, assemble_loadings, cir_loadings, correlated_sigma, loadings,
                      simulate, simulate_panel, single_cir, solve_loadings_ode, to_real_world,
                      to_risk_neutral)
from curvelab.battery import (Bands, campbell_shiller, evaluate_battery, pca, r2_by_maturity,
                              spread_regression, volatility_regression)
from curvelab.cli import main as cli_main
from curvelab.core import YieldPanel
from curvelab.fitter import MCMCConfig, get_model, loo_is, metropolis_fit
from curvelab.io import save_panel
from curvelab.loadings_closed import vasicek_D
from curvelab.simulator import ModelDraw, simulate_path


@pytest.fixture
def report(capsys):
    def emit(num, title, ok, detail=""):
        with capsys.disabled():
            print(f"\n[{num:2d}] {'PASS' if ok else 'FAIL'}  {title}  ({detail})")
        assert ok, f"criterion {num} failed: {detail}"
    return emit


# 1 ---------------------------------------------------------------------------

def random_spec(rng, kind):
    if kind == "Vasicek":
        return AffineModelSpec.build(["Vasicek"], rng.uniform(0.05, 2), rng.uniform(-1, 1),
                                     [[rng.uniform(0.05, 1.5)]])
    if kind == "CIR":
        return AffineModelSpec.build(["CIR"], rng.uniform(0.05, 2), rng.uniform(0, 2), None,
                                     [rng.uniform(0.01, 2)])
    sig = correlated_sigma(rng.uniform(0.05, 1.0, 2), rng.uniform(-0.95, 0.95))
    return AffineModelSpec.build(["Vasicek"] * 2, rng.uniform(0.05, 2, 2),
                                 rng.uniform(-1, 1, 2), sig)


def test_01_closed_form_matches_ode(report):
    rng = np.random.default_rng(2024)
    kinds = ["Vasicek", "CIR", "pair"]
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(100):
        spec = random_spec(rng, kinds[i % 3])
        a = assemble_loadings(spec, TREASURY_GRID)
        b = solve_loadings_ode(spec, TREASURY_GRID)
        worst = max(worst, np.abs(a.C - b.C).max(), np.abs(a.D - b.D).max())
    elapsed = time.perf_counter() - t0
    report(1, "closed form vs ODE on 100 random specs", worst < 1e-6 and elapsed < 30,
           f"max abs diff {worst:.2e}, {elapsed:.1f}s")


# 2 ---------------------------------------------------------------------------

def test_02_cir_degenerates_to_vasicek(report):
    worst = 0.0
    for kappa in (0.05, 0.3, 1.0, 2.5):
        _, D = cir_loadings(kappa, 1.0, 1e-8, TREASURY_GRID.array)
        worst = max(worst, np.abs(D - vasicek_D(kappa, TREASURY_GRID.array)).max())
    report(2, "CIR D at beta=1e-8 equals Vasicek D", worst < 1e-6, f"max abs diff {worst:.2e}")


# 3 ---------------------------------------------------------------------------

def test_03_d_starts_at_one(report):
    grid = MaturityGrid((1e-6,))
    specs = [single_cir(0.5, 1.0, 0.1),
             AffineModelSpec.build(["Vasicek"], 0.7, 0.1, [[0.3]]),
             get_model("CVV").spec(CVV_TRUTH)]
    p7 = dict(CVV_TRUTH, kappa_rn_21=0.1, kappa_rn_23=-0.05, kappa_rn_31=0.2, kappa_rn_32=0.1,
              beta_2=0.01, beta_3=0.02, delta0=0.0, gamma_1=0.0, kappa_21=0.1,
              kappa_22=0.2, kappa_23=-0.05, kappa_31=0.2, kappa_32=0.1, kappa_33=0.8)
    specs.append(get_model("7k3b").spec(p7))
    worst = 0.0
    for spec in specs:
        for table in (loadings(spec, grid), solve_loadings_ode(spec, grid)):
            worst = max(worst, np.abs(table.D - 1).max())
    report(3, "D_j(1e-6) = 1 for every factor", worst < 1e-4, f"max |D - 1| {worst:.2e}")


# 4 ---------------------------------------------------------------------------

def test_04_risk_premium_round_trip(report):
    rng = np.random.default_rng(4)
    worst = 0.0
    for i in range(1000):
        essentially = i % 2 == 1
        kinds = ["CIR", "Vasicek", "Vasicek"]
        sigma = np.zeros((3, 3))
        sigma[0, 0] = 1
        sigma[1:, 1:] = correlated_sigma(rng.uniform(0.05, 1, 2), rng.uniform(-0.9, 0.9))
        alpha = np.array([0.0, *rng.uniform(0.1, 2, 2)])
        beta = rng.uniform(0, 1, 3)
        psi = rng.normal(size=(3, 3)) if essentially else None
        mpr = MarketPriceOfRisk(rng.normal(size=3), psi,
                                Flavor.ESSENTIALLY_AFFINE if essentially
                                else Flavor.COMPLETELY_AFFINE)
        kappa = rng.normal(size=(3, 3))
        omega = rng.normal(size=3)
        k_rn, w_rn = to_risk_neutral(kappa, omega, mpr, sigma, alpha, beta, kinds)
        k, w = to_real_world(k_rn, w_rn, mpr, sigma, alpha, beta, kinds)
        worst = max(worst, np.abs(k - kappa).max(), np.abs(w - omega).max())
    report(4, "risk-neutral/real-world round trip, 1000 draws, both flavors", worst < 1e-12,
           f"max abs diff {worst:.1e}")


# 5 ---------------------------------------------------------------------------

def batch_se(x, n_batches=50):
    means = x[: len(x) // n_batches * n_batches].reshape(n_batches, -1).mean(axis=1)
    return means.std(ddof=1) / np.sqrt(n_batches)


def test_05_cir_stationarity(report):
    spec = single_cir(0.5, 1.0, 0.1, kappa=0.5)
    t0 = time.perf_counter()
    path = simulate_path(spec, [2.0], 100_000, 1 / 52, np.random.default_rng(5))[1:, 0]
    elapsed = time.perf_counter() - t0
    mean, var = path.mean(), path.var(ddof=1)
    se_mean = batch_se(path)
    se_var = batch_se((path - mean) ** 2)
    ok = (abs(mean - 2.0) < 3 * se_mean and abs(var - 0.2) < 3 * se_var
          and path.min() >= 0 and elapsed < 10)
    report(5, "single-CIR stationary mean 2 and variance 0.2", ok,
           f"mean {mean:.4f} (se {se_mean:.4f}), var {var:.4f} (se {se_var:.4f}), "
           f"min {path.min():.3f}, {elapsed:.1f}s")


# 6, 7 ------------------------------------------------------------------------

def test_06_cir_parameter_recovery(report, timed_cir_fit):
    fit, elapsed = timed_cir_fit
    mu = fit.column("omega_1") / fit.column("kappa_11")
    ratio = float(mu.mean())
    sy = float(fit.column("sigma_y").mean())
    truth_mu = CIR_TRUTH["omega"] / CIR_TRUTH["kappa"]
    worst_rhat = max(fit.rhat.values())
    ok = (abs(ratio / truth_mu - 1) <= 0.2 and abs(sy / CIR_TRUTH["sigma_y"] - 1) <= 0.2
          and worst_rhat < 1.1 and elapsed < 300)
    report(6, "CIR parameter recovery", ok,
           f"omega/kappa {ratio:.3f} (truth {truth_mu}), sigma_y {sy:.4f} (truth 0.02), "
           f"max rhat {worst_rhat:.3f}, {elapsed:.0f}s")


def test_07_loo_structure(report, cir_fit):
    fit = cir_fit
    loo, pen = loo_is(fit.pointwise_loglik)
    gap = abs(loo + pen - fit.log_lik)
    report(7, "loo + penalty = LL and penalty >= 0", gap < 1e-6 and pen >= 0
           and loo == fit.loo, f"loo {loo:.2f}, penalty {pen:.2f}, LL {fit.log_lik:.2f}, "
           f"gap {gap:.1e}")


# 8 ---------------------------------------------------------------------------

def _planted_panels():
    rng = np.random.default_rng(8)
    n = 120
    dates = (np.datetime64("2000-01", "M") + np.arange(n)).astype("datetime64[D]") + 27
    i1, i2, i3, i5, i30 = (TREASURY_GRID.index(t) for t in (1, 2, 3, 5, 30))
    # volatility: squared monthly changes exactly linear in level, slope, curvature
    coefs = np.column_stack([np.full(8, 0.05), np.linspace(0.01, 0.002, 8),
                             np.linspace(0.004, 0.001, 8), np.linspace(-0.003, 0.002, 8)])
    vol = np.empty((n, 8))
    vol[0] = np.linspace(1, 3, 8)
    for t in range(n - 1):
        r = vol[t]
        target = coefs @ np.array([1, r[i5], r[i5] - r[i1], r[i5] + r[i1] - 2 * r[i3]])
        sign = np.where(rng.random(8) < 0.5, -1.0, 1.0)
        sign = np.where(r > vol[0] + 0.5, -1.0, np.where(r < vol[0] - 0.5, 1.0, sign))
        vol[t + 1] = r + sign * np.sqrt(target)
    # Campbell-Shiller: Y(t+12, 1) - Y(t, 2) = a + b (Y(t,2) - Y(t,1))
    cs = rng.uniform(1, 3, size=(n, 8))
    for t in range(12, n):
        cs[t, i1] = cs[t - 12, i2] + 0.1 - 0.8 * (cs[t - 12, i2] - cs[t - 12, i1])
    # spread: 30y - 3y = c + d * 1y
    sp = rng.uniform(1, 3, size=(n, 8))
    sp[:, i30] = sp[:, i3] + 1.5 - 0.7 * sp[:, i1]
    mk = lambda x: YieldPanel(dates, TREASURY_GRID, x, 1 / 12)  # noqa: E731
    return mk(vol), coefs, mk(cs), mk(sp)


def _spread_panel(slope, se, n=80):
    r = np.random.default_rng(0)
    rates = r.uniform(1, 3, size=(n, 8))
    x = rates[:, 0]
    z = r.normal(size=n)
    X = np.column_stack([np.ones(n), x])
    z -= X @ np.linalg.lstsq(X, z, rcond=None)[0]
    z *= se / np.sqrt(z @ z / (n - 2))
    rates[:, TREASURY_GRID.index(30)] = rates[:, TREASURY_GRID.index(3)] + 1 + slope * x + z
    dates = np.datetime64("2010-01-01") + 7 * np.arange(n)
    return YieldPanel(dates, TREASURY_GRID, rates, 1 / 52)


def test_08_battery_regressions(report):
    vol, coefs, cs, sp = _planted_panels()
    res = volatility_regression(vol)
    err_vol = max(np.abs(res[t].coef - coefs[j]).max() for j, t in enumerate(TREASURY_GRID))
    c = campbell_shiller(cs, 2, 1)
    err_cs = max(abs(c.intercept - 0.1), abs(c.slope + 0.8))
    s = spread_regression(sp)
    err_sp = max(abs(s.intercept - 1.5), abs(s.slope + 0.7))
    verdicts = {}
    for slope, se in ((-0.5, 0.1), (-0.7, 0.61), (-0.7, 0.59), (-0.45, 0.1)):
        rep = evaluate_battery(panel=_spread_panel(slope, se))
        verdicts[(slope, se)] = (rep["spread.slope"].verdict, rep["spread.se"].verdict)
    bands_ok = (verdicts[(-0.5, 0.1)] == ("pass", "pass")
                and verdicts[(-0.7, 0.61)][1] == "fail"
                and verdicts[(-0.7, 0.59)][1] == "pass"
                and verdicts[(-0.45, 0.1)][0] == "fail")
    worst = max(err_vol, err_cs, err_sp)
    report(8, "planted regression coefficients and spread verdict bands",
           worst < 1e-9 and bands_ok,
           f"max coef error {worst:.1e}, verdicts {verdicts}")


# 9 ---------------------------------------------------------------------------

def _noise_free_scenarios(spec, r0):
    draw = ModelDraw.from_spec(spec, r0, TREASURY_GRID)
    return simulate([draw], SimConfig(dt=1 / 12, horizon_steps=24, n_scenarios=500, seed=9))


def test_09_pca_rank(report):
    two = AffineModelSpec.build(["Vasicek"] * 2, [0.2, 1.0], [0.1, 0.0],
                                correlated_sigma([0.5, 0.8], -0.3))
    three = get_model("CVV").spec(CVV_TRUTH)
    s2 = _noise_free_scenarios(two, [0.5, 0.0])
    s3 = _noise_free_scenarios(three, [0.6, 1.5, -0.2])
    p2 = pca(s2.curves_at_year(1)).variance_proportions[2]
    p3 = pca(s3.curves_at_year(1)).variance_proportions[2]
    rep = evaluate_battery(s3, bands=Bands())
    band_ok = rep["pca_pc3"].band == ">= 0.005" and rep["pca_pc3"].verdict in ("pass", "fail")
    report(9, "PCA rank: PC3 share ~0 for 2 factors, > 0 for 3 with 0.005 band evaluated",
           p2 < 1e-8 and p3 > 0 and band_ok,
           f"2-factor {p2:.1e}, 3-factor {p3:.2e} ({rep['pca_pc3'].verdict})")


# 10 --------------------------------------------------------------------------

def test_10_r2_contract(report, cir_panel):
    panel, _ = cir_panel
    r2 = r2_by_maturity(panel, panel)
    rep = evaluate_battery(panel=panel, fitted=panel)
    detail = rep["r2_min"].detail
    layout = detail == "by maturity: " + " ".join(f"{lab}=100" for lab in TREASURY_GRID.labels()) \
        + " (%)"
    report(10, "R2 of a perfect fit is 100% at every maturity", np.all(r2 == 1.0) and layout,
           detail)


# 11 --------------------------------------------------------------------------

def _pipeline(tmp_path, name, threads, monkeypatch):
    monkeypatch.setenv("CURVELAB_THREADS", str(threads))
    out = tmp_path / name
    cli_main(["pipeline", "--data", str(tmp_path / "panel.csv"), "--out", str(out),
              "--model", "CIR", "--chains", "2", "--warmup", "200", "--kept", "100",
              "--n-scenarios", "200", "--horizon", "24", "--seed", "11"])
    files = ("fit/summary.txt", "fit/samples.csv", "scenarios.csv", "report.txt", "report.kv")
    return {f: (out / f).read_bytes() for f in files}


def test_11_pipeline_determinism(report, tmp_path, cir_panel, monkeypatch, capsys):
    panel, _ = cir_panel
    save_panel(panel, tmp_path / "panel.csv")
    a = _pipeline(tmp_path, "run1", 1, monkeypatch)
    b = _pipeline(tmp_path, "run2", 1, monkeypatch)
    c = _pipeline(tmp_path, "run3", 2, monkeypatch)
    capsys.readouterr()
    same = [f for f in a if a[f] == b[f] == c[f]]
    report(11, "pipeline output byte-identical across runs and thread counts",
           len(same) == len(a), f"identical: {', '.join(same)}")


# 12 --------------------------------------------------------------------------

def test_12_three_factor_std_declines(report):
    spec = get_model("CVV").spec(CVV_TRUTH)
    panel, _ = simulate_panel(spec, TREASURY_GRID, 100, seed=3)
    fit = metropolis_fit(panel, "CVV", cfg=MCMCConfig(n_chains=2, n_warmup=500, n_kept=250,
                                                      seed=0, threads=1, n_starts=2))
    scen = simulate(fit.draws(100), SimConfig(dt=1 / 12, horizon_steps=24, n_scenarios=1000,
                                              seed=12))
    sd = scen.curves_at_year(1).std(axis=0, ddof=1)
    tail = sd[TREASURY_GRID.index(5):]
    report(12, "fitted 3-factor model: year-1 scenario std declines from 5y to 30y",
           bool(np.all(np.diff(tail) < 0)),
           " ".join(f"{lab}={v:.3f}" for lab, v in zip(TREASURY_GRID.labels(), sd)))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
