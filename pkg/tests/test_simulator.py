import numpy as np
import pytest
from scipy import stats

from curvelab import (TREASURY_GRID, AffineModelSpec, ModelDraw, SimConfig, correlated_sigma,
                      simulate, simulate_panel, single_cir, single_vasicek)
from curvelab.simulator import (cir_step_moments, scenario_rng, simulate_path, step_cir,
                                step_factors, step_vasicek_block, thread_count,
                                vasicek_step_moments)


def exact_cir_moments(r, omega, kappa, beta, dt):
    # r_dt = c * noncentral chi-square(df, nc)
    e = np.exp(-kappa * dt)
    c = beta * (1 - e) / (4 * kappa)
    df = 4 * omega / beta
    nc = r * e / c
    m, v = stats.ncx2.stats(df, nc, moments="mv")
    return c * float(m), c * c * float(v)


@pytest.mark.parametrize("r,omega,kappa,beta,dt", [(2.0, 1.0, 0.5, 0.1, 1 / 52),
                                                   (0.01, 0.3, 2.0, 0.5, 1 / 12),
                                                   (5.0, 1.0, 0.1, 1.0, 1.0)])
def test_cir_step_moments_exact(r, omega, kappa, beta, dt):
    m, v = cir_step_moments(r, omega, kappa, beta, dt)
    em, ev = exact_cir_moments(r, omega, kappa, beta, dt)
    assert m == pytest.approx(em, rel=1e-12)
    assert v == pytest.approx(ev, rel=1e-10)


def test_step_cir_draws_match_moments():
    rng = np.random.default_rng(0)
    x = np.array([step_cir(0.5, 1.0, 0.5, 0.4, 0.25, rng) for _ in range(40000)])
    m, v = cir_step_moments(0.5, 1.0, 0.5, 0.4, 0.25)
    assert x.min() >= 0
    assert abs(x.mean() - m) < 4 * np.sqrt(v / len(x))
    assert x.var() == pytest.approx(v, rel=0.03)


def test_step_cir_rejects_bad_input():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        step_cir(1.0, 1.0, 0.0, 0.1, 0.1, rng)
    with pytest.raises(ValueError):
        step_cir(-1.0, 1.0, 0.5, 0.1, 0.1, rng)


def test_vasicek_block_moments():
    sig = correlated_sigma([0.3, 0.5], -0.4)
    spec = AffineModelSpec.build(["Vasicek"] * 2, [0.5, 1.0], [0.1, 0.2], sig)
    rng = np.random.default_rng(1)
    r = np.array([1.0, -0.5])
    draws = np.array([step_vasicek_block(r, spec, 0.1, rng) for _ in range(30000)])
    mean, cov = vasicek_step_moments(r, spec, 0.1)
    np.testing.assert_allclose(mean, r + (spec.omega_rw - spec.kappa_rw @ r) * 0.1)
    np.testing.assert_allclose(cov, sig @ sig.T * 0.1, atol=1e-15)
    np.testing.assert_allclose(draws.mean(0), mean, atol=4 * np.sqrt(cov.diagonal().max() / 3e4))
    np.testing.assert_allclose(np.cov(draws.T), cov, rtol=0.05, atol=2e-4)


def test_step_factors_matches_fast_stepper():
    spec = AffineModelSpec.build(["CIR", "Vasicek"], [0.5, 1.0], [1.0, 0.1],
                                 [[1, 0], [0, 0.3]], [0.1, 0.02])
    a = step_factors(np.array([2.0, 0.1]), spec, 1 / 52, np.random.default_rng(3))
    b = simulate_path(spec, [2.0, 0.1], 1, 1 / 52, np.random.default_rng(3))[1]
    np.testing.assert_allclose(a, b, rtol=1e-15)


def _draws():
    spec = AffineModelSpec.build(["CIR", "Vasicek"], [0.5, 1.0], [1.0, 0.1],
                                 [[1, 0], [0, 0.3]], [0.1, 0.0])
    return [ModelDraw.from_spec(spec, [2.0, 0.1], TREASURY_GRID),
            ModelDraw.from_spec(spec.replace(sigma_y=0.1), [1.0, 0.3], TREASURY_GRID)]


def test_simulate_shapes_and_start():
    cfg = SimConfig(dt=1 / 12, horizon_steps=6, n_scenarios=20, seed=4)
    scen = simulate(_draws(), cfg)
    assert scen.factor_paths.shape == (20, 7, 2)
    assert scen.yields.shape == (20, 6, 8)
    assert scen.curves_at_step(0).shape == (20, 8)
    np.testing.assert_allclose(scen.curves_at_year(0.5), scen.yields[:, 5])
    assert np.all(scen.factor_paths[:, :, 0] >= 0)
    for s in range(20):
        d = _draws()[scen.draw_index[s]]
        np.testing.assert_allclose(scen.factor_paths[s, 0], d.state)
        np.testing.assert_allclose(scen.initial_yields[s], d.loadings.yields(d.state))
    with pytest.raises(IndexError):
        scen.curves_at_step(7)
    with pytest.raises(ValueError):
        scen.curves_at_year(0.3)


def test_simulate_deterministic_and_thread_independent():
    cfg = SimConfig(dt=1 / 12, horizon_steps=12, n_scenarios=30, seed=9)
    a = simulate(_draws(), cfg, threads=1)
    b = simulate(_draws(), cfg, threads=3)
    np.testing.assert_array_equal(a.yields, b.yields)
    np.testing.assert_array_equal(a.draw_index, b.draw_index)
    c = simulate(_draws(), SimConfig(dt=1 / 12, horizon_steps=12, n_scenarios=30, seed=10))
    assert not np.array_equal(a.yields, c.yields)


def test_scenario_streams_independent_of_count():
    # scenario s gets the same stream whatever the total number of scenarios
    cfg_small = SimConfig(horizon_steps=3, n_scenarios=5, seed=2)
    cfg_big = SimConfig(horizon_steps=3, n_scenarios=50, seed=2)
    a = simulate(_draws(), cfg_small)
    b = simulate(_draws(), cfg_big)
    np.testing.assert_array_equal(a.yields, b.yields[:5])
    assert scenario_rng(2, 0).random() != scenario_rng(2, 1).random()


def test_simulate_rejects_mixed_grids():
    spec = single_vasicek(0.5, 0.1, 0.3)
    from curvelab import MaturityGrid
    draws = [ModelDraw.from_spec(spec, [0.0], TREASURY_GRID),
             ModelDraw.from_spec(spec, [0.0], MaturityGrid((1, 2)))]
    with pytest.raises(ValueError):
        simulate(draws, SimConfig(n_scenarios=2))
    with pytest.raises(ValueError):
        simulate([], SimConfig())


def test_sim_config_validation():
    with pytest.raises(ValueError):
        SimConfig(dt=0)
    with pytest.raises(ValueError):
        SimConfig(horizon_steps=0)


def test_thread_count_env(monkeypatch):
    monkeypatch.setenv("CURVELAB_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("CURVELAB_THREADS", "many")
    assert thread_count() == 1
    monkeypatch.delenv("CURVELAB_THREADS")
    assert thread_count() == 1


def test_simulate_panel_noise_free():
    spec = single_cir(0.5, 1.0, 0.1, kappa=0.5)
    panel, path = simulate_panel(spec, TREASURY_GRID, 30, seed=1, noise=False)
    assert panel.rates.shape == (30, 8) and path.shape == (30, 1)
    assert panel.dt == pytest.approx(1 / 52)
    assert np.all(np.diff(panel.dates.astype(np.int64)) == 7)
    from curvelab import loadings
    np.testing.assert_allclose(panel.rates, loadings(spec, TREASURY_GRID).yields(path))
