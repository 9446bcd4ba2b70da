"""Invariants checked over generated inputs."""
import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from curvelab import (TREASURY_GRID, AffineModelSpec, Flavor, MarketPriceOfRisk,
                      assemble_loadings, cir_loadings, correlated_sigma, solve_loadings_ode,
                      to_real_world, to_risk_neutral, vasicek_loadings)
from curvelab.fitter import get_model, log_likelihood, loo_is, rhat
from curvelab.simulator import step_cir

TAUS = np.array([0.25, 1, 2, 3, 5, 7, 10, 20, 30])
pos = st.floats(0.02, 3.0)
finite = dict(allow_nan=False, allow_infinity=False)


@given(pos, st.floats(0.0, 3.0), pos)
def test_cir_d_in_unit_interval_and_decreasing(kappa, omega, beta):
    C, D = cir_loadings(kappa, omega, beta, TAUS)
    assert np.all(np.isfinite(C))
    assert np.all((D > 0) & (D <= 1))
    assert np.all(np.diff(D) < 0)


@given(pos, st.floats(-2, 2), st.floats(0.01, 2))
def test_vasicek_d_decreasing(kappa, omega, sigma):
    C, D = vasicek_loadings(kappa, omega, sigma, TAUS)
    assert np.all(np.isfinite(C)) and np.all((D > 0) & (D <= 1)) and np.all(np.diff(D) < 0)


@given(pos, st.floats(0, 2), st.floats(0.01, 2), st.floats(-2, 2))
def test_vasicek_level_shift(kappa, omega, sigma, shift):
    # raising omega by kappa * s raises C by s * (1 - D)
    C0, D = vasicek_loadings(kappa, omega, sigma, TAUS)
    C1, _ = vasicek_loadings(kappa, omega + kappa * shift, sigma, TAUS)
    np.testing.assert_allclose(C1 - C0, shift * (1 - D), atol=1e-9)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.05, 2), st.floats(0.05, 2), st.floats(0.05, 1), st.floats(0.05, 1),
       st.floats(-0.95, 0.95), st.floats(-1, 1), st.floats(-1, 1))
def test_correlated_closed_form_matches_ode(k1, k2, s1, s2, rho, w1, w2):
    spec = AffineModelSpec.build(["Vasicek"] * 2, [k1, k2], [w1, w2],
                                 correlated_sigma([s1, s2], rho))
    a = assemble_loadings(spec, TREASURY_GRID)
    b = solve_loadings_ode(spec, TREASURY_GRID, rel_tol=1e-10, abs_tol=1e-12)
    np.testing.assert_allclose(a.C, b.C, atol=1e-6)
    np.testing.assert_allclose(a.D, b.D, atol=1e-6)


@given(arrays(float, 2, elements=st.floats(0.1, 3)), arrays(float, 2, elements=st.floats(-0.99, 0.99)))
def test_correlated_sigma_covariance(s, r):
    L = correlated_sigma(s, r[0])
    cov = np.array([[s[0] ** 2, r[0] * s[0] * s[1]], [r[0] * s[0] * s[1], s[1] ** 2]])
    np.testing.assert_allclose(L @ L.T, cov, atol=1e-12)


@st.composite
def mpr_case(draw):
    n = draw(st.integers(1, 3))
    n_cir = draw(st.integers(0, min(1, n)))
    kinds = ["CIR"] * n_cir + ["Vasicek"] * (n - n_cir)
    el = st.floats(-2, 2, **finite)
    kappa = np.array(draw(arrays(float, (n, n), elements=el)))
    omega = np.array(draw(arrays(float, n, elements=el)))
    sigma = np.tril(draw(arrays(float, (n, n), elements=st.floats(-1, 1))))
    np.fill_diagonal(sigma, draw(arrays(float, n, elements=st.floats(0.05, 1))))
    if n_cir:
        sigma[0, :] = 0
        sigma[:, 0] = 0
        sigma[0, 0] = 1
    alpha = np.array([0.0] * n_cir + draw(st.lists(st.floats(0.1, 2), min_size=n - n_cir,
                                                    max_size=n - n_cir)))
    beta = np.array(draw(arrays(float, n, elements=st.floats(0.0, 1))))
    lam = draw(arrays(float, n, elements=el))
    essentially = draw(st.booleans())
    psi = draw(arrays(float, (n, n), elements=el)) if essentially else None
    flavor = Flavor.ESSENTIALLY_AFFINE if essentially else Flavor.COMPLETELY_AFFINE
    return kinds, kappa, omega, sigma, alpha, beta, MarketPriceOfRisk(lam, psi, flavor)


@given(mpr_case())
def test_risk_premium_round_trip(case):
    kinds, kappa, omega, sigma, alpha, beta, mpr = case
    k_rn, w_rn = to_risk_neutral(kappa, omega, mpr, sigma, alpha, beta, kinds)
    k, w = to_real_world(k_rn, w_rn, mpr, sigma, alpha, beta, kinds)
    np.testing.assert_allclose(k, kappa, rtol=0, atol=1e-12)
    np.testing.assert_allclose(w, omega, rtol=0, atol=1e-12)


@given(arrays(float, st.tuples(st.integers(1, 20), st.integers(1, 6)),
              elements=st.floats(-30, 5, **finite)))
def test_loo_identity_and_nonnegative_penalty(ll):
    loo, pen = loo_is(ll)
    assert abs(loo + pen - ll.sum(axis=1).mean()) <= 1e-9 * max(1.0, abs(loo))
    assert pen >= -1e-9


@given(arrays(float, st.tuples(st.integers(2, 5), st.integers(4, 40)),
              elements=st.floats(-10, 10, **finite)))
def test_rhat_at_least_one(chains):
    r = rhat(chains)
    assert r >= 1.0 - 1e-12 or r == np.inf


@given(st.floats(0.0, 5.0), st.floats(0.0, 2.0), st.floats(0.05, 2.0), st.floats(0.01, 2.0),
       st.sampled_from([1 / 252, 1 / 52, 1 / 12, 1.0]), st.integers(0, 2 ** 32 - 1))
def test_cir_step_nonnegative(r, omega, kappa, beta, dt, seed):
    rng = np.random.default_rng(seed)
    x = r
    for _ in range(20):
        x = step_cir(x, omega, kappa, beta, dt, rng)
        assert x >= 0


@given(st.sampled_from(["CIR", "VVV", "CVV", "CVV+", "7k3b"]), st.data())
def test_transform_round_trip(name, data):
    model = get_model(name)
    u = np.array(data.draw(arrays(float, model.n_params, elements=st.floats(-3, 3))))
    x, logj = model.to_natural(u)
    assert np.isfinite(logj)
    np.testing.assert_allclose(model.to_unconstrained(x), u, atol=1e-8)


@given(st.integers(0, 10_000))
def test_likelihood_date_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    C, D = rng.normal(size=8), rng.uniform(0, 1, size=(8, 2))
    X = rng.normal(size=(12, 2))
    y = X @ D.T + C + 0.1 * rng.normal(size=(12, 8))
    p = rng.permutation(12)
    a, _ = log_likelihood((C, D), X, y, 0.1)
    b, _ = log_likelihood((C, D), X[p], y[p], 0.1)
    assert abs(a - b) <= 1e-9 * abs(a)
