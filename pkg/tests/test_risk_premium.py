import numpy as np
import pytest

from curvelab import (AffineModelSpec, Flavor, MarketPriceOfRisk, single_cir,
                      stationary_moments, to_risk_neutral)
from curvelab.risk_premium import (NotIdentifiedError, back_out_market_price_of_risk,
                                   mean_short_rate, with_real_world)


def test_single_cir_by_hand():
    # kappa_rn = kappa + lambda * beta, omega unchanged
    mpr = MarketPriceOfRisk([-2.0])
    k, w = to_risk_neutral([[0.5]], [1.0], mpr, [[1.0]], [0.0], [0.1])
    assert k[0, 0] == pytest.approx(0.5 - 0.2)
    assert w[0] == pytest.approx(1.0)


def test_single_vasicek_by_hand():
    # omega_rn = omega - sigma * lambda * alpha, kappa unchanged (completely affine)
    mpr = MarketPriceOfRisk([0.4])
    k, w = to_risk_neutral([[0.7]], [0.2], mpr, [[0.3]], [1.0], [0.0])
    assert k[0, 0] == pytest.approx(0.7)
    assert w[0] == pytest.approx(0.2 - 0.3 * 0.4)


def test_essentially_affine_by_hand():
    # kappa_rn = kappa + sigma * alpha^-1/2 * psi for a Vasicek factor
    mpr = MarketPriceOfRisk([0.0], [[0.5]], Flavor.ESSENTIALLY_AFFINE)
    k, _ = to_risk_neutral([[0.7]], [0.2], mpr, [[0.3]], [4.0], [0.0])
    assert k[0, 0] == pytest.approx(0.7 + 0.3 * 0.5 / 2.0)


def test_completely_affine_rejects_psi():
    with pytest.raises(ValueError):
        MarketPriceOfRisk([0.1], [[0.2]], Flavor.COMPLETELY_AFFINE)


def test_back_out_recovers_prices():
    sig = np.array([[1, 0, 0], [0, 0.3, 0], [0, -0.2, 0.4]])
    base = AffineModelSpec.build(["CIR", "Vasicek", "Vasicek"], [0.4, 0.8, 1.2],
                                 [0.5, 0.1, -0.1], sig, [0.1, 0.02, 0.03])
    psi = np.array([[0, 0, 0], [0.1, -0.2, 0.05], [0.0, 0.3, 0.1]])
    mpr = MarketPriceOfRisk([-1.5, 0.3, -0.2], psi, Flavor.ESSENTIALLY_AFFINE)
    spec = with_real_world(base, mpr)
    got = back_out_market_price_of_risk(spec)
    np.testing.assert_allclose(got.lam, mpr.lam, atol=1e-12)
    np.testing.assert_allclose(got.psi, psi, atol=1e-12)
    assert got.flavor is Flavor.ESSENTIALLY_AFFINE


def test_back_out_not_identified():
    spec = AffineModelSpec.build(["Vasicek"], 0.5, 0.1, [[0.3]], alpha=[0.0])
    with pytest.raises(NotIdentifiedError):
        back_out_market_price_of_risk(spec)


def test_cir_stationary_moments():
    m = stationary_moments(single_cir(0.3, 1.0, 0.1, kappa=0.5))
    assert m.mu[0] == pytest.approx(2.0)
    assert m.var[0] == pytest.approx(0.1 * 1.0 / (2 * 0.25))
    assert m.mean_short_rate == pytest.approx(2.0)


def test_vasicek_block_moments():
    K = np.array([[0.5, 0.0], [0.2, 1.0]])
    spec = AffineModelSpec.build(["Vasicek"] * 2, [1, 1], [0, 0], [[0.3, 0], [0, 0.4]],
                                 kappa_rw=K, omega_rw=[0.5, 0.3])
    m = stationary_moments(spec)
    np.testing.assert_allclose(K @ m.mu, [0.5, 0.3], atol=1e-14)
    np.testing.assert_allclose(m.var, [0.09 / 1.0, 0.16 / 2.0], atol=1e-14)


def test_mean_short_rate_shift():
    assert mean_short_rate([1.0, 2.0], 0.5, [0.5, 0.0]) == pytest.approx(0.5 + 1.5 + 2.0)


def test_nonstationary_cir_raises():
    with pytest.raises(ValueError):
        stationary_moments(single_cir(0.3, 1.0, 0.1, kappa=0.0))
