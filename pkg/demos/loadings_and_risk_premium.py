"""Yield loadings for one- and three-factor models, and the risk-premium map.

Run: python3 demos/loadings_and_risk_premium.py
"""
import numpy as np

from curvelab import (TREASURY_GRID, AffineModelSpec, Flavor, MarketPriceOfRisk, correlated_sigma,
                      loadings, single_cir, solve_loadings_ode, stationary_moments,
                      to_real_world, to_risk_neutral)


def show(name, table):
    print(f"\n{name}")
    print("tau    C        " + "  ".join(f"D_{j + 1}" for j in range(table.D.shape[1])))
    for tau, c, d in zip(TREASURY_GRID.array, table.C, table.D):
        print(f"{tau:4g}  {c:8.4f}  " + "  ".join(f"{x:.4f}" for x in d))


cir = single_cir(0.5, 1.0, 0.1, kappa=0.5)
show("one-factor CIR (closed form)", loadings(cir, TREASURY_GRID))

# CIR factor plus a correlated Vasicek pair
sigma = np.zeros((3, 3))
sigma[0, 0] = 1.0
sigma[1:, 1:] = correlated_sigma([0.3, 0.5], -0.5)
three = AffineModelSpec.build(["CIR", "Vasicek", "Vasicek"], [0.3, 0.2, 0.8], [0.3, 0.5, -0.2],
                              sigma, [0.1, 0.0, 0.0])
closed = loadings(three, TREASURY_GRID)
ode = solve_loadings_ode(three, TREASURY_GRID)
show("three-factor (closed form)", closed)
print(f"max |closed - ODE| = {max(abs(closed.C - ode.C).max(), abs(closed.D - ode.D).max()):.1e}")

m = stationary_moments(cir)
print(f"\nCIR stationary mean {m.mu[0]:.3f}, variance {m.var[0]:.3f}")

# a market price of risk moves real-world drift to risk-neutral and back
mpr = MarketPriceOfRisk(np.array([0.2, -0.1, 0.3]), np.eye(3) * 0.05,
                        Flavor.ESSENTIALLY_AFFINE)
alpha = np.array([0.0, 1.0, 1.0])
beta = np.array([0.1, 0.0, 0.0])
kinds = ["CIR", "Vasicek", "Vasicek"]
k_rw, w_rw = np.diag([0.5, 0.2, 0.8]), np.array([1.0, 0.3, 0.0])
k_rn, w_rn = to_risk_neutral(k_rw, w_rw, mpr, sigma, alpha, beta, kinds)
k_back, w_back = to_real_world(k_rn, w_rn, mpr, sigma, alpha, beta, kinds)
print("risk-neutral kappa diagonal", np.round(np.diag(k_rn), 4))
print(f"round-trip error {max(abs(k_back - k_rw).max(), abs(w_back - w_rw).max()):.1e}")
