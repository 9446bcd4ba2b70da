import time

import numpy as np
import pytest

from curvelab import TREASURY_GRID, simulate_panel, single_cir
from curvelab.fitter import MCMCConfig, metropolis_fit

# one-factor CIR truth: stationary mean omega/kappa = 2, sigma_y = 0.02
CIR_TRUTH = dict(kappa_rn=0.5, omega=1.0, beta=0.1, kappa=0.5, sigma_y=0.02)

# three-factor (CIR + correlated Vasicek pair) truth with curves near 2%
CVV_TRUTH = dict(kappa_rn_11=0.3, kappa_rn_22=0.2, kappa_rn_33=0.8, omega_rn_1=0.3,
                 omega_rn_2=0.5, omega_rn_3=-0.2, sigma_2=0.3, sigma_3=0.5, rho_23=-0.5,
                 beta_1=0.1, kappa_11=0.5, omega_2=0.3, omega_3=0.0, sigma_y=0.02)


def cir_truth_spec():
    t = CIR_TRUTH
    return single_cir(t["kappa_rn"], t["omega"], t["beta"], kappa=t["kappa"],
                      sigma_y=t["sigma_y"])


@pytest.fixture(scope="session")
def cir_panel():
    panel, path = simulate_panel(cir_truth_spec(), TREASURY_GRID, 100, seed=0)
    return panel, path


@pytest.fixture(scope="session")
def timed_cir_fit(cir_panel):
    """The recovery fit (4 chains, 2000 warmup and 2000 kept draws each) and
    its wall time in seconds."""
    panel, _ = cir_panel
    cfg = MCMCConfig(n_chains=4, n_warmup=2000, n_kept=2000, seed=1, threads=1)
    t0 = time.perf_counter()
    fit = metropolis_fit(panel, "CIR", cfg=cfg)
    return fit, time.perf_counter() - t0


@pytest.fixture(scope="session")
def cir_fit(timed_cir_fit):
    return timed_cir_fit[0]


@pytest.fixture(scope="session")
def small_cir_fit(cir_panel):
    panel, _ = cir_panel
    cfg = MCMCConfig(n_chains=2, n_warmup=150, n_kept=100, seed=5, threads=1, n_starts=1)
    return metropolis_fit(panel, "CIR", cfg=cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
