"""Real-world simulation of factor paths and yield-curve scenario sets.

CIR factors step with a gamma distribution matched to the exact transition
mean and variance, so they never go negative.  Vasicek factors take normal
Euler steps whose covariance depends on the CIR factor through ``beta``.

Every scenario draws from its own counter-based (Philox) stream keyed on
``(seed, scenario)``, so results do not depend on how scenarios are spread
across threads.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import AffineModelSpec, MaturityGrid, YieldPanel, variance_loadings
from .loadings_closed import LoadingTable
from .loadings_ode import loadings as compute_loadings

# beyond this gamma shape the draw is effectively deterministic
_MAX_GAMMA_SHAPE = 1e8


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1 / 12
    horizon_steps: int = 24
    n_scenarios: int = 1000
    seed: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if self.horizon_steps < 1:
            raise ValueError("horizon_steps must be >= 1")
        if self.n_scenarios < 1:
            raise ValueError("n_scenarios must be >= 1")


@dataclass(frozen=True)
class ModelDraw:
    """One posterior draw: parameters, their loadings, and the last fitted state."""

    spec: AffineModelSpec
    state: np.ndarray
    loadings: LoadingTable

    @classmethod
    def from_spec(cls, spec, state, grid: MaturityGrid):
        return cls(spec, np.asarray(state, dtype=float), compute_loadings(spec, grid))


@dataclass(frozen=True)
class ScenarioSet:
    """Simulated paths.

    ``factor_paths`` is ``(n_scenarios, horizon + 1, n_factors)`` including the
    starting state; ``yields`` is ``(n_scenarios, horizon, n_maturities)`` for
    steps 1..horizon and ``initial_yields`` holds step 0.
    """

    factor_paths: np.ndarray
    yields: np.ndarray
    grid: MaturityGrid
    step_dt: float
    initial_yields: np.ndarray = None
    draw_index: np.ndarray = None

    @property
    def n_scenarios(self) -> int:
        return self.yields.shape[0]

    @property
    def horizon_steps(self) -> int:
        return self.yields.shape[1]

    def curves_at_step(self, k: int) -> np.ndarray:
        """Yield curves across scenarios after ``k`` steps (``k = 0`` is the start)."""
        if k == 0:
            if self.initial_yields is None:
                raise ValueError("scenario set carries no starting curves")
            return self.initial_yields
        if not 1 <= k <= self.horizon_steps:
            raise IndexError(f"step {k} outside 0..{self.horizon_steps}")
        return self.yields[:, k - 1]

    def step_of_year(self, years: float) -> int:
        k = int(round(years / self.step_dt))
        if abs(k * self.step_dt - years) > 1e-6:
            raise ValueError(f"{years}y is not a whole number of {self.step_dt}y steps")
        return k

    def curves_at_year(self, years: float) -> np.ndarray:
        return self.curves_at_step(self.step_of_year(years))


def cir_step_moments(r, omega, kappa, beta, dt):
    """Mean and variance of a CIR value ``dt`` years ahead."""
    e = np.exp(-kappa * dt)
    one_e = -np.expm1(-kappa * dt)
    mean = r * e + omega * one_e / kappa
    var = beta / (2 * kappa) * one_e * (2 * r * e + omega * one_e / kappa)
    return mean, var


def step_cir(r: float, omega: float, kappa: float, beta: float, dt: float,
             rng: np.random.Generator) -> float:
    """Gamma draw with the CIR transition mean and variance."""
    if kappa <= 0:
        raise ValueError("explosive CIR (kappa <= 0) is not simulated")
    if r < 0 or beta < 0:
        raise ValueError("CIR step needs r >= 0 and beta >= 0")
    mean, var = cir_step_moments(r, omega, kappa, beta, dt)
    if mean <= 0:
        return 0.0
    if var <= 0:
        return float(mean)
    shape = mean * mean / var
    if shape > _MAX_GAMMA_SHAPE:
        return max(0.0, float(mean + np.sqrt(var) * rng.standard_normal()))
    return float(rng.gamma(shape, var / mean))


def vasicek_step_moments(r, spec: AffineModelSpec, dt: float):
    """Euler mean and covariance of the Vasicek block one step ahead."""
    v = spec.vasicek_index
    r = np.asarray(r, dtype=float)
    mean = r[v] + (spec.omega_rw[v] - spec.kappa_rw[v] @ r) * dt
    shock_var = spec.alpha[v] + variance_loadings(spec)[v] @ r
    s = spec.sigma[np.ix_(v, v)]
    cov = (s * shock_var) @ s.T * dt
    return mean, cov


def step_vasicek_block(r, spec: AffineModelSpec, dt: float,
                       rng: np.random.Generator) -> np.ndarray:
    """New values of all Vasicek factors (a pair in A1(3) models).

    Built from independent standard normals: factor ``i`` receives
    ``sum_k sigma_ik sqrt(alpha_k + beta_k r_1) eps_k sqrt(dt)``.
    """
    v = spec.vasicek_index
    r = np.asarray(r, dtype=float)
    mean = r[v] + (spec.omega_rw[v] - spec.kappa_rw[v] @ r) * dt
    shock_var = spec.alpha[v] + variance_loadings(spec)[v] @ r
    if np.any(shock_var < 0):
        raise ValueError("negative Vasicek shock variance")
    eps = rng.standard_normal(int(v.sum()))
    return mean + spec.sigma[np.ix_(v, v)] @ (np.sqrt(shock_var) * eps) * np.sqrt(dt)


# alias matching the three-factor naming
step_vasicek_pair = step_vasicek_block


def step_factors(r, spec: AffineModelSpec, dt: float, rng: np.random.Generator) -> np.ndarray:
    """Advance every factor one step from the same starting state."""
    r = np.asarray(r, dtype=float)
    out = np.empty_like(r)
    cir = spec.cir_index
    for j in np.flatnonzero(cir):
        out[j] = step_cir(r[j], spec.omega_rw[j], spec.kappa_rw[j, j], spec.beta[j], dt, rng)
    if (~cir).any():
        out[~cir] = step_vasicek_block(r, spec, dt, rng)
    return out


def _stepper(spec: AffineModelSpec, dt: float):
    # precomputed version of step_factors for long loops
    cir = np.flatnonzero(spec.cir_index)
    v = spec.vasicek_index
    nv = int(v.sum())
    cir_par = [(j, spec.omega_rw[j], spec.kappa_rw[j, j], spec.beta[j]) for j in cir]
    om_v, k_v = spec.omega_rw[v], spec.kappa_rw[v]
    a_v, b_v = spec.alpha[v], variance_loadings(spec)[v]
    s_v = spec.sigma[np.ix_(v, v)] * np.sqrt(dt)

    def step(r, rng):
        out = np.empty_like(r)
        for j, om, ka, be in cir_par:
            out[j] = step_cir(r[j], om, ka, be, dt, rng)
        if nv:
            shock_var = a_v + b_v @ r
            eps = rng.standard_normal(nv)
            out[v] = r[v] + (om_v - k_v @ r) * dt + s_v @ (np.sqrt(shock_var) * eps)
        return out

    return step


def simulate_path(spec: AffineModelSpec, r0, n_steps: int, dt: float,
                  rng: np.random.Generator) -> np.ndarray:
    """Factor path of shape ``(n_steps + 1, n)`` starting at ``r0``."""
    step = _stepper(spec, dt)
    path = np.empty((n_steps + 1, spec.n))
    path[0] = r0
    for t in range(n_steps):
        path[t + 1] = step(path[t], rng)
    return path


def scenario_rng(seed: int, scenario: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(scenario,))))


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("CURVELAB_THREADS", "1")))
    except ValueError:
        return 1


def simulate(draws, cfg: SimConfig, threads: int | None = None) -> ScenarioSet:
    """Scenario set from posterior draws.

    Each scenario picks a draw uniformly at random, starts from that draw's
    final fitted state, evolves with the real-world dynamics and maps the
    states to yields with that draw's (risk-neutral) loadings.
    """
    draws = list(draws)
    if not draws:
        raise ValueError("no posterior draws to simulate from")
    grid = draws[0].loadings.grid
    if any(d.loadings.grid != grid for d in draws):
        raise ValueError("all draws must share one maturity grid")
    n = draws[0].spec.n
    S, H = cfg.n_scenarios, cfg.horizon_steps
    paths = np.empty((S, H + 1, n))
    yields = np.empty((S, H, len(grid)))
    initial = np.empty((S, len(grid)))
    which = np.empty(S, dtype=np.int64)

    def run(s):
        rng = scenario_rng(cfg.seed, s)
        d = int(rng.integers(len(draws)))
        draw = draws[d]
        path = simulate_path(draw.spec, draw.state, H, cfg.dt, rng)
        curves = draw.loadings.yields(path)
        paths[s] = path
        initial[s] = curves[0]
        yields[s] = curves[1:]
        which[s] = d

    threads = thread_count() if threads is None else threads
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, range(S)))
    else:
        for s in range(S):
            run(s)
    return ScenarioSet(paths, yields, grid, cfg.dt, initial, which)


def simulate_panel(spec: AffineModelSpec, grid: MaturityGrid, n_dates: int, dt: float = 1 / 52,
                   seed: int = 0, r0=None, noise: bool = True, start="2018-01-05"):
    """Synthetic yield panel from ``spec``: returns ``(panel, latent_path)``.

    The latent path starts at ``r0`` (default: the stationary means) and
    observations get independent ``N(0, sigma_y^2)`` errors when ``noise``.
    """
    from .risk_premium import stationary_moments

    rng = np.random.default_rng(seed)
    if r0 is None:
        r0 = stationary_moments(spec).mu
    path = simulate_path(spec, r0, n_dates - 1, dt, rng)
    rates = compute_loadings(spec, grid).yields(path)
    if noise:
        rates = rates + spec.sigma_y * rng.standard_normal(rates.shape)
    days = int(round(dt * 364))
    dates = np.datetime64(start) + np.arange(n_dates) * np.timedelta64(days, "D")
    return YieldPanel(dates, grid, rates, dt), path
