"""Random-walk Metropolis-within-Gibbs sampler for parameters and latent paths.

One iteration of a chain does these Metropolis updates in order:

1. all parameters with the latent path held fixed;
2. all parameters with the latent path carried along so the fitted curves
   barely change: with ``a`` the least-squares factor values of the average
   observed curve and ``L`` the map sending a fixed reference set of loadings
   into the current span, ``Z = L^-1 (X - a)`` is held fixed (the move
   includes the Jacobian of that reparameterisation);
3. the parameters that only enter the real-world drift, if any;
4. one randomly chosen parameter;
5. latent states one date at a time, alternating even and odd dates (sites
   of one parity do not neighbour each other, so they are updated together);
6. a common shift of the whole latent path.

All chains start near an approximate posterior mode found by
:func:`find_start`.  Proposal scales adapt during warmup only: a Robbins-Monro update of each
block's log scale toward the target acceptance rate, and for the parameter
block an empirical covariance of the warmup draws.  Everything is frozen for
the kept draws.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..core import MaturityGrid, SpecError, YieldPanel
from ..loadings_closed import LoadingCache
from ..loadings_ode import ODEIntegrationError, loadings as compute_loadings
from ..simulator import cir_step_moments, thread_count
from .diagnostics import loo_is, rhat
from .likelihood import LatentDensity
from .models import ModelTemplate, get_model
from .priors import Prior

_LOG_2PI = math.log(2 * math.pi)


class SamplerError(RuntimeError):
    """A chain failed to move; carries the acceptance report."""

    def __init__(self, message, acceptance=None):
        super().__init__(message)
        self.acceptance = acceptance or {}


@dataclass(frozen=True)
class MCMCConfig:
    n_chains: int = 4
    n_warmup: int = 1000
    n_kept: int = 1000
    seed: int = 0
    step_scales: dict | None = None  # initial proposal sd per parameter, unconstrained scale
    target_accept: float = 0.3
    threads: int | None = None
    n_starts: int = 4  # optimiser starts used to locate the posterior mode

    def __post_init__(self):
        if self.n_chains < 2:
            raise ValueError("at least two chains are needed for Rhat")
        if self.n_kept < 4:
            raise ValueError("n_kept must be >= 4")
        if self.n_warmup < 0:
            raise ValueError("n_warmup must be >= 0")
        if not 0.2 <= self.target_accept <= 0.4:
            raise ValueError("target_accept must lie in [0.2, 0.4]")


@dataclass
class _ParamState:
    u: np.ndarray
    x: np.ndarray
    spec: object
    table: object
    dens: LatentDensity
    log_prior: float   # parameter priors plus log-Jacobian
    anchor: np.ndarray
    lat_chol: np.ndarray
    L: np.ndarray           # maps the reference loadings onto this spec's span
    logdet_L: float


class Posterior:
    """Unnormalised posterior of one model template given a yield panel."""

    def __init__(self, template: ModelTemplate, rates, grid: MaturityGrid, dt: float,
                 priors: dict[str, Prior]):
        missing = [p for p in template.param_names if p not in priors]
        if missing:
            raise KeyError(f"no prior given for {missing}")
        self.template = template
        self.rates = np.asarray(rates, dtype=float)
        self.grid = grid
        self.dt = float(dt)
        self.priors = [priors[p] for p in template.param_names]
        self.ybar = self.rates.mean(axis=0)
        self.basis = None  # reference loadings for the curve-preserving move
        self.cir = np.flatnonzero(np.array([k == "CIR" for k in template.kinds]))
        # moves that only touch the real-world drift reuse the last loadings
        self._loadings = LoadingCache(compute_loadings, maxsize=8)

    # parameters -------------------------------------------------------
    def evaluate(self, u) -> _ParamState | None:
        u = np.asarray(u, dtype=float)
        try:
            with np.errstate(over="raise", invalid="raise"):
                x, logj = self.template.to_natural(u)
        except (OverflowError, FloatingPointError, ValueError):
            return None
        lp = logj
        for prior, v in zip(self.priors, x):
            lp += prior.logpdf(v)
        if not np.isfinite(lp):
            return None
        try:
            spec = self.template.spec(x)
            table = self._loadings(spec, self.grid)
            dens = LatentDensity(spec, self.dt)
        except (SpecError, ValueError, FloatingPointError, ODEIntegrationError,
                np.linalg.LinAlgError):
            return None
        if not (dens.valid and np.all(dens.moments.var > 0)):
            return None
        D = table.D
        n = D.shape[1]
        gram = D.T @ D
        ridge = 1e-8 * np.trace(gram) / n
        anchor = np.linalg.solve(gram + ridge * np.eye(n), D.T @ (self.ybar - table.C))
        lat_chol = self._latent_proposal(spec, dens, gram)
        if lat_chol is None:
            return None
        if self.basis is None:
            L = np.eye(n)
        else:
            L = np.linalg.solve(gram + ridge * np.eye(n), D.T @ self.basis)
        sign, logdet = np.linalg.slogdet(L)
        if sign == 0 or not np.isfinite(logdet):
            return None
        return _ParamState(u, x, spec, table, dens, lp, anchor, lat_chol, L, float(logdet))

    def _latent_proposal(self, spec, dens, gram):
        # local Gaussian precision of one date's state: its likelihood plus
        # two transitions, evaluated at the stationary mean
        mu = dens.moments.mu
        q = np.empty(spec.n)
        for j in np.flatnonzero(spec.cir_index):
            _, q[j] = cir_step_moments(max(mu[j], 1e-8), spec.omega_rw[j], spec.kappa_rw[j, j],
                                       spec.beta[j], self.dt)
        v = spec.vasicek_index
        if v.any():
            shock = spec.alpha[v] + dens.b_v @ mu
            s = spec.sigma[np.ix_(v, v)]
            q[v] = np.diag((s * shock) @ s.T) * self.dt
        if np.any(~(q > 0)):
            return None
        prec = gram / spec.sigma_y ** 2 + np.diag(2.0 / q)
        try:
            return np.linalg.cholesky(np.linalg.inv(prec))
        except np.linalg.LinAlgError:
            return None

    # data terms ---------------------------------------------------------
    def date_loglik(self, ps: _ParamState, X, rows=None) -> np.ndarray:
        y = self.rates if rows is None else self.rates[rows]
        resid = y - (X @ ps.table.D.T + ps.table.C)
        sy = ps.spec.sigma_y
        m = y.shape[1]
        return -0.5 * np.sum(resid * resid, axis=1) / sy ** 2 - m * (math.log(sy) + 0.5 * _LOG_2PI)

    def pointwise(self, ps: _ParamState, X) -> np.ndarray:
        resid = self.rates - (X @ ps.table.D.T + ps.table.C)
        z = resid / ps.spec.sigma_y
        return -0.5 * z * z - math.log(ps.spec.sigma_y) - 0.5 * _LOG_2PI

    def initial_latent(self, ps: _ParamState) -> np.ndarray:
        D, C = ps.table.D, ps.table.C
        gram = D.T @ D
        ridge = 1e-8 * np.trace(gram) / D.shape[1]
        X = np.linalg.solve(gram + ridge * np.eye(D.shape[1]), D.T @ (self.rates - C).T).T
        if len(self.cir):
            X[:, self.cir] = np.maximum(X[:, self.cir], 1e-3)
        return X


@dataclass
class _Chain:
    post: Posterior
    ps: _ParamState
    X: np.ndarray
    ll_t: np.ndarray = None
    tr: np.ndarray = None
    first: float = 0.0

    def __post_init__(self):
        self.refresh()

    def refresh(self):
        self.ll_t = self.post.date_loglik(self.ps, self.X)
        self.tr = self.ps.dens.transitions(self.X[:-1], self.X[1:])
        self.first = self.ps.dens.first(self.X[0])

    @property
    def log_post(self) -> float:
        return self.ps.log_prior + self.ll_t.sum() + self.tr.sum() + self.first


def _latent_terms(post: Posterior, ps: _ParamState, X):
    cir = post.cir
    if len(cir) and np.any(X[:, cir] < 0):
        return None
    ll_t = post.date_loglik(ps, X)
    tr = ps.dens.transitions(X[:-1], X[1:])
    first = ps.dens.first(X[0])
    total = ll_t.sum() + tr.sum() + first
    if not np.isfinite(total):
        return None
    return ll_t, tr, first, total


def _param_move(ch: _Chain, rng, idx, step, shifted: bool) -> bool:
    """Metropolis update of the coordinates ``idx`` by ``step @ z``."""
    post = ch.post
    u_new = ch.ps.u.copy()
    u_new[idx] += step @ rng.standard_normal(len(idx))
    log_u = math.log(rng.random())
    ps_new = post.evaluate(u_new)
    if ps_new is None:
        return False
    log_jac = 0.0
    if shifted:
        # hold Z = L^-1 (X - anchor) fixed while the parameters move
        M = ps_new.L @ np.linalg.inv(ch.ps.L)
        X_new = ps_new.anchor + (ch.X - ch.ps.anchor) @ M.T
        log_jac = ch.X.shape[0] * (ps_new.logdet_L - ch.ps.logdet_L)
    else:
        X_new = ch.X
    terms = _latent_terms(post, ps_new, X_new)
    if terms is None:
        return False
    ll_t, tr, first, total = terms
    if log_u < ps_new.log_prior + total + log_jac - ch.log_post:
        ch.ps, ch.X, ch.ll_t, ch.tr, ch.first = ps_new, X_new, ll_t, tr, first
        return True
    return False


def _latent_sweep(ch: _Chain, rng, scale: float) -> float:
    post, ps, X = ch.post, ch.ps, ch.X
    T, n = X.shape
    dens = ps.dens
    accepted = 0
    for parity in (0, 1):
        idx = np.arange(parity, T, 2)
        z = rng.standard_normal((len(idx), n))
        log_u = np.log(rng.random(len(idx)))
        prop = X[idx] + scale * z @ ps.lat_chol.T
        ok = np.ones(len(idx), dtype=bool)
        if len(post.cir):
            ok &= np.all(prop[:, post.cir] >= 0, axis=1)
        ll_new = post.date_loglik(ps, prop, idx)
        delta = ll_new - ch.ll_t[idx]
        # incoming transition t-1 -> t
        has_in = idx > 0
        tin = np.zeros(len(idx))
        if has_in.any():
            tin[has_in] = dens.transitions(X[idx[has_in] - 1], prop[has_in])
            delta[has_in] += tin[has_in] - ch.tr[idx[has_in] - 1]
        # outgoing transition t -> t+1
        has_out = idx < T - 1
        tout = np.zeros(len(idx))
        if has_out.any():
            tout[has_out] = dens.transitions(prop[has_out], X[idx[has_out] + 1])
            delta[has_out] += tout[has_out] - ch.tr[idx[has_out]]
        first_new = None
        if idx[0] == 0:
            first_new = dens.first(prop[0])
            delta[0] += first_new - ch.first
        with np.errstate(invalid="ignore"):
            acc = ok & np.isfinite(delta) & (log_u < delta)
        if not acc.any():
            continue
        sel = idx[acc]
        X[sel] = prop[acc]
        ch.ll_t[sel] = ll_new[acc]
        m_in = acc & has_in
        ch.tr[idx[m_in] - 1] = tin[m_in]
        m_out = acc & has_out
        ch.tr[idx[m_out]] = tout[m_out]
        if first_new is not None and acc[0]:
            ch.first = first_new
        accepted += int(acc.sum())
    return accepted / T


def _level_move(ch: _Chain, rng, scale: float) -> bool:
    shift = scale * ch.ps.lat_chol @ rng.standard_normal(ch.X.shape[1])
    log_u = math.log(rng.random())
    X_new = ch.X + shift
    terms = _latent_terms(ch.post, ch.ps, X_new)
    if terms is None:
        return False
    ll_t, tr, first, total = terms
    if log_u < total - (ch.ll_t.sum() + ch.tr.sum() + ch.first):
        ch.X, ch.ll_t, ch.tr, ch.first = X_new, ll_t, tr, first
        return True
    return False


def _profile_objective(post: Posterior, u) -> float:
    # negative log posterior with the latent path at its per-date least-squares values
    ps = post.evaluate(u)
    if ps is None:
        return 1e12
    terms = _latent_terms(post, ps, post.initial_latent(ps))
    if terms is None:
        return 1e12
    return -(ps.log_prior + terms[3])


def find_start(post: Posterior, rng, n_starts: int = 4, max_evals: int = 4000) -> np.ndarray:
    """Approximate posterior mode in unconstrained coordinates.

    Powell searches on the profiled posterior from the prior centres and
    ``n_starts - 1`` jittered copies; the best end point wins.
    """
    from scipy.optimize import minimize

    centers = np.array([p.center() for p in post.priors])
    u0 = post.template.to_unconstrained(centers)
    starts = [u0] + [u0 + 0.5 * rng.standard_normal(len(u0)) for _ in range(n_starts - 1)]
    best_u, best_f = None, np.inf
    with np.errstate(all="ignore"):
        for u in starts:
            if _profile_objective(post, u) >= 1e12:
                continue
            res = minimize(lambda v: _profile_objective(post, v), u, method="Powell",
                           options={"maxfev": max_evals, "xtol": 1e-4, "ftol": 1e-8})
            if res.fun < best_f:
                best_u, best_f = np.array(res.x), float(res.fun)
    if best_u is None:
        raise SamplerError("could not find a starting point with finite posterior density; "
                           "check the priors")
    return best_u


def _initial_state(post: Posterior, rng, u_start, max_tries=200):
    for k in range(max_tries):
        jitter = 0.02 if k < max_tries // 2 else 0.002
        u = u_start + jitter * rng.standard_normal(len(u_start))
        ps = post.evaluate(u)
        if ps is None:
            continue
        X = post.initial_latent(ps)
        if _latent_terms(post, ps, X) is not None:
            return ps, X
    raise SamplerError("no valid chain start near the posterior mode")


@dataclass
class _ChainOutput:
    u: np.ndarray
    x: np.ndarray
    latent: np.ndarray
    pointwise: np.ndarray
    acceptance: dict
    warmup_acceptance: dict = field(default_factory=dict)


def dynamics_only(template: ModelTemplate) -> np.ndarray:
    """Indices of parameters that enter only the real-world drift."""
    names = template.param_names
    out = []
    for i, name in enumerate(names):
        parts = name.split("_")
        if parts[0] == "kappa" and parts[1] != "rn":
            out.append(i)
        elif parts[0] == "omega" and parts[1] != "rn" and f"omega_rn_{parts[1]}" in names:
            out.append(i)
    return np.array(out, dtype=int)


class _Block:
    """A parameter block with an adaptive proposal ``exp(log_s) * base``."""

    def __init__(self, idx, sd0, shifted=False):
        self.idx = np.asarray(idx, dtype=int)
        self.base = np.diag(sd0[self.idx])
        self.log_s = 0.0
        self.shifted = shifted

    def step(self):
        return math.exp(self.log_s) * self.base

    def adapt_cov(self, history):
        k = len(self.idx)
        h = history[:, self.idx]
        cov = np.atleast_2d(np.cov(h, rowvar=False))
        cov = cov + np.diag(1e-6 * np.diag(cov) + 1e-12)
        try:
            base = np.linalg.cholesky(cov) * (2.38 / math.sqrt(k))
        except np.linalg.LinAlgError:
            return
        if np.all(np.isfinite(base)):
            self.base = base
            self.log_s = 0.0


def _run_chain(model, rates, taus, dt, priors, cfg: MCMCConfig, seed_seq,
               u_start) -> _ChainOutput:
    with np.errstate(all="ignore"):
        return _chain_loop(model, rates, taus, dt, priors, cfg, seed_seq, u_start)


def _chain_loop(model, rates, taus, dt, priors, cfg, seed_seq, u_start) -> _ChainOutput:
    template = get_model(model) if isinstance(model, str) else model
    post = Posterior(template, rates, MaturityGrid(tuple(taus)), dt, priors)
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    p = template.n_params
    sd0 = np.full(p, 0.05)
    for i, name in enumerate(template.param_names):
        if cfg.step_scales and name in cfg.step_scales:
            sd0[i] = cfg.step_scales[name]
    start = post.evaluate(u_start)
    if start is not None:
        post.basis = np.array(start.table.D)
    ps, X = _initial_state(post, rng, u_start)
    ch = _Chain(post, ps, X)

    every = np.arange(p)
    blocks = {"param": _Block(every, sd0), "param_shifted": _Block(every, sd0, shifted=True)}
    dyn = dynamics_only(template)
    if len(dyn):
        blocks["dynamics"] = _Block(dyn, sd0)
    # random-scan single-coordinate moves, one log scale per coordinate
    single_log_s = np.log(sd0)
    names = list(blocks) + ["single", "latent", "level"]
    log_s = {"latent": math.log(2.38 / math.sqrt(X.shape[1])), "level": -1.0}
    target = cfg.target_accept
    counts = {b: 0.0 for b in names}
    warm_counts = {b: 0.0 for b in names}
    W = cfg.n_warmup
    checkpoints = {int(W * f) for f in (0.2, 0.35, 0.5, 0.65, 0.8)} - {0}
    history = np.empty((W, p))
    T, n = X.shape
    K = cfg.n_kept
    out_u = np.empty((K, p))
    out_x = np.empty((K, p))
    out_lat = np.empty((K, T, n))
    out_pw = np.empty((K, T, rates.shape[1]))

    for it in range(W + K):
        warm = it < W
        acc = {}
        for b, blk in blocks.items():
            acc[b] = _param_move(ch, rng, blk.idx, blk.step(), blk.shifted)
        j = int(rng.integers(p))
        acc["single"] = _param_move(ch, rng, every[j:j + 1],
                                    np.array([[math.exp(single_log_s[j])]]), False)
        acc["latent"] = _latent_sweep(ch, rng, math.exp(log_s["latent"]))
        acc["level"] = _level_move(ch, rng, math.exp(log_s["level"]))
        if warm:
            rate = min(1.0, 10.0 / (it + 1) ** 0.6)
            for b, blk in blocks.items():
                blk.log_s += (float(acc[b]) - target) * rate
            single_log_s[j] += (float(acc["single"]) - 0.44) * min(1.0, 10.0 / (it / p + 1) ** 0.6)
            for b in ("latent", "level"):
                log_s[b] += (float(acc[b]) - target) * rate
            for b in names:
                warm_counts[b] += acc[b]
            history[it] = ch.ps.u
            if it + 1 in checkpoints:
                h = history[(it + 1) // 2: it + 1]
                for blk in blocks.values():
                    blk.adapt_cov(h)
            # keep the cached per-date terms from drifting through round-off
            if it % 200 == 199:
                ch.refresh()
        else:
            k = it - W
            for b in names:
                counts[b] += acc[b]
            out_u[k] = ch.ps.u
            out_x[k] = ch.ps.x
            out_lat[k] = ch.X
            out_pw[k] = post.pointwise(ch.ps, ch.X)
    acceptance = {b: counts[b] / K for b in names}
    warm_acc = {b: (warm_counts[b] / W if W else float("nan")) for b in names}
    return _ChainOutput(out_u, out_x, out_lat, out_pw, acceptance, warm_acc)


@dataclass
class FitResult:
    """Posterior draws and diagnostics from :func:`metropolis_fit`.

    ``samples`` is ``(n_kept_total, n_params)`` on the natural scale with
    chains stacked in order; ``chain`` gives each row's chain index.
    """

    model: str
    param_names: tuple
    samples: np.ndarray
    chain: np.ndarray
    latent_paths: np.ndarray
    pointwise_loglik: np.ndarray
    rhat: dict
    loo: float
    loo_penalty: float
    log_lik: float
    acceptance_rates: dict
    grid: MaturityGrid
    dt: float
    dates: np.ndarray = None
    warnings: list = field(default_factory=list)
    n_degenerate_loo: int = 0
    config: dict = field(default_factory=dict)

    @property
    def template(self) -> ModelTemplate:
        return get_model(self.model)

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.samples[:, self.param_names.index(name)]

    def posterior_means(self) -> dict:
        return dict(zip(self.param_names, self.samples.mean(axis=0)))

    def spec_at(self, k: int):
        return self.template.spec(self.samples[k])

    def stationary_draws(self):
        """Per-sample stationary means ``(n_samples, n_factors)`` and mean short rates."""
        from ..risk_premium import stationary_moments

        mus, var, rates = [], [], []
        for k in range(self.n_samples):
            m = stationary_moments(self.spec_at(k))
            mus.append(m.mu)
            var.append(m.var)
            rates.append(m.mean_short_rate)
        return np.array(mus), np.array(var), np.array(rates)

    def draws(self, max_draws: int | None = 200):
        """Posterior draws for simulation: parameters, loadings and final latent state.

        At most ``max_draws`` evenly spaced samples are used (all if ``None``).
        """
        from ..simulator import ModelDraw

        idx = np.arange(self.n_samples)
        if max_draws is not None and self.n_samples > max_draws:
            idx = np.unique(np.linspace(0, self.n_samples - 1, max_draws).round().astype(int))
        return [ModelDraw.from_spec(self.spec_at(k), self.latent_paths[k, -1], self.grid)
                for k in idx]

    def fitted_rates(self, max_draws: int | None = 200) -> np.ndarray:
        """Posterior mean of ``C + D r_t`` over (at most ``max_draws``) samples."""
        idx = np.arange(self.n_samples)
        if max_draws is not None and self.n_samples > max_draws:
            idx = np.unique(np.linspace(0, self.n_samples - 1, max_draws).round().astype(int))
        total = 0.0
        for k in idx:
            table = compute_loadings(self.spec_at(k), self.grid)
            total = total + table.yields(self.latent_paths[k])
        return total / len(idx)

    def fitted_panel(self, panel: YieldPanel, max_draws: int | None = 200) -> YieldPanel:
        return panel.with_rates(self.fitted_rates(max_draws))

    def summary(self) -> str:
        from .. import __version__

        mus, var, msr = self.stationary_draws()
        lines = [f"curvelab {__version__} fit summary", f"model: {self.model}"]
        for k in sorted(self.config):
            lines.append(f"{k}: {self.config[k]}")
        lines.append("")
        lines.append(f"{'parameter':<14}{'mean':>12}{'sd':>12}{'rhat':>8}")
        sd = self.samples.std(axis=0, ddof=1)
        for i, name in enumerate(self.param_names):
            lines.append(f"{name:<14}{self.samples[:, i].mean():>12.5g}{sd[i]:>12.4g}"
                         f"{self.rhat[name]:>8.3f}")
        lines.append("")
        lines.append("stationary moments (posterior mean)")
        lines.append(f"{'factor':<14}{'mean':>12}{'variance':>12}")
        for j in range(mus.shape[1]):
            lines.append(f"{j + 1:<14}{mus[:, j].mean():>12.5g}{var[:, j].mean():>12.5g}")
        lines.append(f"{'short rate':<14}{msr.mean():>12.5g}")
        lines.append("")
        lines.append(f"{'loo':<14}{self.loo:>12.2f}")
        lines.append(f"{'penalty':<14}{self.loo_penalty:>12.2f}")
        lines.append(f"{'LL':<14}{self.log_lik:>12.2f}")
        if self.n_degenerate_loo:
            lines.append(f"loo points with degenerate weights: {self.n_degenerate_loo}")
        lines.append("")
        lines.append("acceptance rates (kept draws, mean over chains)")
        for b, rates_ in self.acceptance_rates.items():
            lines.append(f"  {b:<14}{np.mean(rates_):.3f}")
        lines.append("")
        lines.append("warnings:" + ("" if self.warnings else " none"))
        lines.extend(f"  {w}" for w in self.warnings)
        return "\n".join(lines) + "\n"


def metropolis_fit(panel: YieldPanel, template, priors: dict[str, Prior] | None = None,
                   cfg: MCMCConfig | None = None) -> FitResult:
    """Sample the posterior of ``template`` given ``panel``.

    ``template`` is a :class:`ModelTemplate` or a registered model name.
    ``priors`` defaults to the shipped per-model priors.  Chains are seeded
    from one ``SeedSequence`` so the result depends only on ``cfg.seed``,
    whatever the number of worker processes.
    """
    from .priors import boundary_warnings, load_priors

    cfg = cfg or MCMCConfig()
    if isinstance(template, str):
        template = get_model(template)
    if priors is None:
        priors = load_priors(template.name)
    if panel.n_dates < 3:
        raise ValueError("need at least three dates to fit")
    root = np.random.SeedSequence(cfg.seed)
    seeds = root.spawn(cfg.n_chains)
    start_rng = np.random.Generator(np.random.PCG64(root.spawn(1)[0]))
    from .models import MODELS

    model = template.name if MODELS.get(template.name) is template else template
    args = (model, np.asarray(panel.rates, dtype=float), panel.grid.taus, panel.dt,
            dict(priors), cfg)
    post = Posterior(template, args[1], panel.grid, panel.dt, priors)
    u_start = find_start(post, start_rng, cfg.n_starts)
    workers = min(cfg.n_chains, cfg.threads if cfg.threads is not None else thread_count())
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outs = list(pool.map(_run_chain, *zip(*[args + (s, u_start) for s in seeds])))
    else:
        outs = [_run_chain(*args, s, u_start) for s in seeds]

    blocks = list(outs[0].acceptance)
    acceptance = {b: [o.acceptance[b] for o in outs] for b in blocks}
    for c, o in enumerate(outs):
        dead = [b for b in blocks if o.acceptance[b] == 0]
        if dead:
            report = ", ".join(f"{b}={o.acceptance[b]:.3f}" for b in blocks)
            raise SamplerError(f"chain {c} never accepted a {'/'.join(dead)} move "
                               f"(acceptance: {report})", acceptance)

    samples = np.concatenate([o.x for o in outs])
    chain = np.repeat(np.arange(cfg.n_chains), cfg.n_kept)
    stacked = np.stack([o.x for o in outs])  # (chains, kept, params)
    rh = {name: rhat(stacked[:, :, i]) for i, name in enumerate(template.param_names)}
    pointwise = np.concatenate([o.pointwise for o in outs])
    loo = loo_is(pointwise, details=True)
    warnings = boundary_warnings(template.param_names, samples, priors)
    warnings += [f"rhat for {k} is {v:.3f}" for k, v in rh.items() if not v < 1.1]
    config = {"chains": cfg.n_chains, "warmup": cfg.n_warmup, "kept": cfg.n_kept,
              "seed": cfg.seed, "dates": panel.n_dates,
              "maturities": " ".join(f"{t:g}" for t in panel.grid.taus)}
    return FitResult(template.name, template.param_names, samples, chain,
                     np.concatenate([o.latent for o in outs]), pointwise, rh,
                     loo.loo, loo.penalty, loo.ll, acceptance, panel.grid, panel.dt,
                     np.asarray(panel.dates), warnings, loo.n_degenerate, config)
