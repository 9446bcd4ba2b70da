"""Observation likelihood and latent-path prior densities.

Observed yields are ``N(C + D r_t, sigma_y^2)`` independently across dates
and maturities.  The latent path gets the stationary distribution at its
first date and the model's one-step transition density afterwards: a gamma
matched to the CIR transition moments and a multivariate normal Euler step
for the Vasicek block.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln

from ..core import AffineModelSpec, variance_loadings
from ..loadings_closed import LoadingTable
from ..risk_premium import stationary_moments
from ..simulator import cir_step_moments
from .priors import Prior, prior_log_density

_LOG_2PI = math.log(2 * math.pi)
_MAX_GAMMA_SHAPE = 1e8


def log_likelihood(loadings, latent, rates, sigma_y: float):
    """Gaussian observation log-likelihood.

    Parameters
    ----------
    loadings : LoadingTable or (C, D)
    latent : array (n_dates, n_factors)
    rates : array (n_dates, n_maturities)
    sigma_y : float

    Returns
    -------
    total : float
    pointwise : array (n_dates, n_maturities)
    """
    if not sigma_y > 0:
        raise ValueError("sigma_y must be > 0")
    C, D = (loadings.C, loadings.D) if isinstance(loadings, LoadingTable) else loadings
    resid = np.asarray(rates) - (np.asarray(latent) @ np.asarray(D).T + C)
    z = resid / sigma_y
    pointwise = -0.5 * z * z - math.log(sigma_y) - 0.5 * _LOG_2PI
    return float(pointwise.sum()), pointwise


def gamma_logpdf_moments(x, mean, var):
    """Log density at ``x`` of the gamma law with the given mean and variance."""
    x = np.asarray(x, dtype=float)
    mean = np.broadcast_to(np.asarray(mean, dtype=float), x.shape)
    var = np.broadcast_to(np.asarray(var, dtype=float), x.shape)
    out = np.full(x.shape, -np.inf)
    ok = (mean > 0) & (var > 0)
    shape = np.where(ok, mean * mean / np.where(ok, var, 1.0), 1.0)
    normal = ok & (shape > _MAX_GAMMA_SHAPE)
    gam = ok & ~normal & (x > 0)
    if gam.any():
        k, th, xx = shape[gam], var[gam] / mean[gam], x[gam]
        out[gam] = (k - 1) * np.log(xx) - xx / th - gammaln(k) - k * np.log(th)
    if normal.any():
        z = (x[normal] - mean[normal]) / np.sqrt(var[normal])
        out[normal] = -0.5 * z * z - 0.5 * np.log(var[normal]) - 0.5 * _LOG_2PI
    return out


class LatentDensity:
    """Precomputed pieces of the latent prior for one spec and step ``dt``."""

    def __init__(self, spec: AffineModelSpec, dt: float):
        self.spec = spec
        self.dt = dt
        self.cir = np.flatnonzero(spec.cir_index)
        self.vas = spec.vasicek_index
        self.nv = int(self.vas.sum())
        self.moments = stationary_moments(spec)
        if self.nv:
            s = spec.sigma[np.ix_(self.vas, self.vas)]
            d = np.diag(s)
            self.valid = bool(np.all(d > 0))
            self.s_inv = np.linalg.inv(s) if self.valid else None
            self.log_det_s = float(np.sum(np.log(d))) if self.valid else -np.inf
            self.b_v = variance_loadings(spec)[self.vas]
        else:
            self.valid = True

    def first(self, r0) -> float:
        """Log density of the first latent state under the stationary marginals."""
        r0 = np.asarray(r0, dtype=float)
        mu, var = self.moments.mu, self.moments.var
        total = 0.0
        if len(self.cir):
            total += float(gamma_logpdf_moments(r0[self.cir], mu[self.cir], var[self.cir]).sum())
        if self.nv:
            v = self.vas
            if np.any(var[v] <= 0):
                return -np.inf
            z = (r0[v] - mu[v]) / np.sqrt(var[v])
            total += float(np.sum(-0.5 * z * z - 0.5 * np.log(var[v]) - 0.5 * _LOG_2PI))
        return total

    def transitions(self, prev, nxt) -> np.ndarray:
        """Log transition densities for each row pair ``prev[k] -> nxt[k]``."""
        prev = np.atleast_2d(np.asarray(prev, dtype=float))
        nxt = np.atleast_2d(np.asarray(nxt, dtype=float))
        spec, dt = self.spec, self.dt
        out = np.zeros(prev.shape[0])
        for j in self.cir:
            m, v = cir_step_moments(np.maximum(prev[:, j], 0.0), spec.omega_rw[j],
                                    spec.kappa_rw[j, j], spec.beta[j], dt)
            out += gamma_logpdf_moments(nxt[:, j], m, v)
        if self.nv:
            if not self.valid:
                return np.full(prev.shape[0], -np.inf)
            v = self.vas
            mean = prev[:, v] + (spec.omega_rw[v] - prev @ spec.kappa_rw[v].T) * dt
            shock_var = spec.alpha[v] + prev @ self.b_v.T
            bad = np.any(shock_var <= 0, axis=1)
            shock_var = np.where(shock_var > 0, shock_var, 1.0)
            # the covariance factor is sigma_V diag(sqrt(shock_var * dt)), lower triangular
            u = (nxt[:, v] - mean) @ self.s_inv.T / np.sqrt(shock_var * dt)
            logdet = self.log_det_s + 0.5 * np.log(shock_var * dt).sum(axis=1)
            out += -0.5 * np.sum(u * u, axis=1) - logdet - 0.5 * self.nv * _LOG_2PI
            out[bad] = -np.inf
        return out

    def path(self, latent) -> float:
        latent = np.asarray(latent, dtype=float)
        if len(self.cir) and np.any(latent[:, self.cir] < 0):
            return -np.inf
        total = self.first(latent[0])
        if latent.shape[0] > 1:
            total += float(self.transitions(latent[:-1], latent[1:]).sum())
        return total


def latent_log_prior(spec: AffineModelSpec, latent, dt: float) -> float:
    """Log prior density of a latent factor path (``-inf`` if a CIR value is negative)."""
    return LatentDensity(spec, dt).path(latent)


def log_prior(params: dict, latent, priors: dict[str, Prior], template, dt: float) -> float:
    """Parameter priors plus the latent-path prior implied by the dynamics."""
    lp = prior_log_density(params, priors)
    if not np.isfinite(lp):
        return -np.inf
    try:
        spec = template.spec(params)
        return lp + latent_log_prior(spec, latent, dt)
    except (ValueError, np.linalg.LinAlgError):
        return -np.inf
