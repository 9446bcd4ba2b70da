"""Closed-form yield loadings for Vasicek, CIR and correlated-Vasicek mixtures.

Every function here returns ``C`` (percent) and ``D`` (dimensionless) such
that the zero-coupon yield at maturity ``tau`` is ``C(tau) + D(tau) r``.
Only risk-neutral parameters enter.
"""
from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from .core import AffineModelSpec, MaturityGrid, SpecError, variance_loadings

# above this value of h*tau the CIR formulas switch to exp(-h*tau) scaling
_OVERFLOW_GUARD = 30.0


@dataclass(frozen=True)
class LoadingTable:
    """Per-maturity constant ``C`` and factor loadings ``D`` (shape ``(n_tau, n)``)."""

    grid: MaturityGrid
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        C = np.array(self.C, dtype=float)
        D = np.array(self.D, dtype=float)
        if D.ndim == 1:
            D = D[:, None]
        if C.shape != (len(self.grid),) or D.shape[0] != len(self.grid):
            raise ValueError("loading table shapes do not match the grid")
        if not (np.all(np.isfinite(C)) and np.all(np.isfinite(D))):
            raise FloatingPointError("non-finite loadings")
        C.setflags(write=False)
        D.setflags(write=False)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", D)

    @property
    def n_factors(self) -> int:
        return self.D.shape[1]

    def yields(self, states) -> np.ndarray:
        """Map factor states ``(..., n)`` to yields ``(..., n_tau)``."""
        return np.asarray(states, dtype=float) @ self.D.T + self.C


def _check_tau(tau):
    tau = np.asarray(tau, dtype=float)
    if np.any(tau <= 0):
        raise ValueError("maturities must be > 0")
    return tau


def vasicek_D(kappa_rn, tau):
    tau = _check_tau(tau)
    if kappa_rn == 0:
        raise ValueError("kappa_rn = 0 is not supported; the formulas divide by it")
    x = kappa_rn * tau
    return -np.expm1(-x) / x


def vasicek_loadings(kappa_rn: float, omega_rn: float, sigma: float, tau):
    """Vasicek ``(C, D)`` at maturity ``tau``.

    >>> C, D = vasicek_loadings(1.0, 1.0, 0.0, 1.0)
    >>> round(float(D), 7), round(float(C), 7)
    (0.6321206, 0.3678794)
    """
    D = vasicek_D(kappa_rn, tau)
    tau = np.asarray(tau, dtype=float)
    q = omega_rn / kappa_rn
    C = q - q * D + (sigma / (2 * kappa_rn)) ** 2 * (kappa_rn * tau * D ** 2 + 2 * D - 2)
    return C, D


def cir_loadings(kappa_rn: float, omega_rn: float, beta: float, tau):
    """CIR ``(C, D)`` at maturity ``tau`` for instantaneous variance ``beta * r``."""
    tau = _check_tau(tau)
    if not beta > 0:
        raise ValueError("CIR loadings need beta > 0")
    h = np.sqrt(kappa_rn ** 2 + 2 * beta)
    ht = h * tau
    with np.errstate(over="ignore"):
        big = ht > _OVERFLOW_GUARD
        # direct form
        em1 = np.expm1(np.where(big, 0.0, ht))
        denom = (kappa_rn + h) * em1 + 2 * h
        log2hq_direct = np.log(2 * h) - np.log(denom)
        d_direct = 2 * em1 / (denom * tau)
        # scaled form: divide numerator and denominator by exp(h*tau)
        e = np.exp(-np.where(big, ht, 0.0))
        denom_s = (kappa_rn + h) * (1 - e) + 2 * h * e
        log2hq_scaled = np.log(2 * h) - ht - np.log(denom_s)
        d_scaled = 2 * (1 - e) / (denom_s * tau)
    log2hq = np.where(big, log2hq_scaled, log2hq_direct)
    D = np.where(big, d_scaled, d_direct)
    C = -(omega_rn / (tau * beta)) * (2 * log2hq + kappa_rn * tau + ht)
    return C, D


def correlation_adjustment(kappa_i: float, kappa_j: float, cov_ij: float, tau):
    """Cross term added to ``C`` for two Vasicek factors with instantaneous
    covariance ``cov_ij`` (``rho * sigma_i * sigma_j``)."""
    tau = _check_tau(tau)
    ks = kappa_i + kappa_j
    bracket = (np.expm1(-tau * ks) / (tau * ks) + vasicek_D(kappa_i, tau)
               + vasicek_D(kappa_j, tau) - 1)
    return cov_ij / (kappa_i * kappa_j) * bracket


def correlated_vasicek_C(kappa_rn, omega_rn, sigmas, rho, tau):
    """Total ``C`` of a correlated Vasicek pair, including the cross term.

    ``kappa_rn``, ``omega_rn`` and ``sigmas`` are length-2 sequences.  The
    ``D`` functions are those of the individual factors.
    """
    k1, k2 = kappa_rn
    C1, _ = vasicek_loadings(k1, omega_rn[0], sigmas[0], tau)
    C2, _ = vasicek_loadings(k2, omega_rn[1], sigmas[1], tau)
    return C1 + C2 + correlation_adjustment(k1, k2, rho * sigmas[0] * sigmas[1], tau)


def closed_form_eligible(spec: AffineModelSpec) -> list[str]:
    """Reasons the closed forms do not apply to ``spec`` (empty if they do)."""
    reasons = []
    off = spec.kappa_rn - np.diag(np.diag(spec.kappa_rn))
    if np.any(off != 0):
        reasons.append("risk-neutral kappa matrix is not diagonal")
    if np.any(np.diag(spec.kappa_rn) == 0):
        reasons.append("a diagonal risk-neutral kappa is 0")
    if np.any(spec.beta[spec.vasicek_index] != 0):
        reasons.append("Vasicek variances depend on the CIR factor")
    cir = spec.cir_index
    if np.any(spec.sigma[np.ix_(~cir, cir)] != 0) or np.any(spec.sigma[np.ix_(cir, ~cir)] != 0):
        reasons.append("volatility couples CIR and Vasicek shocks")
    return reasons


def vasicek_covariance(spec: AffineModelSpec) -> np.ndarray:
    """Instantaneous covariance of the Vasicek shocks, ``Σ_V diag(α_V) Σ_V'``."""
    v = spec.vasicek_index
    s = spec.sigma[np.ix_(v, v)]
    return s @ np.diag(spec.alpha[v]) @ s.T


def assemble_loadings(spec: AffineModelSpec, grid: MaturityGrid,
                      gamma_mode: str = "additive") -> LoadingTable:
    """Closed-form loading table for a spec with diagonal risk-neutral drift.

    ``delta0`` is added to ``C``.  ``gamma_mode`` chooses how the short-rate
    weights ``delta = 1 + gamma`` enter:

    ``"additive"``
        ``D_j + gamma_j``, the post-shift used by the CVV+ model.
    ``"scaled"``
        each factor is priced as the scaled process ``delta_j r_j``, so
        ``D_j`` becomes ``delta_j D_j`` with drift and variance rescaled.
        This is what the loading ODE produces with ``gamma`` inside it.
    """
    reasons = closed_form_eligible(spec)
    if reasons:
        raise SpecError("closed-form loadings unavailable: " + "; ".join(reasons)
                        + " (use loadings_ode.solve_loadings_ode)")
    if gamma_mode not in ("additive", "scaled"):
        raise ValueError(f"unknown gamma_mode {gamma_mode!r}")
    tau = grid.array
    n = spec.n
    kap = np.diag(spec.kappa_rn)
    scale = spec.delta if gamma_mode == "scaled" else np.ones(n)
    omega = spec.omega_rn * scale
    beta = variance_loadings(spec).diagonal() * scale

    v_idx = np.flatnonzero(spec.vasicek_index)
    cov = vasicek_covariance(spec) * np.outer(scale[v_idx], scale[v_idx])

    C = np.full(len(tau), spec.delta0)
    D = np.empty((len(tau), n))
    for j in range(n):
        if spec.cir_index[j]:
            Cj, Dj = cir_loadings(kap[j], omega[j], beta[j], tau)
        else:
            a = np.flatnonzero(v_idx == j)[0]
            Cj, Dj = vasicek_loadings(kap[j], omega[j], np.sqrt(cov[a, a]), tau)
        C += Cj
        D[:, j] = Dj * scale[j]
    for a in range(len(v_idx)):
        for b in range(a):
            if cov[a, b] != 0:
                C += correlation_adjustment(kap[v_idx[a]], kap[v_idx[b]], cov[a, b], tau)
    if gamma_mode == "additive":
        D += spec.gamma
    return LoadingTable(grid, C, D)


class LoadingCache:
    """Small LRU cache of loading tables keyed on the pricing parameters."""

    def __init__(self, solver, maxsize: int = 64):
        self._solver = solver
        self._maxsize = maxsize
        self._store: OrderedDict = OrderedDict()

    @staticmethod
    def key(spec: AffineModelSpec, grid: MaturityGrid):
        parts = [spec.kappa_rn, spec.omega_rn, spec.sigma, spec.beta, spec.alpha, spec.gamma]
        return (tuple(k.value for k in spec.kinds), grid.taus, spec.delta0,
                b"".join(np.ascontiguousarray(p).tobytes() for p in parts))

    def __call__(self, spec: AffineModelSpec, grid: MaturityGrid) -> LoadingTable:
        k = self.key(spec, grid)
        hit = self._store.get(k)
        if hit is not None:
            self._store.move_to_end(k)
            return hit
        table = self._solver(spec, grid)
        self._store[k] = table
        if len(self._store) > self._maxsize:
            self._store.popitem(last=False)
        return table
