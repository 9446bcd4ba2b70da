"""Market prices of risk and real-world stationary moments.

The risk-neutral drift is the real-world drift less ``Sigma D(t) Lambda(t)``
with ``D(t)^2 = diag(alpha + b r)``::

    completely affine:    D Lambda = D^2 lambda
    essentially affine:   D Lambda = D^2 lambda + J Psi r,   J = diag(0 | alpha^-1/2)

which gives ``K_rn = K + Sigma (L + J Psi)`` and ``Omega_rn = Omega - Sigma H``
with ``L = diag(lambda) b`` and ``H = lambda * alpha``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import AffineModelSpec, FactorKind, variance_loadings


class Flavor(str, enum.Enum):
    COMPLETELY_AFFINE = "completely"
    ESSENTIALLY_AFFINE = "essentially"


class NotIdentifiedError(ValueError):
    """The market price of risk cannot be recovered from the drift parameters."""


@dataclass(frozen=True)
class MarketPriceOfRisk:
    lam: np.ndarray
    psi: np.ndarray = None
    flavor: Flavor = Flavor.COMPLETELY_AFFINE

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=float)
        n = lam.shape[0]
        psi = np.zeros((n, n)) if self.psi is None else np.asarray(self.psi, dtype=float)
        flavor = Flavor(self.flavor)
        if flavor is Flavor.COMPLETELY_AFFINE and np.any(psi != 0):
            raise ValueError("completely affine prices of risk have psi = 0")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "flavor", flavor)


def _pieces(mpr: MarketPriceOfRisk, sigma, alpha, bmat, kinds):
    sigma = np.asarray(sigma, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    cir = np.array([FactorKind(k) is FactorKind.CIR for k in kinds])
    J = np.diag(np.where(cir | (alpha <= 0), 0.0, 1.0 / np.sqrt(np.where(alpha > 0, alpha, 1))))
    psi = mpr.psi.copy()
    psi[cir] = 0.0  # CIR rows never carry psi
    L = mpr.lam[:, None] * bmat
    H = mpr.lam * alpha
    return sigma @ (L + J @ psi), sigma @ H


def _kinds(kinds, alpha):
    if kinds is not None:
        return kinds
    # CIR factors are exactly those with no constant variance
    return ["CIR" if a == 0 else "Vasicek" for a in np.asarray(alpha, dtype=float)]


def _bmat(beta, kinds, n):
    spec = AffineModelSpec.build(kinds, np.ones(n), np.zeros(n), None, beta)
    return variance_loadings(spec)


def to_risk_neutral(kappa_rw, omega_rw, mpr: MarketPriceOfRisk, sigma, alpha, beta,
                    kinds=None):
    """Real-world ``(K, Omega)`` to risk-neutral ``(K_rn, Omega_rn)``.

    ``kinds`` defaults to CIR wherever ``alpha == 0``.
    """
    kappa_rw = np.asarray(kappa_rw, dtype=float)
    kinds = _kinds(kinds, alpha)
    dk, domega = _pieces(mpr, sigma, alpha, _bmat(beta, kinds, len(kinds)), kinds)
    return kappa_rw + dk, np.asarray(omega_rw, dtype=float) - domega


def to_real_world(kappa_rn, omega_rn, mpr: MarketPriceOfRisk, sigma, alpha, beta,
                  kinds=None):
    """Inverse of :func:`to_risk_neutral`."""
    kappa_rn = np.asarray(kappa_rn, dtype=float)
    kinds = _kinds(kinds, alpha)
    dk, domega = _pieces(mpr, sigma, alpha, _bmat(beta, kinds, len(kinds)), kinds)
    return kappa_rn - dk, np.asarray(omega_rn, dtype=float) + domega


def with_real_world(spec: AffineModelSpec, mpr: MarketPriceOfRisk) -> AffineModelSpec:
    """Spec whose real-world drift is implied by its risk-neutral drift and ``mpr``."""
    k, o = to_real_world(spec.kappa_rn, spec.omega_rn, mpr, spec.sigma, spec.alpha,
                         spec.beta, spec.kinds)
    return spec.replace(kappa_rw=k, omega_rw=o)


def back_out_market_price_of_risk(spec: AffineModelSpec, tol: float = 1e-9) -> MarketPriceOfRisk:
    """Recover ``lambda`` and ``Psi`` from a spec's two sets of drift parameters.

    Raises :class:`NotIdentifiedError` when a factor has neither ``alpha`` nor
    ``beta`` (its ``lambda`` multiplies nothing) or when the CIR rows are
    inconsistent with any price of risk.
    """
    n = spec.n
    bmat = variance_loadings(spec)
    try:
        h = np.linalg.solve(spec.sigma, spec.omega_rw - spec.omega_rn)
        m = np.linalg.solve(spec.sigma, spec.kappa_rn - spec.kappa_rw)
    except np.linalg.LinAlgError as exc:
        raise NotIdentifiedError("volatility matrix is singular") from exc
    lam = np.zeros(n)
    psi = np.zeros((n, n))
    cir = spec.cir_index
    for j in range(n):
        if cir[j]:
            if not bmat[j, j] > 0:
                raise NotIdentifiedError(f"factor {j + 1}: beta = 0, lambda not identified")
            lam[j] = m[j, j] / bmat[j, j]
            resid = m[j] - lam[j] * bmat[j]
            if np.any(np.abs(resid) > tol) or abs(h[j]) > tol:
                raise NotIdentifiedError(f"CIR factor {j + 1} drift is inconsistent with any "
                                         "price of risk")
        else:
            if not spec.alpha[j] > 0:
                if np.all(bmat[j] == 0):
                    raise NotIdentifiedError(f"factor {j + 1}: alpha = beta = 0, "
                                             "lambda not identified")
                raise NotIdentifiedError(f"factor {j + 1}: alpha = 0, lambda not identified")
            lam[j] = h[j] / spec.alpha[j]
            psi[j] = (m[j] - lam[j] * bmat[j]) * np.sqrt(spec.alpha[j])
    flavor = (Flavor.COMPLETELY_AFFINE if np.all(np.abs(psi) <= tol)
              else Flavor.ESSENTIALLY_AFFINE)
    if flavor is Flavor.COMPLETELY_AFFINE:
        psi = np.zeros((n, n))
    return MarketPriceOfRisk(lam, psi, flavor)


@dataclass(frozen=True)
class StationaryMoments:
    mu: np.ndarray
    var: np.ndarray
    mean_short_rate: float


def mean_short_rate(mu, delta0: float = 0.0, gamma=None) -> float:
    mu = np.asarray(mu, dtype=float)
    gamma = np.zeros_like(mu) if gamma is None else np.asarray(gamma, dtype=float)
    return float(delta0 + mu @ (1 + gamma))


def stationary_moments(spec: AffineModelSpec) -> StationaryMoments:
    """Long-run real-world means and variances of each factor.

    CIR factors revert to ``omega / kappa`` with variance
    ``beta omega / (2 kappa^2)``.  The Vasicek block solves
    ``K_VV mu_V = omega_V - K_VC mu_C`` and each variance is the expected
    one-year increment variance over ``2 kappa_jj``, with the CIR factors
    at their means.
    """
    cir = spec.cir_index
    vas = ~cir
    K, omega = spec.kappa_rw, spec.omega_rw
    mu = np.zeros(spec.n)
    kc = np.diag(K)[cir]
    if np.any(kc <= 0):
        raise ValueError("CIR factors need kappa > 0 for a stationary distribution")
    mu[cir] = omega[cir] / kc
    if vas.any():
        kvv = K[np.ix_(vas, vas)]
        rhs = omega[vas] - K[np.ix_(vas, cir)] @ mu[cir]
        if abs(np.linalg.det(kvv)) < 1e-14:
            raise ValueError("Vasicek block of kappa is singular (kappa_delta = 0)")
        mu[vas] = np.linalg.solve(kvv, rhs)
    shock_var = spec.alpha + variance_loadings(spec) @ mu
    var = 0.5 * (spec.sigma ** 2 @ shock_var) / np.diag(K)
    return StationaryMoments(mu, var, mean_short_rate(mu, spec.delta0, spec.gamma))
