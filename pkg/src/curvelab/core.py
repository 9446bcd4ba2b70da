"""Domain types shared by every part of the package.

All rates and factor values are in percent per annum and all times are in
years.  A model is described by :class:`AffineModelSpec`; the fitted yield
at maturity ``tau`` is ``C(tau) + sum_j D_j(tau) r_j`` where ``r_j`` are the
partial short rates.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class SpecError(ValueError):
    """Raised when a model specification violates its structural invariants."""


class FactorKind(str, enum.Enum):
    CIR = "CIR"
    VASICEK = "Vasicek"


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class MaturityGrid:
    """Ordered maturities in years, e.g. ``(1, 2, 3, 5, 7, 10, 20, 30)``."""

    taus: tuple

    def __post_init__(self):
        taus = tuple(float(t) for t in self.taus)
        if not taus:
            raise ValueError("maturity grid is empty")
        if any(t <= 0 or not np.isfinite(t) for t in taus):
            raise ValueError(f"maturities must be positive and finite: {taus}")
        if any(b <= a for a, b in zip(taus, taus[1:])):
            raise ValueError(f"maturities must be strictly increasing: {taus}")
        object.__setattr__(self, "taus", taus)

    def __len__(self):
        return len(self.taus)

    def __iter__(self):
        return iter(self.taus)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.taus)

    def index(self, tau: float) -> int:
        for i, t in enumerate(self.taus):
            if abs(t - tau) < 1e-9:
                return i
        raise KeyError(f"maturity {tau:g}y not in grid {self.labels()}")

    def __contains__(self, tau) -> bool:
        return any(abs(t - float(tau)) < 1e-9 for t in self.taus)

    def labels(self) -> list[str]:
        return [maturity_label(t) for t in self.taus]


TREASURY_GRID = MaturityGrid((1, 2, 3, 5, 7, 10, 20, 30))


def maturity_label(tau: float) -> str:
    if abs(tau - round(tau)) < 1e-9:
        return f"{int(round(tau))}Y"
    months = tau * 12
    if abs(months - round(months)) < 1e-9:
        return f"{int(round(months))}M"
    return f"{tau:g}Y"


@dataclass(frozen=True)
class YieldPanel:
    """Dated yield observations on a maturity grid.

    ``rates`` has shape ``(n_dates, n_maturities)`` and is in percent.
    ``dt`` is the observation spacing in years (weekly data: 1/52).
    """

    dates: np.ndarray
    grid: MaturityGrid
    rates: np.ndarray
    dt: float = 1 / 52

    def __post_init__(self):
        dates = np.asarray(self.dates)
        rates = np.array(self.rates, dtype=float, copy=True)
        if rates.ndim != 2 or rates.shape[1] != len(self.grid):
            raise ValueError(
                f"rates shape {rates.shape} does not match grid of {len(self.grid)} maturities")
        if len(dates) != rates.shape[0]:
            raise ValueError(f"{len(dates)} dates for {rates.shape[0]} rows of rates")
        if not np.all(np.isfinite(rates)):
            raise ValueError("panel contains missing or non-finite cells")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        rates.setflags(write=False)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "rates", rates)

    @property
    def n_dates(self) -> int:
        return self.rates.shape[0]

    def column(self, tau: float) -> np.ndarray:
        return self.rates[:, self.grid.index(tau)]

    def with_rates(self, rates) -> "YieldPanel":
        return YieldPanel(self.dates, self.grid, rates, self.dt)


@dataclass(frozen=True)
class AffineModelSpec:
    """Affine short-rate model in the matrix form used throughout the package.

    Real-world dynamics, per unit time ``dt``::

        dr = (omega_rw - kappa_rw @ r) dt + sigma @ diag(sqrt(alpha + b @ r)) eps sqrt(dt)

    where the variance loadings ``b`` come from :func:`variance_loadings`.
    Pricing uses the risk-neutral drift ``(omega_rn - kappa_rn @ r)``.  The
    short rate is ``delta0 + (1 + gamma) @ r``.

    CIR factors come first.  Correlation between Vasicek factors lives in the
    lower-triangular ``sigma`` block (see :func:`correlated_sigma`).
    """

    kinds: tuple
    kappa_rn: np.ndarray
    omega_rn: np.ndarray
    kappa_rw: np.ndarray
    omega_rw: np.ndarray
    sigma: np.ndarray
    beta: np.ndarray
    alpha: np.ndarray
    delta0: float = 0.0
    gamma: np.ndarray = None
    sigma_y: float = 0.02

    def __post_init__(self):
        kinds = tuple(FactorKind(k) for k in self.kinds)
        n = len(kinds)
        object.__setattr__(self, "kinds", kinds)
        for name, shape in (("kappa_rn", (n, n)), ("kappa_rw", (n, n)), ("sigma", (n, n)),
                            ("omega_rn", (n,)), ("omega_rw", (n,)), ("beta", (n,)),
                            ("alpha", (n,))):
            arr = _frozen(getattr(self, name))
            if arr.shape != shape:
                raise SpecError(f"{name} has shape {arr.shape}, expected {shape}")
            object.__setattr__(self, name, arr)
        gamma = np.zeros(n) if self.gamma is None else self.gamma
        gamma = _frozen(gamma)
        if gamma.shape != (n,):
            raise SpecError(f"gamma has shape {gamma.shape}, expected {(n,)}")
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "delta0", float(self.delta0))
        object.__setattr__(self, "sigma_y", float(self.sigma_y))

    @property
    def n(self) -> int:
        return len(self.kinds)

    @property
    def cir_index(self) -> np.ndarray:
        return np.array([k is FactorKind.CIR for k in self.kinds])

    @property
    def vasicek_index(self) -> np.ndarray:
        return ~self.cir_index

    @property
    def delta(self) -> np.ndarray:
        return 1.0 + self.gamma

    def replace(self, **changes) -> "AffineModelSpec":
        fields_ = {f: getattr(self, f) for f in self.__dataclass_fields__}
        fields_.update(changes)
        return AffineModelSpec(**fields_)

    @classmethod
    def build(cls, kinds: Sequence, kappa_rn, omega_rn, sigma=None, beta=None, *,
              alpha=None, kappa_rw=None, omega_rw=None, delta0=0.0, gamma=None,
              sigma_y=0.02) -> "AffineModelSpec":
        """Assemble a spec with sensible defaults.

        ``kappa_rn`` may be a vector (diagonal matrix).  ``alpha`` defaults to
        0 for CIR factors and 1 for Vasicek factors; real-world drift
        parameters default to their risk-neutral values; ``sigma`` defaults to
        the identity.
        """
        kinds = tuple(FactorKind(k) for k in kinds)
        n = len(kinds)
        kappa_rn = _as_matrix(kappa_rn, n)
        kappa_rw = kappa_rn if kappa_rw is None else _as_matrix(kappa_rw, n)
        omega_rn = np.broadcast_to(np.asarray(omega_rn, dtype=float), (n,))
        omega_rw = omega_rn if omega_rw is None else np.broadcast_to(
            np.asarray(omega_rw, dtype=float), (n,))
        sigma = np.eye(n) if sigma is None else _as_matrix(sigma, n)
        beta = np.zeros(n) if beta is None else np.broadcast_to(np.asarray(beta, float), (n,))
        if alpha is None:
            alpha = [0.0 if k is FactorKind.CIR else 1.0 for k in kinds]
        return cls(kinds, kappa_rn, omega_rn, kappa_rw, omega_rw, sigma, beta,
                   np.asarray(alpha, float), delta0, gamma, sigma_y)


def _as_matrix(a, n) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim <= 1:
        return np.diag(np.broadcast_to(a, (n,)))
    return a


def single_vasicek(kappa_rn, omega_rn, sigma, *, kappa=None, omega=None, sigma_y=0.02):
    return AffineModelSpec.build(["Vasicek"], kappa_rn, omega_rn, [[sigma]],
                                 kappa_rw=None if kappa is None else [[kappa]],
                                 omega_rw=omega, sigma_y=sigma_y)


def single_cir(kappa_rn, omega, beta, *, kappa=None, sigma_y=0.02):
    # CIR keeps omega under both measures
    return AffineModelSpec.build(["CIR"], kappa_rn, omega, None, [beta],
                                 kappa_rw=None if kappa is None else [[kappa]],
                                 sigma_y=sigma_y)


def correlated_sigma(sigmas, corr) -> np.ndarray:
    """Lower-triangular volatility block whose outer product has the given
    standard deviations and correlation matrix.

    For a pair this is ``[[s2, 0], [rho*s3, sqrt(1-rho^2)*s3]]``.
    """
    sigmas = np.asarray(sigmas, dtype=float)
    corr = np.asarray(corr, dtype=float)
    if corr.ndim == 0:
        corr = np.array([[1.0, float(corr)], [float(corr), 1.0]])
    if np.any(np.abs(corr) > 1 + 1e-12):
        raise SpecError("correlations must lie in [-1, 1]")
    cov = corr * np.outer(sigmas, sigmas)
    k = len(sigmas)
    out = np.zeros((k, k))
    # Cholesky by hand so that |rho| = 1 (semi-definite) still works
    for i in range(k):
        for j in range(i + 1):
            s = cov[i, j] - out[i, :j] @ out[j, :j]
            if i == j:
                if s < -1e-12 * max(1.0, cov[i, i]):
                    raise SpecError("correlation matrix is not positive semi-definite")
                out[i, i] = np.sqrt(max(s, 0.0))
            else:
                out[i, j] = s / out[j, j] if out[j, j] > 0 else 0.0
    return out


def variance_loadings(spec: AffineModelSpec) -> np.ndarray:
    """Matrix ``b`` with the variance of shock ``j`` equal to ``alpha_j + b[j] @ r``.

    A CIR shock loads on its own factor.  Vasicek shocks load on the first
    CIR factor (the A1(n) structure); with no CIR factor they are constant.
    """
    n = spec.n
    b = np.zeros((n, n))
    cir = np.flatnonzero(spec.cir_index)
    for j, kind in enumerate(spec.kinds):
        if kind is FactorKind.CIR:
            b[j, j] = spec.beta[j]
        elif len(cir):
            b[j, cir[0]] = spec.beta[j]
    return b


@dataclass(frozen=True)
class FactorState:
    """Partial short rates at one time."""

    r: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "r", _frozen(np.atleast_1d(self.r)))


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def raise_if_invalid(self):
        if self.violations:
            raise SpecError("; ".join(self.violations))


def _is_a1_3(spec: AffineModelSpec) -> bool:
    return spec.n == 3 and spec.kinds[0] is FactorKind.CIR and int(spec.cir_index.sum()) == 1


def validate_spec(spec: AffineModelSpec, tol: float = 0.0) -> ValidationReport:
    """Check structural invariants and return every violation found."""
    v = []
    n = spec.n
    if n < 1:
        return ValidationReport(("model needs at least one factor",))
    cir = spec.cir_index
    if any(cir[i + 1] and not cir[i] for i in range(n - 1)):
        v.append("CIR factors must precede Vasicek factors")

    for name in ("kappa_rn", "kappa_rw", "omega_rn", "omega_rw", "sigma", "beta",
                 "alpha", "gamma"):
        if not np.all(np.isfinite(getattr(spec, name))):
            v.append(f"{name} has non-finite entries")
    if not np.isfinite(spec.delta0) or spec.delta0 < 0:
        v.append("delta0 must be >= 0")
    if not spec.sigma_y > 0:
        v.append("sigma_y must be > 0")
    if np.any(spec.gamma <= -1):
        v.append("gamma_j must be > -1")
    if np.any(spec.beta < 0):
        v.append("beta_j must be >= 0")
    if np.any(spec.alpha < 0):
        v.append("alpha_j must be >= 0")

    def nz(x):
        return abs(x) > tol

    for j in range(n):
        label = j + 1
        if cir[j]:
            if not spec.beta[j] > 0:
                v.append(f"CIR requires β_{label} > 0")
            if nz(spec.alpha[j]):
                v.append(f"α_{label} must be 0 for a CIR factor")
            for k in range(n):
                if k == j:
                    continue
                if nz(spec.kappa_rn[j, k]):
                    v.append(f"κ̃_{label}{k + 1} must be 0")
                if nz(spec.kappa_rw[j, k]):
                    v.append(f"κ_{label}{k + 1} must be 0")
                if nz(spec.sigma[j, k]):
                    v.append(f"σ_{label}{k + 1} must be 0")
                if nz(spec.sigma[k, j]):
                    v.append(f"σ_{k + 1}{label} must be 0")
            if abs(spec.sigma[j, j] - 1) > tol:
                v.append(f"σ_{label}{label} must be 1 for a CIR factor")
            if abs(spec.omega_rn[j] - spec.omega_rw[j]) > tol:
                v.append(f"CIR factor {label} needs ω_{label} = ω̃_{label}")
        else:
            if not spec.alpha[j] > 0:
                v.append(f"α_{label} must be > 0 for a Vasicek factor")
            if not cir.any() and nz(spec.beta[j]):
                v.append(f"β_{label} must be 0 without a CIR factor")
    if np.any(np.abs(np.triu(spec.sigma, 1)) > tol):
        v.append("Σ must be lower-triangular")
    if np.any(np.diag(spec.sigma) < 0):
        v.append("Σ diagonal must be >= 0")

    if _is_a1_3(spec):
        if np.any(np.abs(spec.alpha[1:] - 1) > tol):
            v.append("α_2 = α_3 = 1 required in A1(3) models")
        if np.any(np.abs(spec.gamma[1:]) > tol):
            v.append("γ_2 = γ_3 = 0 required in A1(3) models")
    return ValidationReport(tuple(v))


def short_rate(state, spec: AffineModelSpec) -> float:
    """Short rate ``delta0 + sum_j (1 + gamma_j) r_j`` in percent."""
    r = state.r if isinstance(state, FactorState) else np.asarray(state, dtype=float)
    if r.shape[-1] != spec.n:
        raise ValueError(f"state has {r.shape[-1]} components, model has {spec.n} factors")
    return spec.delta0 + r @ spec.delta
