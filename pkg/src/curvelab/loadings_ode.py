"""Numerical loadings for general A1(n) models.

The functions ``A(tau)`` and ``B(tau)`` solve

    dA/dtau = -omega_rn' B + 1/2 sum_j ([sigma' B]_j)^2 alpha_j - delta0
    dB/dtau = (1 + gamma) - kappa_rn' B - 1/2 sum_j ([sigma' B]_j)^2 beta0_j

from ``A(0) = B(0) = 0``, giving ``C = -A/tau`` and ``D = B/tau``.  The
integrator is an embedded Dormand-Prince 5(4) pair with the step clipped to
land exactly on every grid maturity.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import AffineModelSpec, MaturityGrid, variance_loadings
from .loadings_closed import LoadingTable


class ODEIntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class ODESystemParams:
    kappa_rn: np.ndarray
    omega_rn: np.ndarray
    sigma: np.ndarray
    alpha: np.ndarray
    beta0: np.ndarray  # row j: how the variance of shock j loads on the state
    delta0: float = 0.0
    gamma: np.ndarray = None

    @classmethod
    def from_spec(cls, spec: AffineModelSpec, include_shift: bool = True) -> "ODESystemParams":
        return cls(spec.kappa_rn, spec.omega_rn, spec.sigma, spec.alpha,
                   variance_loadings(spec),
                   spec.delta0 if include_shift else 0.0,
                   spec.gamma if include_shift else np.zeros(spec.n))


def ab_rhs(tau, A, B, p: ODESystemParams):
    """Right-hand sides ``(dA/dtau, dB/dtau)``."""
    B = np.asarray(B, dtype=float)
    gamma = np.zeros_like(B) if p.gamma is None else p.gamma
    u2 = (p.sigma.T @ B) ** 2
    dA = -p.omega_rn @ B + 0.5 * u2 @ p.alpha - p.delta0
    dB = 1.0 + gamma - p.kappa_rn.T @ B - 0.5 * p.beta0.T @ u2
    return dA, dB


# Dormand-Prince 5(4) tableau
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


def rk45_integrate(f, y0, t_out, rel_tol=1e-8, abs_tol=1e-10, h0=None, max_steps=100_000):
    """Integrate ``y' = f(t, y)`` from ``t = 0`` and return ``y`` at each ``t_out``.

    ``t_out`` must be positive and increasing.  Steps are adapted to keep the
    RMS of the scaled local error below one and are shortened to hit every
    output time exactly.
    """
    t_out = np.asarray(t_out, dtype=float)
    y = np.array(y0, dtype=float)
    out = np.empty((len(t_out), len(y)))
    t = 0.0
    h = h0 if h0 is not None else min(0.05, 0.5 * t_out[0])
    k = np.empty((7, len(y)))
    k[0] = f(t, y)
    steps = 0
    for i, target in enumerate(t_out):
        while t < target:
            if steps >= max_steps:
                raise ODEIntegrationError(f"step budget exhausted near tau={t:.6g}")
            h = min(h, target - t)
            if h < 1e-12 * max(1.0, abs(t)):
                raise ODEIntegrationError(
                    f"step size underflow at tau={t:.6g} (stiff or invalid parameters)")
            for s in range(1, 7):
                k[s] = f(t + _C[s] * h, y + h * (np.dot(_A[s], k[:s])))
            y_new = y + h * (_B5 @ k)
            err = h * (_E @ k)
            scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y_new))
            err_norm = np.sqrt(np.mean((err / scale) ** 2))
            steps += 1
            if not np.isfinite(err_norm):
                h *= 0.2
                continue
            if err_norm <= 1.0:
                t = target if target - (t + h) < 1e-14 * max(1.0, target) else t + h
                y = y_new
                k[0] = k[6]
                factor = 5.0 if err_norm == 0 else min(5.0, 0.9 * err_norm ** -0.2)
                h *= factor
            else:
                h *= max(0.2, 0.9 * err_norm ** -0.2)
        out[i] = y
    return out


def solve_loadings_ode(spec: AffineModelSpec, grid: MaturityGrid, rel_tol: float = 1e-8,
                       abs_tol: float = 1e-10, shift: str = "inside") -> LoadingTable:
    """Loading table from the A/B ODE system.

    ``shift="inside"`` carries ``delta0`` and ``gamma`` in the equations;
    ``shift="post"`` solves the unshifted system and then adds ``delta0`` to
    ``C`` and ``gamma`` to ``D``.  The two agree for ``delta0`` always, and
    for ``gamma`` only when ``gamma = 0``; ``"post"`` matches the additive
    closed form and ``"inside"`` the scaled one.
    """
    if not (rel_tol > 0 and abs_tol > 0):
        raise ValueError("tolerances must be positive")
    if shift not in ("inside", "post"):
        raise ValueError(f"unknown shift {shift!r}")
    p = ODESystemParams.from_spec(spec, include_shift=(shift == "inside"))
    n = spec.n
    sig_t = np.ascontiguousarray(p.sigma.T)
    kap_t = np.ascontiguousarray(p.kappa_rn.T)
    beta0_t = np.ascontiguousarray(p.beta0.T)
    drift_b = 1.0 + p.gamma
    omega, alpha, delta0 = p.omega_rn, p.alpha, p.delta0

    def f(_t, y):
        B = y[1:]
        u2 = (sig_t @ B) ** 2
        dy = np.empty(n + 1)
        dy[0] = -omega @ B + 0.5 * (u2 @ alpha) - delta0
        dy[1:] = drift_b - kap_t @ B - 0.5 * (beta0_t @ u2)
        return dy

    tau = grid.array
    sol = rk45_integrate(f, np.zeros(n + 1), tau, rel_tol, abs_tol)
    C = -sol[:, 0] / tau
    D = sol[:, 1:] / tau[:, None]
    if shift == "post":
        C = C + spec.delta0
        D = D + spec.gamma
    return LoadingTable(grid, C, D)


def loadings(spec: AffineModelSpec, grid: MaturityGrid, **kw) -> LoadingTable:
    """Closed form when the structure allows it, otherwise the ODE.

    Both paths treat ``gamma`` additively (``shift="post"``), so a model's
    loadings do not change meaning with its structure.  Passing ``shift``
    forces the ODE path.
    """
    from .loadings_closed import assemble_loadings, closed_form_eligible

    if "shift" not in kw and not closed_form_eligible(spec):
        return assemble_loadings(spec, grid)
    kw.setdefault("shift", "post")
    return solve_loadings_ode(spec, grid, **kw)
