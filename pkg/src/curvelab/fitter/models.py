"""Model templates: named parameter vectors and how they map onto a spec.

Parameter names follow one pattern throughout::

    kappa_rn_ij, omega_rn_j     risk-neutral drift
    kappa_ij, omega_j           real-world drift
    sigma_j, rho_ij, beta_j     volatility
    delta0, gamma_1, sigma_y    short-rate shift and observation noise

Indices are 1-based.  Each parameter carries a transform onto the real line
used by the sampler.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..core import AffineModelSpec, SpecError, correlated_sigma

# transform name -> (to natural, log |d natural / d u|, to unconstrained)
TRANSFORMS = {
    "identity": (lambda u: u, lambda u: 0.0, lambda x: x),
    "log": (math.exp, lambda u: u, math.log),
    "tanh": (math.tanh, lambda u: math.log1p(-math.tanh(u) ** 2) if abs(u) < 19 else -2 * abs(u),
             math.atanh),
    # for gamma_1 > -1
    "log1p": (lambda u: math.expm1(u), lambda u: u, math.log1p),
}


@dataclass(frozen=True)
class ModelTemplate:
    name: str
    param_names: tuple
    transforms: tuple
    builder: Callable[[dict], AffineModelSpec]
    kinds: tuple

    @property
    def n_params(self) -> int:
        return len(self.param_names)

    @property
    def n_factors(self) -> int:
        return len(self.kinds)

    def to_natural(self, u: np.ndarray):
        """Natural-scale values and the summed log-Jacobian for ``u``."""
        x = np.empty(len(u))
        logj = 0.0
        for i, t in enumerate(self.transforms):
            fwd, lj, _ = TRANSFORMS[t]
            x[i] = fwd(u[i])
            logj += lj(u[i])
        return x, logj

    def to_unconstrained(self, x) -> np.ndarray:
        return np.array([TRANSFORMS[t][2](float(v)) for t, v in zip(self.transforms, x)])

    def as_dict(self, x) -> dict:
        return dict(zip(self.param_names, map(float, x)))

    def vector(self, params: dict) -> np.ndarray:
        missing = [p for p in self.param_names if p not in params]
        if missing:
            raise KeyError(f"{self.name}: missing parameters {missing}")
        return np.array([float(params[p]) for p in self.param_names])

    def spec(self, params) -> AffineModelSpec:
        if not isinstance(params, dict):
            params = self.as_dict(params)
        return self.builder(params)

    def from_spec(self, spec: AffineModelSpec) -> dict:
        """Parameter values of this template read back from ``spec``."""
        out = {}
        for name in self.param_names:
            out[name] = _read(spec, name)
        return out


def _read(spec: AffineModelSpec, name: str) -> float:
    parts = name.split("_")
    if name == "sigma_y":
        return spec.sigma_y
    if name == "delta0":
        return spec.delta0
    if parts[0] == "gamma":
        return float(spec.gamma[int(parts[1]) - 1])
    if parts[0] == "beta":
        return float(spec.beta[int(parts[1]) - 1])
    if parts[0] == "kappa":
        mat = spec.kappa_rn if parts[1] == "rn" else spec.kappa_rw
        ij = parts[-1]
        return float(mat[int(ij[0]) - 1, int(ij[1]) - 1])
    if parts[0] == "omega":
        vec = spec.omega_rn if parts[1] == "rn" else spec.omega_rw
        return float(vec[int(parts[-1]) - 1])
    if parts[0] == "sigma":
        # standard deviation of that factor's own shock
        j = int(parts[1]) - 1
        return float(np.sqrt(spec.sigma[j] ** 2 @ np.where(spec.alpha > 0, spec.alpha, 1.0)))
    if parts[0] == "rho":
        i, j = int(parts[1][0]) - 1, int(parts[1][1]) - 1
        cov = spec.sigma @ spec.sigma.T
        return float(cov[i, j] / np.sqrt(cov[i, i] * cov[j, j]))
    raise KeyError(name)


def _kappa(p, prefix, n, entries):
    m = np.zeros((n, n))
    for ij in entries:
        m[int(ij[0]) - 1, int(ij[1]) - 1] = p[f"{prefix}_{ij}"]
    return m


def _build_cir(p):
    return AffineModelSpec.build(
        ["CIR"], p["kappa_rn_11"], p["omega_1"], None, [p["beta_1"]],
        kappa_rw=[[p["kappa_11"]]], omega_rw=[p["omega_1"]], sigma_y=p["sigma_y"])


def _build_vvv(p):
    sig = correlated_sigma([p["sigma_1"], p["sigma_2"], p["sigma_3"]],
                           _corr3(p["rho_12"], p["rho_13"], p["rho_23"]))
    return AffineModelSpec.build(
        ["Vasicek"] * 3, [p[f"kappa_rn_{j}{j}"] for j in (1, 2, 3)],
        [p[f"omega_rn_{j}"] for j in (1, 2, 3)], sig,
        kappa_rw=[p[f"kappa_{j}{j}"] for j in (1, 2, 3)],
        omega_rw=[p[f"omega_{j}"] for j in (1, 2, 3)], sigma_y=p["sigma_y"])


def _corr3(r12, r13, r23):
    return np.array([[1.0, r12, r13], [r12, 1.0, r23], [r13, r23, 1.0]])


def _cvv_sigma(p):
    sig = np.zeros((3, 3))
    sig[0, 0] = 1.0
    sig[1:, 1:] = correlated_sigma([p["sigma_2"], p["sigma_3"]], p["rho_23"])
    return sig


def _build_cvv(p, plus=False):
    k_rn = [p[f"kappa_rn_{j}{j}"] for j in (1, 2, 3)]
    k_rw = [p["kappa_11"]] + ([p["kappa_22"], p["kappa_33"]] if plus else k_rn[1:])
    return AffineModelSpec.build(
        ["CIR", "Vasicek", "Vasicek"], k_rn, [p[f"omega_rn_{j}"] for j in (1, 2, 3)],
        _cvv_sigma(p), [p["beta_1"], 0.0, 0.0],
        kappa_rw=k_rw, omega_rw=[p["omega_rn_1"], p["omega_2"], p["omega_3"]],
        delta0=p.get("delta0", 0.0),
        gamma=[p.get("gamma_1", 0.0), 0.0, 0.0], sigma_y=p["sigma_y"])


_K7 = ("11", "21", "22", "23", "31", "32", "33")


def _build_7k3b(p):
    return AffineModelSpec.build(
        ["CIR", "Vasicek", "Vasicek"], _kappa(p, "kappa_rn", 3, _K7),
        [p[f"omega_rn_{j}"] for j in (1, 2, 3)], _cvv_sigma(p),
        [p["beta_1"], p["beta_2"], p["beta_3"]],
        kappa_rw=_kappa(p, "kappa", 3, _K7),
        omega_rw=[p["omega_rn_1"], p["omega_2"], p["omega_3"]],
        delta0=p["delta0"], gamma=[p["gamma_1"], 0.0, 0.0], sigma_y=p["sigma_y"])


def _template(name, kinds, entries, builder):
    names, transforms = zip(*entries)
    return ModelTemplate(name, tuple(names), tuple(transforms), builder, tuple(kinds))


_L, _I, _T = "log", "identity", "tanh"

_CVV_CORE = [
    ("kappa_rn_11", _L), ("kappa_rn_22", _L), ("kappa_rn_33", _L),
    ("omega_rn_1", _L), ("omega_rn_2", _I), ("omega_rn_3", _I),
    ("sigma_2", _L), ("sigma_3", _L), ("rho_23", _T), ("beta_1", _L),
    ("kappa_11", _L),
]

MODELS: dict[str, ModelTemplate] = {
    "CIR": _template("CIR", ["CIR"], [
        ("kappa_rn_11", _L), ("omega_1", _L), ("beta_1", _L), ("kappa_11", _L),
        ("sigma_y", _L)], _build_cir),
    "VVV": _template("VVV", ["Vasicek"] * 3, [
        ("sigma_1", _L), ("sigma_2", _L), ("sigma_3", _L),
        ("rho_12", _T), ("rho_13", _T), ("rho_23", _T),
        ("kappa_rn_11", _L), ("kappa_rn_22", _L), ("kappa_rn_33", _L),
        ("omega_rn_1", _I), ("omega_rn_2", _I), ("omega_rn_3", _I),
        ("kappa_11", _L), ("kappa_22", _L), ("kappa_33", _L),
        ("omega_1", _I), ("omega_2", _I), ("omega_3", _I),
        ("sigma_y", _L)], _build_vvv),
    "CVV": _template("CVV", ["CIR", "Vasicek", "Vasicek"], _CVV_CORE + [
        ("omega_2", _I), ("omega_3", _I), ("sigma_y", _L)], _build_cvv),
    "CVV+": _template("CVV+", ["CIR", "Vasicek", "Vasicek"], _CVV_CORE + [
        ("kappa_22", _L), ("kappa_33", _L), ("omega_2", _I), ("omega_3", _I),
        ("delta0", _L), ("gamma_1", "log1p"), ("sigma_y", _L)],
        lambda p: _build_cvv(p, plus=True)),
    "7k3b": _template("7k3b", ["CIR", "Vasicek", "Vasicek"],
        [(f"kappa_rn_{ij}", _L if ij[0] == ij[1] else _I) for ij in _K7]
        + [("omega_rn_1", _L), ("omega_rn_2", _I), ("omega_rn_3", _I),
           ("sigma_2", _L), ("sigma_3", _L), ("rho_23", _T),
           ("beta_1", _L), ("beta_2", _L), ("beta_3", _L)]
        + [(f"kappa_{ij}", _L if ij[0] == ij[1] else _I) for ij in _K7]
        + [("omega_2", _I), ("omega_3", _I), ("delta0", _L), ("gamma_1", "log1p"),
           ("sigma_y", _L)], _build_7k3b),
}


def get_model(name: str) -> ModelTemplate:
    try:
        return MODELS[name]
    except KeyError:
        raise SpecError(f"unknown model {name!r}; choose from {', '.join(MODELS)}") from None
