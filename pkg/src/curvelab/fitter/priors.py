"""Parameter priors and their plain-text configuration format.

A prior file is INI-style with one section per model::

    [CIR]
    kappa_rn_11 = lognormal(-1.2, 1.5)
    sigma_y     = lognormal(-3.5, 1.0)

Families: ``normal(mean, sd)``, ``gamma(shape, scale)``,
``lognormal(meanlog, sdlog)`` and ``uniform(lo, hi)``.
"""
from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from scipy import stats
from scipy.special import gammaln

_LOG_2PI = math.log(2 * math.pi)
_FAMILIES = ("normal", "gamma", "lognormal", "uniform")


@dataclass(frozen=True)
class Prior:
    family: str
    a: float
    b: float

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown prior family {self.family!r}")
        if self.family == "uniform" and not self.a < self.b:
            raise ValueError("uniform prior needs lo < hi")
        if self.family != "uniform" and not self.b > 0:
            raise ValueError(f"{self.family} prior needs a positive second argument")
        if self.family == "gamma" and not self.a > 0:
            raise ValueError("gamma prior needs shape > 0")

    @classmethod
    def parse(cls, text: str) -> "Prior":
        m = re.fullmatch(r"\s*(\w+)\s*\(\s*([^,]+?)\s*,\s*([^)]+?)\s*\)\s*", text)
        if not m:
            raise ValueError(f"cannot parse prior {text!r}; expected family(a, b)")
        return cls(m.group(1).lower(), float(m.group(2)), float(m.group(3)))

    def __str__(self):
        return f"{self.family}({self.a:g}, {self.b:g})"

    @property
    def positive_support(self) -> bool:
        return self.family in ("gamma", "lognormal") or (
            self.family == "uniform" and self.a >= 0)

    def logpdf(self, x: float) -> float:
        a, b = self.a, self.b
        if self.family == "normal":
            z = (x - a) / b
            return -0.5 * z * z - math.log(b) - 0.5 * _LOG_2PI
        if self.family == "uniform":
            return -math.log(b - a) if a <= x <= b else -math.inf
        if x <= 0:
            return -math.inf
        if self.family == "gamma":
            return (a - 1) * math.log(x) - x / b - gammaln(a) - a * math.log(b)
        lx = math.log(x)
        z = (lx - a) / b
        return -0.5 * z * z - math.log(b) - lx - 0.5 * _LOG_2PI

    def center(self) -> float:
        """A typical value used to start chains."""
        if self.family == "normal":
            return self.a
        if self.family == "uniform":
            return 0.5 * (self.a + self.b)
        if self.family == "gamma":
            return max(self.a - 1, 0.5 * self.a) * self.b
        return math.exp(self.a)

    def interval(self, mass: float = 0.99):
        dist = {
            "normal": lambda: stats.norm(self.a, self.b),
            "uniform": lambda: stats.uniform(self.a, self.b - self.a),
            "gamma": lambda: stats.gamma(self.a, scale=self.b),
            "lognormal": lambda: stats.lognorm(self.b, scale=math.exp(self.a)),
        }[self.family]()
        return dist.interval(mass)


def default_prior_path() -> Path:
    return Path(str(resources.files("curvelab") / "data" / "priors.ini"))


def load_priors(model: str, path=None, overrides: dict | None = None) -> dict[str, Prior]:
    """Priors for ``model`` from ``path`` (default: the shipped file)."""
    cfg = configparser.ConfigParser()
    cfg.optionxform = str
    src = Path(path) if path else default_prior_path()
    if not cfg.read(src):
        raise FileNotFoundError(src)
    if model not in cfg:
        raise KeyError(f"no [{model}] section in {src}")
    priors = {k: Prior.parse(v) for k, v in cfg[model].items()}
    for k, v in (overrides or {}).items():
        priors[k] = v if isinstance(v, Prior) else Prior.parse(v)
    return priors


def prior_log_density(params: dict, priors: dict[str, Prior]) -> float:
    total = 0.0
    for name, prior in priors.items():
        if name in params:
            total += prior.logpdf(float(params[name]))
    return total


def boundary_warnings(names, samples: np.ndarray, priors: dict[str, Prior],
                      frac: float = 0.5) -> list[str]:
    """Parameters whose posterior sits mostly outside the central 99% of the prior."""
    out = []
    for i, name in enumerate(names):
        p = priors.get(name)
        if p is None:
            continue
        if p.family == "uniform":
            # flag piling up against either edge of the support
            lo, hi = p.a + 0.01 * (p.b - p.a), p.b - 0.01 * (p.b - p.a)
        else:
            lo, hi = p.interval(0.99)
        x = samples[:, i]
        outside = np.mean((x < lo) | (x > hi))
        if outside > frac:
            out.append(f"{name}: {outside:.0%} of posterior outside the prior's 99% range "
                       f"{p}; consider widening it")
    return out
