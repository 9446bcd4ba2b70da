"""Statistical tests for historical yield panels and simulated scenario sets.

The individual statistics (moments, rolling volatility, regressions, PCA,
R-squared) are plain functions.  :func:`evaluate_battery` runs them against
target bands and collects one verdict per test into a :class:`BatteryReport`.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields

import numpy as np

from .core import MaturityGrid, YieldPanel
from .simulator import ScenarioSet

PASS, WARN, FAIL, INFO = "pass", "warn", "fail", "informational"

# slack at band edges so round-off cannot flip a verdict
_EDGE = 1e-9


# ---------------------------------------------------------------- moments

@dataclass(frozen=True)
class Moments:
    mean: np.ndarray
    std: np.ndarray
    skew: np.ndarray
    kurtosis: np.ndarray  # excess


def moments_by_maturity(rates) -> Moments:
    """Mean, standard deviation (``ddof=1``), skewness ``m3/m2^1.5`` and
    excess kurtosis ``m4/m2^2 - 3`` of each column.

    Skewness and kurtosis are ``nan`` for a column with no variation.

    >>> m = moments_by_maturity([[1.0], [3.0], [1.0], [3.0]])
    >>> float(m.mean[0]), float(m.skew[0])
    (2.0, 0.0)
    """
    x = np.asarray(rates, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] < 4:
        raise ValueError("need at least 4 observations per maturity")
    mean = x.mean(axis=0)
    d = x - mean
    m2 = np.mean(d ** 2, axis=0)
    m3 = np.mean(d ** 3, axis=0)
    m4 = np.mean(d ** 4, axis=0)
    # relative threshold so a constant column with round-off still counts as constant
    flat = m2 <= (1e-14 * np.maximum(1.0, np.abs(mean))) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        skew = np.where(flat, np.nan, m3 / m2 ** 1.5)
        kurt = np.where(flat, np.nan, m4 / m2 ** 2 - 3.0)
    std = np.where(flat, 0.0, x.std(axis=0, ddof=1))
    return Moments(mean, std, skew, kurt)


def rolling_stat(series, window: int, stat: str = "std", transform: str = "identity",
                 dates=None) -> np.ndarray:
    """Rolling ``std`` (``ddof=1``) or ``skew`` aligned to each window's end.

    Returns ``len(series) - window + 1`` values.  With ``transform="log"``
    every value must be positive.
    """
    x = np.asarray(series, dtype=float)
    if not 2 <= window <= len(x):
        raise ValueError(f"window {window} must lie between 2 and the series length {len(x)}")
    if transform == "log":
        bad = np.flatnonzero(~(x > 0))
        if len(bad):
            where = dates[bad[0]] if dates is not None else f"index {bad[0]}"
            raise ValueError(f"log transform needs positive rates; got {x[bad[0]]} at {where}")
        x = np.log(x)
    elif transform != "identity":
        raise ValueError(f"unknown transform {transform!r}")
    win = np.lib.stride_tricks.sliding_window_view(x, window)
    if stat == "std":
        return win.std(axis=1, ddof=1)
    if stat == "skew":
        d = win - win.mean(axis=1, keepdims=True)
        m2 = np.mean(d ** 2, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(m2 > 0, np.mean(d ** 3, axis=1) / m2 ** 1.5, np.nan)
    raise ValueError(f"unknown stat {stat!r}")


# ------------------------------------------------------------ regressions

@dataclass(frozen=True)
class RegressionResult:
    """OLS fit with an intercept.  ``coef[0]`` is the intercept."""

    names: tuple
    coef: np.ndarray
    t_stats: np.ndarray
    residual_se: float
    r2: float
    n: int

    @property
    def intercept(self) -> float:
        return float(self.coef[0])

    @property
    def slopes(self) -> np.ndarray:
        return self.coef[1:]

    @property
    def slope(self) -> float:
        return float(self.coef[1])

    def __getitem__(self, name) -> float:
        return float(self.coef[self.names.index(name)])


def ols(y, regressors, names=None) -> RegressionResult:
    """Least squares of ``y`` on an intercept and the given regressor columns."""
    y = np.asarray(y, dtype=float)
    Xr = np.column_stack([np.asarray(r, dtype=float) for r in regressors])
    n, k = Xr.shape
    if n < k + 2:
        raise ValueError(f"need at least {k + 2} observations, got {n}")
    X = np.column_stack([np.ones(n), Xr])
    scale = np.maximum(np.abs(X).max(axis=0), 1e-300)
    if np.linalg.matrix_rank(X / scale) < k + 1:
        raise ValueError("regressors are collinear or constant (rank-deficient design)")
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    ssr = float(resid @ resid)
    dof = n - k - 1
    s2 = ssr / dof
    cov = s2 * np.linalg.inv(X.T @ X)
    se = np.sqrt(np.maximum(np.diag(cov), 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, coef / se, np.copysign(np.inf, coef))
    sst = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ssr / sst if sst > 0 else float("nan")
    names = tuple(names) if names else tuple(f"x{i + 1}" for i in range(k))
    return RegressionResult(("const",) + names, coef, t, float(np.sqrt(s2)), r2, n)


def monthly_last(dates, rates):
    """Keep the last observation of each calendar month."""
    months = np.asarray(dates).astype("datetime64[M]")
    keep = np.r_[months[1:] != months[:-1], True]
    return months[keep], np.asarray(rates)[keep]


def _cols(grid: MaturityGrid, taus):
    missing = [t for t in taus if t not in grid]
    if missing:
        raise ValueError(f"maturities {missing} not on the grid {list(grid.taus)}")
    return [grid.index(t) for t in taus]


def volatility_regression_arrays(paths, grid: MaturityGrid) -> dict:
    """Volatility regressions pooled over one or more paths of curves.

    Each path is ``(n_steps, n_maturities)`` at monthly spacing.  For every
    maturity the squared one-step change is regressed on the level (5y),
    slope (5y - 1y) and curvature (5y + 1y - 2 * 3y) at the earlier step.
    """
    i1, i3, i5 = _cols(grid, (1, 3, 5))
    ys, xs = [], []
    for p in paths:
        p = np.asarray(p, dtype=float)
        ys.append(np.diff(p, axis=0) ** 2)
        xs.append(p[:-1])
    dy = np.concatenate(ys)
    x = np.concatenate(xs)
    level = x[:, i5]
    slope = x[:, i5] - x[:, i1]
    curv = x[:, i5] + x[:, i1] - 2 * x[:, i3]
    return {tau: ols(dy[:, j], [level, slope, curv], ("level", "slope", "curvature"))
            for j, tau in enumerate(grid.taus)}


def volatility_regression(panel: YieldPanel, monthly: bool = True) -> dict:
    """Per-maturity volatility regressions on month-end data (``{tau: result}``)."""
    rates = panel.rates
    if monthly:
        _, rates = monthly_last(panel.dates, rates)
    if len(rates) < 10:
        raise ValueError("need at least 10 months of data")
    return volatility_regression_arrays([rates], panel.grid)


def _cs_regressor(y_n, y_1, n, horizon):
    return (y_n - y_1) * horizon / (n - horizon)


def campbell_shiller(panel: YieldPanel, n: float, horizon: float = 1) -> RegressionResult:
    """Yield-change regression ``Y(t+h, n-h) - Y(t, n)`` on
    ``(Y(t, n) - Y(t, 1)) h / (n - h)`` using month-end data."""
    if not 0 < horizon < n:
        raise ValueError("horizon must lie strictly between 0 and n")
    jn, jm, j1 = _cols(panel.grid, (n, n - horizon, 1))
    months, rates = monthly_last(panel.dates, panel.rates)
    lag = int(round(12 * horizon))
    pos = {m: i for i, m in enumerate(months)}
    pairs = [(i, pos[m + lag]) for i, m in enumerate(months) if m + lag in pos]
    if not pairs:
        raise ValueError("panel is too short for that horizon")
    a, b = np.array(pairs).T
    y = rates[b, jm] - rates[a, jn]
    x = _cs_regressor(rates[a, jn], rates[a, j1], n, horizon)
    return ols(y, [x], ("factor",))


def campbell_shiller_scenarios(scen: ScenarioSet, n: float, horizon: float) -> RegressionResult:
    """The same regression across scenarios, from the start to year ``horizon``."""
    if not 0 < horizon < n:
        raise ValueError("horizon must lie strictly between 0 and n")
    jn, jm, j1 = _cols(scen.grid, (n, n - horizon, 1))
    start = scen.curves_at_step(0)
    end = scen.curves_at_year(horizon)
    y = end[:, jm] - start[:, jn]
    x = _cs_regressor(start[:, jn], start[:, j1], n, horizon)
    return ols(y, [x], ("factor",))


def spread_regression(data, short_tau: float = 1, pair=(3, 30), year=None) -> RegressionResult:
    """Regress the ``pair[1] - pair[0]`` spread on the ``short_tau`` rate.

    ``data`` is a YieldPanel, or a ScenarioSet together with ``year``
    (the regression then runs across scenarios at that year's end).
    """
    if isinstance(data, ScenarioSet):
        if year is None:
            raise ValueError("a scenario set needs the year to evaluate")
        grid, rates = data.grid, data.curves_at_year(year)
    else:
        grid, rates = data.grid, data.rates
    js, ja, jb = _cols(grid, (short_tau, pair[0], pair[1]))
    return ols(rates[:, jb] - rates[:, ja], [rates[:, js]], ("short",))


# -------------------------------------------------------------------- PCA

@dataclass(frozen=True)
class PCAResult:
    weights: np.ndarray               # (n_components, n_maturities)
    std_devs: np.ndarray
    variance_proportions: np.ndarray
    cumulative_proportions: np.ndarray


def pca(data, mode: str = "levels", n_components: int | None = None) -> PCAResult:
    """Principal components of the covariance of the maturity columns.

    ``data`` is an array ``(n_obs, n_maturities)`` or a YieldPanel.  With
    ``mode="changes"`` consecutive rows are differenced first.  Proportions
    are relative to the total variance of all components; each weight row
    has its first nonzero entry positive.
    """
    x = np.asarray(data.rates if isinstance(data, YieldPanel) else data, dtype=float)
    if mode == "changes":
        x = np.diff(x, axis=0)
    elif mode != "levels":
        raise ValueError(f"unknown mode {mode!r}")
    m = x.shape[1]
    k = m if n_components is None else n_components
    if k > m:
        raise ValueError(f"{k} components requested from {m} maturities")
    if x.shape[0] < k + 1:
        raise ValueError(f"need at least {k + 1} observations")
    cov = np.cov(x, rowvar=False).reshape(m, m)
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals)[::-1]
    vals = np.clip(vals[order], 0.0, None)
    vecs = vecs[:, order].T
    for row in vecs:
        nz = np.flatnonzero(np.abs(row) > 1e-12)
        if len(nz) and row[nz[0]] < 0:
            row *= -1
    total = vals.sum()
    if not total > 0:
        raise ValueError("data have no variation")
    prop = vals / total
    return PCAResult(vecs[:k], np.sqrt(vals[:k]), prop[:k], np.cumsum(prop)[:k])


def r2_by_maturity(actual, fitted) -> np.ndarray:
    """``1 - var(actual - fitted) / var(actual)`` for each maturity."""
    a = np.asarray(actual.rates if isinstance(actual, YieldPanel) else actual, dtype=float)
    f = np.asarray(fitted.rates if isinstance(fitted, YieldPanel) else fitted, dtype=float)
    if a.shape != f.shape:
        raise ValueError("actual and fitted panels are not aligned")
    va = a.var(axis=0)
    if np.any(va <= 0):
        raise ValueError("a maturity has no variation in the actual data")
    return 1.0 - (a - f).var(axis=0) / va


# ----------------------------------------------------------------- report

@dataclass(frozen=True)
class Bands:
    """Target bands.  Any field can be overridden from a ``[bands]`` section."""

    skew_lo: float = -0.25
    skew_hi: float = 0.25
    skew_maturity: float = 5
    spread_slope_max: float = -0.5
    spread_se_short: float = 0.2
    spread_se_cap: float = 0.6
    pc3_min: float = 0.005
    cs_slope_max: float = 0.0
    logvol_lo: float = 0.4
    logvol_hi: float = 0.9
    logvol_window: int = 156
    r2_min: float = 0.97

    @classmethod
    def from_mapping(cls, values) -> "Bands":
        kinds = {f.name: f.type for f in fields(cls)}
        out = {}
        for k, v in dict(values).items():
            if k not in kinds:
                raise KeyError(f"unknown band {k!r}; known: {', '.join(kinds)}")
            out[k] = int(v) if kinds[k] in (int, "int") else float(v)
        return cls(**out)

    @classmethod
    def from_file(cls, path) -> "Bands":
        cfg = configparser.ConfigParser()
        cfg.optionxform = str
        if not cfg.read(path):
            raise FileNotFoundError(path)
        return cls.from_mapping(cfg["bands"]) if "bands" in cfg else cls()

    def items(self):
        return [(f.name, getattr(self, f.name)) for f in fields(self)]


@dataclass(frozen=True)
class Outcome:
    name: str
    statistic: float | None
    band: str
    verdict: str
    source: str = ""
    detail: str = ""


@dataclass
class BatteryReport:
    outcomes: list = field(default_factory=list)
    header: dict = field(default_factory=dict)

    def add(self, *args, **kw):
        o = Outcome(*args, **kw)
        if any(x.name == o.name for x in self.outcomes):
            raise ValueError(f"duplicate test {o.name}")
        self.outcomes.append(o)

    def __getitem__(self, name) -> Outcome:
        for o in self.outcomes:
            if o.name == name:
                return o
        raise KeyError(name)

    def __contains__(self, name):
        return any(o.name == name for o in self.outcomes)

    @property
    def failed(self) -> list:
        return [o for o in self.outcomes if o.verdict == FAIL]

    @property
    def passed(self) -> bool:
        return not self.failed

    def to_text(self) -> str:
        lines = [f"{k}: {v}" for k, v in self.header.items()]
        lines.append("")
        lines.append(f"{'test':<28}{'statistic':>12}  {'verdict':<14}band")
        for o in self.outcomes:
            stat = "n/a" if o.statistic is None else f"{o.statistic:.6g}"
            lines.append(f"{o.name:<28}{stat:>12}  {o.verdict:<14}{o.band}")
            if o.detail:
                lines.extend(f"    {d}" for d in o.detail.splitlines())
            if o.source:
                lines.append(f"    target: {o.source}")
        n_fail = len(self.failed)
        lines.append("")
        lines.append(f"result: {'FAIL' if n_fail else 'PASS'} ({n_fail} failed of "
                     f"{len(self.outcomes)} tests)")
        return "\n".join(lines) + "\n"

    def to_kv(self) -> str:
        lines = [f"{k}={v}" for k, v in self.header.items()]
        for o in self.outcomes:
            stat = "nan" if o.statistic is None else repr(float(o.statistic))
            lines.append(f"{o.name}.statistic={stat}")
            lines.append(f"{o.name}.band={o.band}")
            lines.append(f"{o.name}.verdict={o.verdict}")
        lines.append(f"result={'fail' if self.failed else 'pass'}")
        return "\n".join(lines) + "\n"


_SRC = {
    "skew": "5y skewness inside the band; the lower edge mirrors the upper one",
    "logvol": "1y log volatility inside the band",
    "logvol_decline": "log volatility non-increasing in maturity",
    "cs": "2y and 3y yield-change slopes below zero",
    "spread_slope": "30y-3y spread slope on the 1y rate at or below the band",
    "spread_se": "spread residual standard error under the cap for its horizon",
    "pc3": "third principal component share at or above the band",
    "r2": "smallest R-squared across maturities at or above the band",
    "volreg": "coefficients reported without a verdict",
}


def _fmt_vec(grid, values, digits=4):
    return " ".join(f"{lab}={v:.{digits}g}" for lab, v in zip(grid.labels(), values))


def _skew_verdict(s, b: Bands):
    if np.isnan(s):
        return WARN
    if s > b.skew_hi:
        return FAIL
    return WARN if s < b.skew_lo else PASS


def _declining(values) -> bool:
    return bool(np.all(np.diff(values) <= 1e-12))


def _regression_or_none(fn, *a, **kw):
    try:
        return fn(*a, **kw), ""
    except ValueError as exc:
        return None, str(exc)


def _add_moments(rep, suffix, curves, grid, b: Bands):
    skew_name = f"skew_{b.skew_maturity:g}y{suffix}"
    skew_band = f"({b.skew_lo:g}, {b.skew_hi:g})"
    try:
        m = moments_by_maturity(curves)
    except ValueError as exc:
        rep.add(f"moments{suffix}", None, "none", INFO, "", f"undefined: {exc}")
        if b.skew_maturity in grid:
            rep.add(skew_name, None, skew_band, WARN, _SRC["skew"], f"undefined: {exc}")
        return
    rep.add(f"moments{suffix}", None, "none", INFO, "",
            "mean " + _fmt_vec(grid, m.mean) + "\nstd  " + _fmt_vec(grid, m.std)
            + "\nskew " + _fmt_vec(grid, m.skew) + "\nkurt " + _fmt_vec(grid, m.kurtosis))
    if b.skew_maturity in grid:
        s = float(m.skew[grid.index(b.skew_maturity)])
        rep.add(skew_name, None if np.isnan(s) else s, skew_band, _skew_verdict(s, b),
                _SRC["skew"])


def _add_spread(rep, name, res, err, b: Bands, short_term: bool):
    if res is None:
        rep.add(f"{name}.slope", None, f"<= {b.spread_slope_max:g}", WARN, _SRC["spread_slope"],
                f"undefined: {err}")
        rep.add(f"{name}.se", None, f"< {b.spread_se_cap:g}", WARN, _SRC["spread_se"],
                f"undefined: {err}")
        return
    rep.add(f"{name}.slope", res.slope, f"<= {b.spread_slope_max:g}",
            PASS if res.slope <= b.spread_slope_max + _EDGE else FAIL, _SRC["spread_slope"])
    se = res.residual_se
    if se > b.spread_se_cap + _EDGE:
        v = FAIL
    elif short_term and se >= b.spread_se_short:
        v = WARN
    else:
        v = PASS
    band = (f"< {b.spread_se_short:g} (cap {b.spread_se_cap:g})" if short_term
            else f"<= {b.spread_se_cap:g}")
    rep.add(f"{name}.se", se, band, v, _SRC["spread_se"])


def _add_cs(rep, name, res, err, b: Bands):
    if res is None:
        rep.add(name, None, f"< {b.cs_slope_max:g}", WARN, _SRC["cs"], f"undefined: {err}")
    else:
        rep.add(name, res.slope, f"< {b.cs_slope_max:g}",
                PASS if res.slope < b.cs_slope_max else FAIL, _SRC["cs"])


def _add_pca(rep, name, data, b: Bands):
    try:
        res = pca(data, "levels")
    except ValueError as exc:
        rep.add(name, None, f">= {b.pc3_min:g}", WARN, _SRC["pc3"], f"undefined: {exc}")
        return
    p3 = float(res.variance_proportions[2]) if len(res.variance_proportions) > 2 else 0.0
    detail = "proportions " + " ".join(f"{p:.4g}" for p in res.variance_proportions[:4])
    rep.add(name, p3, f">= {b.pc3_min:g}", PASS if p3 >= b.pc3_min else FAIL, _SRC["pc3"],
            detail)


def _add_volreg(rep, results):
    if isinstance(results, str):
        rep.add("volatility_regression", None, "none", INFO, _SRC["volreg"],
                f"undefined: {results}")
        return
    lines = []
    for tau, r in results.items():
        lines.append(f"{tau:g}y: level {r['level']:.4g} (|t| {abs(r.t_stats[1]):.3g}), "
                     f"slope {r['slope']:.4g} (|t| {abs(r.t_stats[2]):.3g}), "
                     f"curvature {r['curvature']:.4g} (|t| {abs(r.t_stats[3]):.3g})")
    first = next(iter(results.values()))
    rep.add("volatility_regression", first["level"], "none", INFO, _SRC["volreg"],
            "\n".join(lines))


def _add_r2(rep, actual, fitted, b: Bands):
    r2 = r2_by_maturity(actual, fitted)
    grid = actual.grid
    rep.add("r2_min", float(r2.min()), f">= {b.r2_min:g}", PASS if r2.min() >= b.r2_min else WARN,
            _SRC["r2"], "by maturity: " + _fmt_vec(grid, 100 * r2, 4) + " (%)")


def evaluate_battery(scenarios: ScenarioSet | None = None, panel: YieldPanel | None = None,
                     bands: Bands | None = None, fitted: YieldPanel | None = None,
                     years=(1, 2), header: dict | None = None) -> BatteryReport:
    """Run the tests on a scenario set or, failing that, a historical panel.

    ``fitted`` (aligned with ``panel``) adds the R-squared test.  The report
    is a pure function of its inputs.
    """
    from . import __version__

    if scenarios is None and panel is None:
        raise ValueError("give a scenario set or a panel")
    b = bands or Bands()
    rep = BatteryReport(header={"curvelab": __version__, **(header or {})})
    for k, v in b.items():
        rep.header[f"band.{k}"] = v
    if scenarios is not None:
        _scenario_tests(rep, scenarios, b, years)
        if panel is not None and fitted is not None:
            _add_r2(rep, panel, fitted, b)
    else:
        _panel_tests(rep, panel, b)
        if fitted is not None:
            _add_r2(rep, panel, fitted, b)
    return rep


def _scenario_tests(rep, scen: ScenarioSet, b: Bands, years):
    grid = scen.grid
    for y in years:
        _add_moments(rep, f".year{y:g}", scen.curves_at_year(y), grid, b)
    # log volatility of each scenario path, averaged over scenarios
    steps = np.concatenate([scen.initial_yields[:, None, :], scen.yields], axis=1) \
        if scen.initial_yields is not None else scen.yields
    if np.all(steps > 0):
        logvol = np.log(steps).std(axis=1, ddof=1).mean(axis=0)
        lv = float(logvol[0])
        rep.add("logvol_1y", lv, f"[{b.logvol_lo:g}, {b.logvol_hi:g}]",
                PASS if b.logvol_lo <= lv <= b.logvol_hi else WARN, _SRC["logvol"])
        rep.add("logvol_declining", float(logvol[0] - logvol[-1]), "non-increasing by maturity",
                PASS if _declining(logvol) else WARN, _SRC["logvol_decline"],
                _fmt_vec(grid, logvol))
    else:
        rep.add("logvol_1y", None, f"[{b.logvol_lo:g}, {b.logvol_hi:g}]", WARN, _SRC["logvol"],
                "undefined: nonpositive simulated yields")
        rep.add("logvol_declining", None, "non-increasing by maturity", WARN,
                _SRC["logvol_decline"], "undefined: nonpositive simulated yields")
    try:
        monthly = max(1, int(round(1 / 12 / scen.step_dt)))
        paths = steps[:, ::monthly]
        _add_volreg(rep, volatility_regression_arrays(paths, grid))
    except ValueError as exc:
        _add_volreg(rep, str(exc))
    for y in years:
        n = y + 1
        res, err = _regression_or_none(campbell_shiller_scenarios, scen, n, y)
        _add_cs(rep, f"campbell_shiller.year{y:g}", res, err, b)
    for i, y in enumerate(years):
        res, err = _regression_or_none(spread_regression, scen, year=y)
        _add_spread(rep, f"spread.year{y:g}", res, err, b, short_term=(i == 0))
    pooled = np.concatenate([scen.curves_at_year(y) for y in years])
    _add_pca(rep, "pca_pc3", pooled, b)


def _panel_tests(rep, panel: YieldPanel, b: Bands):
    grid = panel.grid
    _add_moments(rep, "", panel.rates, grid, b)
    window = min(b.logvol_window, panel.n_dates)
    try:
        latest = np.array([rolling_stat(panel.rates[:, j], window, "std", "log",
                                        panel.dates)[-1] for j in range(len(grid))])
        lv = float(latest[0])
        rep.add("logvol_1y", lv, f"[{b.logvol_lo:g}, {b.logvol_hi:g}]",
                PASS if b.logvol_lo <= lv <= b.logvol_hi else WARN, _SRC["logvol"],
                f"last {window}-observation window")
        rep.add("logvol_declining", float(latest[0] - latest[-1]), "non-increasing by maturity",
                PASS if _declining(latest) else WARN, _SRC["logvol_decline"],
                _fmt_vec(grid, latest))
    except ValueError as exc:
        rep.add("logvol_1y", None, f"[{b.logvol_lo:g}, {b.logvol_hi:g}]", WARN, _SRC["logvol"],
                f"undefined: {exc}")
        rep.add("logvol_declining", None, "non-increasing by maturity", WARN,
                _SRC["logvol_decline"], f"undefined: {exc}")
    res, err = _regression_or_none(volatility_regression, panel)
    _add_volreg(rep, res if res is not None else err)
    for n in (2, 3):
        res, err = _regression_or_none(campbell_shiller, panel, n, 1)
        _add_cs(rep, f"campbell_shiller.{n}y", res, err, b)
    res, err = _regression_or_none(spread_regression, panel)
    _add_spread(rep, "spread", res, err, b, short_term=False)
    _add_pca(rep, "pca_pc3", panel.rates, b)
