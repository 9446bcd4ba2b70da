"""Files: yield panels, scenario dumps, fit results, loading tables and run config.

Panel CSV
    ``DATE`` then one column per maturity (``1Y``, ``2Y``, ... or ``6M``),
    ISO dates strictly increasing, values in percent.

Scenario CSV
    Long format with header ``scenario,step,tau,yield``; step 0 is the
    starting curve.  A leading ``# step_dt=...`` comment records the step.

Fit directory
    ``samples.csv`` (``chain`` then one column per parameter, one row per
    kept draw), ``latent.csv`` (``sample,date,r1..rn``), ``pointwise.npy``
    (pointwise log-likelihood), ``meta.ini`` and ``summary.txt``.
"""
from __future__ import annotations

import configparser
import csv
import io as _io
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import MaturityGrid, SpecError, YieldPanel, maturity_label
from .loadings_closed import LoadingTable
from .simulator import ScenarioSet

_LABEL = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*([YM])\s*$", re.IGNORECASE)


class PanelFormatError(ValueError):
    pass


def parse_maturity(label: str) -> float:
    m = _LABEL.match(label)
    if not m:
        raise PanelFormatError(f"cannot read maturity from column header {label!r}")
    v = float(m.group(1))
    return v if m.group(2).upper() == "Y" else v / 12


def _fmt(x) -> str:
    return repr(float(x))


def infer_dt(dates) -> float:
    """Step in years from the median gap between dates (weekly gives 1/52)."""
    d = np.diff(np.asarray(dates).astype("datetime64[D]").astype(np.int64))
    if len(d) == 0:
        return 1 / 52
    return 1.0 / max(1, round(365.25 / float(np.median(d))))


def load_panel(path, ffill: bool = False, dt: float | None = None) -> YieldPanel:
    """Read a panel CSV.

    Missing cells are an error unless ``ffill`` (then they take the previous
    date's value; a blank first row is still an error).
    """
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r and not (len(r) == 1 and not r[0].strip())]
    if not rows:
        raise PanelFormatError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if header[0].upper() != "DATE" or len(header) < 2:
        raise PanelFormatError(f"{path}: header must start with DATE followed by maturities")
    taus = [parse_maturity(h) for h in header[1:]]
    try:
        grid = MaturityGrid(tuple(taus))
    except (SpecError, ValueError) as exc:
        raise PanelFormatError(f"{path}: {exc}") from None
    dates, values = [], []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise PanelFormatError(f"{path}: row {i} has {len(row)} cells, expected {len(header)}")
        try:
            dates.append(np.datetime64(row[0].strip(), "D"))
        except ValueError:
            raise PanelFormatError(f"{path}: row {i}, column DATE: bad date {row[0]!r}") from None
        vals = []
        for j, cell in enumerate(row[1:], start=1):
            cell = cell.strip()
            if cell in ("", ".", "NA", "NaN", "nan"):
                if not ffill or not values:
                    raise PanelFormatError(f"{path}: row {i}, column {header[j]}: missing value"
                                           + ("" if ffill else " (use --ffill to carry forward)"))
                vals.append(values[-1][j - 1])
                continue
            try:
                vals.append(float(cell))
            except ValueError:
                raise PanelFormatError(
                    f"{path}: row {i}, column {header[j]}: cannot parse {cell!r}") from None
        values.append(vals)
    if not values:
        raise PanelFormatError(f"{path}: no data rows")
    dates = np.array(dates)
    bad = np.flatnonzero(np.diff(dates.astype(np.int64)) <= 0)
    if len(bad):
        raise PanelFormatError(f"{path}: dates not strictly increasing at row {bad[0] + 3}")
    return YieldPanel(dates, grid, np.array(values), dt if dt is not None else infer_dt(dates))


def save_panel(panel: YieldPanel, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["DATE"] + panel.grid.labels())
        for d, row in zip(panel.dates, panel.rates):
            w.writerow([str(np.datetime64(d, "D"))] + [_fmt(v) for v in row])


# -------------------------------------------------------------- scenarios

def scenario_csv_text(scen: ScenarioSet) -> str:
    buf = _io.StringIO()
    buf.write(f"# step_dt={_fmt(scen.step_dt)}\n")
    buf.write("scenario,step,tau,yield\n")
    taus = [f"{t:g}" for t in scen.grid.taus]
    for s in range(scen.n_scenarios):
        for k in range(scen.horizon_steps + 1):
            curve = scen.curves_at_step(k)[s]
            for t, v in zip(taus, curve):
                buf.write(f"{s},{k},{t},{_fmt(v)}\n")
    return buf.getvalue()


def write_scenarios_csv(scen: ScenarioSet, path) -> None:
    Path(path).write_text(scenario_csv_text(scen))


def read_scenarios_csv(path, step_dt: float | None = None) -> ScenarioSet:
    text = Path(path).read_text()
    lines = text.splitlines()
    dt = step_dt
    while lines and lines[0].startswith("#"):
        m = re.search(r"step_dt=([0-9.eE+-]+)", lines[0])
        if m and dt is None:
            dt = float(m.group(1))
        lines.pop(0)
    if dt is None:
        dt = 1 / 12
    if not lines or [h.strip() for h in lines[0].split(",")] != ["scenario", "step", "tau", "yield"]:
        raise ValueError(f"{path}: expected header scenario,step,tau,yield")
    data = np.loadtxt(lines[1:], delimiter=",", ndmin=2)
    s = data[:, 0].astype(int)
    k = data[:, 1].astype(int)
    taus = np.unique(data[:, 2])
    S, H = s.max() + 1, k.max()
    if len(data) != S * (H + 1) * len(taus):
        raise ValueError(f"{path}: scenario table is not complete")
    cube = np.empty((S, H + 1, len(taus)))
    cube[s, k, np.searchsorted(taus, data[:, 2])] = data[:, 3]
    grid = MaturityGrid(tuple(float(t) for t in taus))
    return ScenarioSet(np.empty((S, H + 1, 0)), cube[:, 1:], grid, dt, cube[:, 0])


def save_scenarios_npz(scen: ScenarioSet, path) -> None:
    np.savez(path, factor_paths=scen.factor_paths, yields=scen.yields,
             initial_yields=scen.initial_yields, taus=np.array(scen.grid.taus),
             step_dt=scen.step_dt,
             draw_index=scen.draw_index if scen.draw_index is not None else np.array([]))


def load_scenarios_npz(path) -> ScenarioSet:
    z = np.load(path)
    di = z["draw_index"]
    return ScenarioSet(z["factor_paths"], z["yields"], MaturityGrid(tuple(z["taus"].tolist())),
                       float(z["step_dt"]), z["initial_yields"], di if di.size else None)


def load_scenarios(path, step_dt: float | None = None) -> ScenarioSet:
    return load_scenarios_npz(path) if str(path).endswith(".npz") else \
        read_scenarios_csv(path, step_dt)


# ---------------------------------------------------------------- loadings

def loadings_csv_text(table: LoadingTable) -> str:
    n = table.n_factors
    lines = [",".join(["tau", "C"] + [f"D_{j + 1}" for j in range(n)])]
    for t, c, d in zip(table.grid.taus, table.C, table.D):
        lines.append(",".join([f"{t:g}", _fmt(c)] + [_fmt(v) for v in d]))
    return "\n".join(lines) + "\n"


# -------------------------------------------------------------------- fits

def write_fit(fit, directory) -> Path:
    """Write a FitResult to ``directory`` (created if needed)."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    with open(d / "samples.csv", "w", newline="") as fh:
        fh.write(",".join(("chain",) + tuple(fit.param_names)) + "\n")
        for c, row in zip(fit.chain, fit.samples):
            fh.write(",".join([str(int(c))] + [_fmt(v) for v in row]) + "\n")
    n = fit.latent_paths.shape[2]
    dates = ([str(np.datetime64(x, "D")) for x in fit.dates] if fit.dates is not None
             else [str(i) for i in range(fit.latent_paths.shape[1])])
    with open(d / "latent.csv", "w", newline="") as fh:
        fh.write(",".join(["sample", "date"] + [f"r{j + 1}" for j in range(n)]) + "\n")
        for k, path in enumerate(fit.latent_paths):
            for date, row in zip(dates, path):
                fh.write(",".join([str(k), date] + [_fmt(v) for v in row]) + "\n")
    np.save(d / "pointwise.npy", fit.pointwise_loglik)
    meta = configparser.ConfigParser()
    meta.optionxform = str
    meta["fit"] = {
        "model": fit.model,
        "maturities": " ".join(f"{t:g}" for t in fit.grid.taus),
        "dt": _fmt(fit.dt),
        "loo": _fmt(fit.loo),
        "loo_penalty": _fmt(fit.loo_penalty),
        "log_lik": _fmt(fit.log_lik),
        "n_degenerate_loo": str(fit.n_degenerate_loo),
    }
    meta["rhat"] = {k: _fmt(v) for k, v in fit.rhat.items()}
    meta["acceptance"] = {k: " ".join(_fmt(x) for x in v)
                          for k, v in fit.acceptance_rates.items()}
    meta["config"] = {k: str(v) for k, v in fit.config.items()}
    meta["warnings"] = {f"w{i + 1}": w for i, w in enumerate(fit.warnings)}
    with open(d / "meta.ini", "w") as fh:
        meta.write(fh)
    (d / "summary.txt").write_text(fit.summary())
    return d


def read_fit(directory):
    """Load a FitResult written by :func:`write_fit`."""
    from .fitter.mcmc import FitResult

    d = Path(directory)
    meta = configparser.ConfigParser(interpolation=None)
    meta.optionxform = str
    if not meta.read(d / "meta.ini"):
        raise FileNotFoundError(d / "meta.ini")
    with open(d / "samples.csv") as fh:
        header = fh.readline().strip().split(",")
    raw = np.loadtxt(d / "samples.csv", delimiter=",", skiprows=1, ndmin=2)
    chain = raw[:, 0].astype(int)
    samples = raw[:, 1:]
    with open(d / "latent.csv") as fh:
        lat_header = fh.readline().strip().split(",")
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    n = len(lat_header) - 2
    K = samples.shape[0]
    T = len(rows) // K
    latent = np.array([[float(v) for v in r[2:]] for r in rows]).reshape(K, T, n)
    dates_s = [r[1] for r in rows[:T]]
    try:
        dates = np.array(dates_s, dtype="datetime64[D]")
    except ValueError:
        dates = None
    f = meta["fit"]
    grid = MaturityGrid(tuple(float(t) for t in f["maturities"].split()))
    acc = {k: [float(x) for x in v.split()] for k, v in meta["acceptance"].items()}
    cfg = dict(meta["config"]) if "config" in meta else {}
    warnings = list(meta["warnings"].values()) if "warnings" in meta else []
    return FitResult(f["model"], tuple(header[1:]), samples, chain, latent,
                     np.load(d / "pointwise.npy"),
                     {k: float(v) for k, v in meta["rhat"].items()}, float(f["loo"]),
                     float(f["loo_penalty"]), float(f["log_lik"]), acc, grid, float(f["dt"]),
                     dates, warnings, int(f.get("n_degenerate_loo", "0")), cfg)


# ------------------------------------------------------------------ config

@dataclass
class RunConfig:
    """Settings for a fit/simulate/test run, read from an INI file.

    Sections: ``[run]`` (model, seed, priors), ``[mcmc]`` (chains, warmup,
    kept), ``[simulate]`` (n_scenarios, horizon_steps, dt, max_draws) and
    ``[bands]`` (see :class:`curvelab.battery.Bands`).
    """

    model: str = "CVV"
    seed: int = 0
    priors: str | None = None
    chains: int = 4
    warmup: int = 1000
    kept: int = 1000
    n_scenarios: int = 1000
    horizon_steps: int = 24
    sim_dt: float = 1 / 12
    max_draws: int = 200
    bands: dict = field(default_factory=dict)

    def __post_init__(self):
        from .fitter.models import get_model

        get_model(self.model)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        cfg = configparser.ConfigParser(interpolation=None)
        cfg.optionxform = str
        if not cfg.read(path):
            raise FileNotFoundError(path)
        kw = {}
        run = cfg["run"] if "run" in cfg else {}
        if "model" in run:
            kw["model"] = run["model"]
        if "seed" in run:
            kw["seed"] = int(run["seed"])
        if "priors" in run:
            p = Path(run["priors"])
            kw["priors"] = str(p if p.is_absolute() else Path(path).parent / p)
        mc = cfg["mcmc"] if "mcmc" in cfg else {}
        for key in ("chains", "warmup", "kept"):
            if key in mc:
                kw[key] = int(mc[key])
        sim = cfg["simulate"] if "simulate" in cfg else {}
        for key, conv in (("n_scenarios", int), ("horizon_steps", int), ("max_draws", int)):
            if key in sim:
                kw[key] = conv(sim[key])
        if "dt" in sim:
            kw["sim_dt"] = _parse_number(sim["dt"])
        if "bands" in cfg:
            kw["bands"] = dict(cfg["bands"])
        return cls(**kw)

    def echo(self) -> dict:
        return {"model": self.model, "seed": self.seed, "priors": self.priors or "default",
                "chains": self.chains, "warmup": self.warmup, "kept": self.kept,
                "n_scenarios": self.n_scenarios, "horizon_steps": self.horizon_steps,
                "sim_dt": _fmt(self.sim_dt), "max_draws": self.max_draws}


def _parse_number(text: str) -> float:
    text = text.strip()
    if "/" in text:
        a, b = text.split("/")
        return float(a) / float(b)
    return float(text)


__all__ = [
    "PanelFormatError", "RunConfig", "infer_dt", "load_panel", "load_scenarios",
    "load_scenarios_npz", "loadings_csv_text", "maturity_label", "parse_maturity", "read_fit",
    "read_scenarios_csv", "save_panel", "save_scenarios_npz", "scenario_csv_text",
    "write_fit", "write_scenarios_csv",
]
