"""Command-line interface: ``curvelab <command> [options]``.

Commands
--------
loadings   print the C and D loadings of a model as CSV
fit        fit a model to a panel CSV by MCMC and write a fit directory
simulate   simulate scenarios from a fit directory
test       run the test battery on a scenario dump or a panel CSV
pipeline   fit, simulate and test in one go

File formats are described in ``curvelab.io``.  Settings may come from an
INI file (``--config``); flags given on the command line win.  All
randomness derives from ``--seed``.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .core import TREASURY_GRID, AffineModelSpec, MaturityGrid, SpecError

FORMATS = """\
file formats:
  panel CSV      DATE,1Y,2Y,...,30Y  (ISO dates, yields in percent, one row per date)
  scenario CSV   scenario,step,tau,yield  (step 0 = starting curve)
  fit directory  samples.csv, latent.csv, pointwise.npy, meta.ini, summary.txt
  config INI     [run] model/seed/priors, [mcmc] chains/warmup/kept,
                 [simulate] n_scenarios/horizon_steps/dt/max_draws, [bands] ...
"""


def _number(text: str) -> float:
    """A float or a fraction such as ``1/52``."""
    from .io import _parse_number

    try:
        return _parse_number(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None

def _grid(text: str | None) -> MaturityGrid:
    if not text:
        return TREASURY_GRID
    return MaturityGrid(tuple(float(t) for t in text.split(",")))


def _add_seed(p):
    p.add_argument("--seed", type=int, default=None, help="random seed (default 0)")


def _add_run_flags(p):
    p.add_argument("--config", help="INI file with run settings")
    p.add_argument("--model", help="CIR, VVV, CVV, CVV+ or 7k3b")
    p.add_argument("--priors", help="prior INI file (default: shipped priors)")
    p.add_argument("--chains", type=int)
    p.add_argument("--warmup", type=int)
    p.add_argument("--kept", type=int)
    p.add_argument("--ffill", action="store_true", help="carry missing panel cells forward")


def _add_sim_flags(p):
    p.add_argument("--n-scenarios", type=int)
    p.add_argument("--horizon", type=int, help="number of simulation steps")
    p.add_argument("--dt", type=_number, help="simulation step in years (default 1/12)")
    p.add_argument("--max-draws", type=int, help="posterior draws used for simulation")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="curvelab", description=__doc__.split("\n")[0],
                                 epilog=FORMATS, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--version", action="version", version=f"curvelab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("loadings", help="print C and D loadings as CSV", epilog=FORMATS,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--model", required=True,
                   help="CIR or Vasicek (flags below), or a registered model with --params")
    p.add_argument("--kappa-rn", type=float)
    p.add_argument("--omega-rn", type=float)
    p.add_argument("--beta", type=float, help="CIR variance loading")
    p.add_argument("--sigma", type=float, help="Vasicek volatility")
    p.add_argument("--params", help="INI file with a [params] section for a registered model")
    p.add_argument("--maturities", help="comma-separated maturities in years")
    p.add_argument("--ode", action="store_true", help="solve the loading ODEs instead")
    p.add_argument("--out", help="write to this file instead of stdout")
    _add_seed(p)

    p = sub.add_parser("fit", help="fit a model to a panel", epilog=FORMATS,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--data", required=True, help="panel CSV")
    p.add_argument("--out", help="fit directory to write")
    p.add_argument("--summary", action="store_true", help="print the fit summary")
    _add_run_flags(p)
    _add_seed(p)

    p = sub.add_parser("simulate", help="simulate scenarios from a fit", epilog=FORMATS,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--fit", required=True, help="fit directory")
    p.add_argument("--out", required=True, help="scenario CSV (or .npz) to write")
    p.add_argument("--config", help="INI file with run settings")
    _add_sim_flags(p)
    _add_seed(p)

    p = sub.add_parser("test", help="run the test battery", epilog=FORMATS,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenarios", help="scenario CSV or .npz")
    src.add_argument("--data", help="panel CSV")
    p.add_argument("--bands", default="default", help="'default' or an INI file with [bands]")
    p.add_argument("--fitted", help="fitted panel CSV aligned with --data (adds R-squared)")
    p.add_argument("--kv", help="also write the key=value report here")
    p.add_argument("--out", help="write the text report here instead of stdout")
    p.add_argument("--ffill", action="store_true")
    _add_seed(p)

    p = sub.add_parser("pipeline", help="fit, simulate and test", epilog=FORMATS,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--data", required=True, help="panel CSV")
    p.add_argument("--out", default="curvelab-run", help="output directory")
    p.add_argument("--bands", default="default")
    _add_run_flags(p)
    _add_sim_flags(p)
    _add_seed(p)
    return ap


# ------------------------------------------------------------------ helpers

def _run_config(args):
    from .io import RunConfig

    cfg = RunConfig.from_file(args.config) if getattr(args, "config", None) else RunConfig()
    over = {}
    for flag, key in (("model", "model"), ("priors", "priors"), ("chains", "chains"),
                      ("warmup", "warmup"), ("kept", "kept"), ("seed", "seed"),
                      ("n_scenarios", "n_scenarios"), ("horizon", "horizon_steps"),
                      ("dt", "sim_dt"), ("max_draws", "max_draws")):
        v = getattr(args, flag, None)
        if v is not None:
            over[key] = v
    if over:
        cfg = RunConfig(**{**cfg.__dict__, **over})
    return cfg


def _bands(spec, overrides=None):
    from .battery import Bands

    b = Bands() if spec in (None, "default") else Bands.from_file(spec)
    if overrides:
        b = Bands.from_mapping({**dict(b.items()), **overrides})
    return b


def _fit(panel, cfg):
    from .fitter import MCMCConfig, load_priors, metropolis_fit

    priors = load_priors(cfg.model, cfg.priors)
    mc = MCMCConfig(n_chains=cfg.chains, n_warmup=cfg.warmup, n_kept=cfg.kept, seed=cfg.seed)
    return metropolis_fit(panel, cfg.model, priors, mc)


def _simulate(fit, cfg):
    from .simulator import SimConfig, simulate

    sc = SimConfig(dt=cfg.sim_dt, horizon_steps=cfg.horizon_steps,
                   n_scenarios=cfg.n_scenarios, seed=cfg.seed)
    return simulate(fit.draws(cfg.max_draws), sc)


def _years(scen):
    total = scen.horizon_steps * scen.step_dt
    years = tuple(y for y in range(1, int(total + 1e-9) + 1))
    # horizons under a year are tested at the final step
    return years[:2] or (total,)


# ----------------------------------------------------------------- commands

def cmd_loadings(args) -> int:
    from .io import loadings_csv_text
    from .loadings_ode import loadings, solve_loadings_ode

    grid = _grid(args.maturities)
    model = args.model
    if model.upper() in ("CIR", "VASICEK") and not args.params:
        need = ["kappa_rn", "omega_rn"] + (["beta"] if model.upper() == "CIR" else ["sigma"])
        missing = [f"--{n.replace('_', '-')}" for n in need if getattr(args, n) is None]
        if missing:
            raise SpecError(f"{model} loadings need {' '.join(missing)}")
        if model.upper() == "CIR":
            spec = AffineModelSpec.build(["CIR"], args.kappa_rn, args.omega_rn, None, [args.beta])
        else:
            spec = AffineModelSpec.build(["Vasicek"], args.kappa_rn, args.omega_rn,
                                         [[args.sigma]])
    else:
        import configparser

        from .fitter.models import get_model

        if not args.params:
            raise SpecError(f"model {model} needs --params with a [params] section")
        cp = configparser.ConfigParser()
        cp.optionxform = str
        if not cp.read(args.params):
            raise FileNotFoundError(args.params)
        spec = get_model(model).spec({k: float(v) for k, v in cp["params"].items()})
    table = solve_loadings_ode(spec, grid) if args.ode else loadings(spec, grid)
    text = loadings_csv_text(table)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_fit(args) -> int:
    from .io import load_panel, write_fit

    cfg = _run_config(args)
    panel = load_panel(args.data, ffill=args.ffill)
    fit = _fit(panel, cfg)
    if args.out:
        write_fit(fit, args.out)
    if args.summary or not args.out:
        sys.stdout.write(fit.summary())
    return 0


def cmd_simulate(args) -> int:
    from .io import read_fit, save_scenarios_npz, write_scenarios_csv

    cfg = _run_config(args)
    fit = read_fit(args.fit)
    scen = _simulate(fit, cfg)
    if args.out.endswith(".npz"):
        save_scenarios_npz(scen, args.out)
    else:
        write_scenarios_csv(scen, args.out)
    return 0


def _emit_report(rep, out=None, kv=None):
    text = rep.to_text()
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    if kv:
        Path(kv).write_text(rep.to_kv())
    return 1 if rep.failed else 0


def cmd_test(args) -> int:
    from .battery import evaluate_battery
    from .io import load_panel, load_scenarios

    bands = _bands(args.bands)
    header = {"bands": args.bands}
    if args.scenarios:
        scen = load_scenarios(args.scenarios)
        header["scenarios"] = Path(args.scenarios).name
        rep = evaluate_battery(scen, bands=bands, years=_years(scen), header=header)
    else:
        panel = load_panel(args.data, ffill=args.ffill)
        fitted = load_panel(args.fitted) if args.fitted else None
        header["data"] = Path(args.data).name
        rep = evaluate_battery(panel=panel, bands=bands, fitted=fitted, header=header)
    return _emit_report(rep, args.out, args.kv)


def cmd_pipeline(args) -> int:
    from .battery import evaluate_battery
    from .io import load_panel, write_fit, write_scenarios_csv

    cfg = _run_config(args)
    panel = load_panel(args.data, ffill=args.ffill)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fit = _fit(panel, cfg)
    fit.config.update({"data": Path(args.data).name})
    write_fit(fit, out / "fit")
    scen = _simulate(fit, cfg)
    write_scenarios_csv(scen, out / "scenarios.csv")
    bands = _bands(args.bands, cfg.bands)
    header = {**{f"config.{k}": v for k, v in cfg.echo().items()},
              "data": Path(args.data).name}
    rep = evaluate_battery(scen, panel, bands, fit.fitted_panel(panel, cfg.max_draws),
                           years=_years(scen), header=header)
    (out / "report.txt").write_text(rep.to_text())
    (out / "report.kv").write_text(rep.to_kv())
    sys.stdout.write(rep.to_text())
    return 1 if rep.failed else 0


COMMANDS = {"loadings": cmd_loadings, "fit": cmd_fit, "simulate": cmd_simulate,
            "test": cmd_test, "pipeline": cmd_pipeline}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (SpecError, ValueError, KeyError, FileNotFoundError, RuntimeError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"curvelab {args.command}: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
