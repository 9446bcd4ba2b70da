"""Affine yield-curve models: loadings, fitting, scenario simulation and testing."""
__version__ = "0.1.0"

from .core import (AffineModelSpec, FactorKind, MaturityGrid, SpecError, TREASURY_GRID,
                   YieldPanel, correlated_sigma, short_rate, single_cir, single_vasicek,
                   validate_spec)
from .loadings_closed import (LoadingTable, assemble_loadings, cir_loadings,
                              vasicek_loadings)
from .loadings_ode import loadings, solve_loadings_ode
from .risk_premium import (Flavor, MarketPriceOfRisk, stationary_moments, to_real_world,
                           to_risk_neutral)
from .simulator import ModelDraw, ScenarioSet, SimConfig, simulate, simulate_panel

__all__ = [
    "AffineModelSpec", "FactorKind", "Flavor", "LoadingTable", "MarketPriceOfRisk",
    "MaturityGrid", "ModelDraw", "ScenarioSet", "SimConfig", "SpecError", "TREASURY_GRID",
    "YieldPanel", "assemble_loadings", "cir_loadings", "correlated_sigma", "loadings",
    "short_rate", "simulate", "simulate_panel", "single_cir", "single_vasicek",
    "solve_loadings_ode", "stationary_moments", "to_real_world", "to_risk_neutral",
    "validate_spec", "vasicek_loadings",
]
