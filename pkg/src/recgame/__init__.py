"""Two-member renewable energy community: incentive value, installation game,
Nash-bargaining incentive split, GBM calibration and a Monte Carlo oracle."""
from .bargaining import BargainingSolution, nash_product, solve_bargaining
from .calibration import CalibrationResult, HourlySeries, calibrate, deseasonalize, estimate_gbm
from .game import Case, EquilibriumOutcome, Model, nash_equilibrium
from .incentive import IncentiveCoefficients, coefficients, w, w_partial
from .payoffs import InstallationPair, UnitGains, unit_gains
from .scenario import (AssumptionViolation, GbmSpec, MarketScenario, ScenarioError,
                       compute_net_rates, example, example_path, load)
from .simulation import McConfig, McEstimate, simulate_payoff, simulate_w_killed, simulate_w_tau

__version__ = "0.1.0"

__all__ = [
    "AssumptionViolation", "BargainingSolution", "CalibrationResult", "Case",
    "EquilibriumOutcome", "GbmSpec", "HourlySeries", "IncentiveCoefficients",
    "InstallationPair", "MarketScenario", "McConfig", "McEstimate", "Model",
    "ScenarioError", "UnitGains", "calibrate", "coefficients", "compute_net_rates",
    "deseasonalize", "estimate_gbm", "example",
    "example_path", "load", "nash_equilibrium",
    "nash_product", "simulate_payoff", "simulate_w_killed", "simulate_w_tau",
    "solve_bargaining", "unit_gains", "w", "w_partial",
]
