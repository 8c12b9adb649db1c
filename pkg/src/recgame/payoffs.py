"""Member payoffs, with and without the self-consumption incentive.

Payoffs are expected present values in EUR at t = 0.  Without the incentive
both are linear in the member's own installation, so the stand-alone optimum
is all-or-nothing; the incentive adds ``share * Z * w`` which is concave.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .incentive import IncentiveCoefficients, w, w_partial
from .scenario import MarketScenario, NetRates


@dataclass(frozen=True)
class UnitGains:
    """Discounted net profit per installed MW without incentive (EUR/MW)."""

    g_h: float
    g_b: float


@dataclass(frozen=True)
class InstallationPair:
    y_h: float
    y_b: float

    @property
    def total(self) -> float:
        return self.y_h + self.y_b

    def within(self, s: MarketScenario, atol: float = 0.0) -> bool:
        return (-atol <= self.y_h <= s.theta_h + atol) and (-atol <= self.y_b <= s.theta_b + atol)


def unit_gains(s: MarketScenario, rates: NetRates) -> UnitGains:
    spot = s.x_v / rates.r_v
    return UnitGains(g_h=spot - s.c_h, g_b=spot - s.p / rates.r_p - s.c_b)


def household_consumption_cost(s: MarketScenario, rates: NetRates) -> float:
    """Present value of the household's purchases, ``x_c d / r_cd``."""
    return s.x_c * s.d / rates.r_cd


def gas_sale_value(s: MarketScenario, rates: NetRates) -> float:
    """Present value of selling the whole gas output, ``p b K_g / r_p``."""
    return s.p * s.b * s.K_g / rates.r_p


def j0_h(s, rates, gains, y_h):
    return np.multiply(y_h, gains.g_h) - household_consumption_cost(s, rates)


def j0_b(s, rates, gains, y_b):
    return np.multiply(y_b, gains.g_b) + gas_sale_value(s, rates)


def no_incentive_optimum(gains: UnitGains, s: MarketScenario) -> InstallationPair:
    """All-or-nothing stand-alone optimum; a zero gain installs fully."""
    return InstallationPair(
        y_h=s.theta_h if gains.g_h >= 0 else 0.0,
        y_b=s.theta_b if gains.g_b >= 0 else 0.0,
    )


def disagreement_points(s, rates, gains) -> tuple[float, float]:
    """Stand-alone payoffs ``(d_h, d_b)`` at the no-incentive optimum."""
    y = no_incentive_optimum(gains, s)
    return float(j0_h(s, rates, gains, y.y_h)), float(j0_b(s, rates, gains, y.y_b))


def j_h(s, rates, gains, coeffs: IncentiveCoefficients, y_h, y_b, beta):
    """Household payoff inside the community with incentive share ``beta``."""
    return j0_h(s, rates, gains, y_h) + beta * s.Z * np.asarray(w(coeffs, y_h, y_b, s.d))


def j_b(s, rates, gains, coeffs: IncentiveCoefficients, y_h, y_b, beta):
    """Biogas payoff inside the community with incentive share ``1 - beta``."""
    return j0_b(s, rates, gains, y_b) + (1.0 - beta) * s.Z * np.asarray(w(coeffs, y_h, y_b, s.d))


def dj_h(s, gains, coeffs, y_h, y_b, beta):
    """``dJ_h/dy_h``; continuous across ``y_h + y_b = d``."""
    return gains.g_h + beta * s.Z * np.asarray(w_partial(coeffs, y_h, y_b, s.d))


def dj_b(s, gains, coeffs, y_h, y_b, beta):
    """``dJ_b/dy_b``."""
    return gains.g_b + (1.0 - beta) * s.Z * np.asarray(w_partial(coeffs, y_h, y_b, s.d))
