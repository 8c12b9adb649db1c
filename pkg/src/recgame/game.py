"""Installation game between the household and the biogas producer.

For a fixed incentive split ``beta`` each member best-responds to the other's
installation.  Because ``w`` depends only on the aggregate ``y_h + y_b``, an
interior best response is "bring the aggregate up to my target", clamped to
the member's box.  The targets and the thresholds ``beta_h``/``beta_b`` that
pick the branch of ``w`` come from the first-order conditions.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .incentive import IncentiveCoefficients, coefficients
from .payoffs import InstallationPair, UnitGains, disagreement_points, unit_gains
from .scenario import MarketScenario, NetRates, compute_net_rates

BETA_N_RTOL = 1e-9


class UndefinedBetaN(ZeroDivisionError):
    """``g_h + g_b == 0``: the continuum split ``beta_n`` does not exist."""


@dataclass(frozen=True)
class Thresholds:
    beta_h: float
    beta_b: float
    beta_n: float  # nan when g_h + g_b == 0


def thresholds(gains: UnitGains, coeffs: IncentiveCoefficients, s: MarketScenario) -> Thresholds:
    seam = s.Z * coeffs.seam_marginal  # Z B1 (1 - m2) > 0
    if seam == 0:
        raise ZeroDivisionError("Z * B1 * (1 - m2) vanishes")
    total = gains.g_h + gains.g_b
    if total == 0:
        raise UndefinedBetaN("beta_n undefined: g_h + g_b == 0")
    return Thresholds(
        beta_h=-gains.g_h / seam,
        beta_b=1.0 + gains.g_b / seam,
        beta_n=gains.g_h / total,
    )


@dataclass(frozen=True)
class Model:
    """A validated scenario with every derived constant the game needs."""

    scenario: MarketScenario
    rates: NetRates
    gains: UnitGains
    coeffs: IncentiveCoefficients
    thresholds: Thresholds
    d_h: float
    d_b: float

    @classmethod
    def build(cls, s: MarketScenario) -> "Model":
        rates = compute_net_rates(s)
        gains = unit_gains(s, rates)
        coeffs = coefficients(s, rates)
        try:
            th = thresholds(gains, coeffs, s)
        except UndefinedBetaN:
            seam = s.Z * coeffs.seam_marginal
            th = Thresholds(-gains.g_h / seam, 1.0 + gains.g_b / seam, math.nan)
        d_h, d_b = disagreement_points(s, rates, gains)
        return cls(s, rates, gains, coeffs, th, d_h, d_b)

    @property
    def incentive_rate(self) -> float:
        """``Z / (r + lambda)``: value of one MW of permanent self-consumption."""
        return self.scenario.Z / self.scenario.discount


# --------------------------------------------------------------------------
# best responses


class Regime(enum.Enum):
    FULL = "full"
    ZERO = "zero"
    INTERIOR = "interior"


def household_regime(m: Model, beta: float) -> Regime:
    g = m.gains.g_h
    if g >= 0:
        return Regime.FULL
    if g + beta * m.incentive_rate <= 0:
        return Regime.ZERO
    return Regime.INTERIOR


def biogas_regime(m: Model, beta: float) -> Regime:
    g = m.gains.g_b
    if g >= 0:
        return Regime.FULL
    if g + (1.0 - beta) * m.incentive_rate <= 0:
        return Regime.ZERO
    return Regime.INTERIOR


def household_target(m: Model, beta: float) -> float:
    """Aggregate capacity at which ``dJ_h/dy_h = 0`` (interior regime only)."""
    c, th, g, R = m.coeffs, m.thresholds, m.gains.g_h, m.incentive_rate
    d = m.scenario.d
    if beta > th.beta_h:
        return d * (beta / th.beta_h) ** (1.0 / c.m2)
    denom = g / beta + R
    if denom <= 0:  # at the edge of the interior regime the target shrinks to zero
        return 0.0
    return d * ((g / th.beta_h + R) / denom) ** (1.0 / c.m1)


def biogas_target(m: Model, beta: float) -> float:
    """Aggregate capacity at which ``dJ_b/dy_b = 0`` (interior regime only)."""
    c, th, g, R = m.coeffs, m.thresholds, m.gains.g_b, m.incentive_rate
    d = m.scenario.d
    if beta < th.beta_b:
        return d * ((1.0 - beta) / (1.0 - th.beta_b)) ** (1.0 / c.m2)
    denom = g / (1.0 - beta) + R
    if denom <= 0:
        return 0.0
    return d * ((g / (1.0 - th.beta_b) + R) / denom) ** (1.0 / c.m1)


def _clamp(x, hi):
    return max(min(x, hi), 0.0)


def best_response_household(m: Model, y_b: float, beta: float) -> float:
    reg = household_regime(m, beta)
    if reg is Regime.FULL:
        return m.scenario.theta_h
    if reg is Regime.ZERO:
        return 0.0
    return _clamp(household_target(m, beta) - y_b, m.scenario.theta_h)


def best_response_biogas(m: Model, y_h: float, beta: float) -> float:
    reg = biogas_regime(m, beta)
    if reg is Regime.FULL:
        return m.scenario.theta_b
    if reg is Regime.ZERO:
        return 0.0
    return _clamp(biogas_target(m, beta) - y_h, m.scenario.theta_b)


def aggregate_vs_demand(th: Thresholds, beta: float, member: str = "household") -> str:
    """Where an interior best response puts the aggregate relative to demand.

    Returns ``"above"``, ``"equal"`` or ``"below"``.
    """
    if member == "household":
        diff = beta - th.beta_h
    elif member == "biogas":
        diff = th.beta_b - beta
    else:
        raise ValueError(f"unknown member {member!r}")
    if diff > 0:
        return "above"
    if diff < 0:
        return "below"
    return "equal"


# --------------------------------------------------------------------------
# equilibria


class Case(enum.Enum):
    # community cases: (household, biogas)
    BOTH_FULL = "both gains positive"
    H_ZERO_B_FULL = "household zero, biogas full"
    H_ABOVE_B_FULL = "household interior above demand, biogas full"
    H_BELOW_B_FULL = "household interior below demand, biogas full"
    H_FULL_B_ABOVE = "household full, biogas interior above demand"
    H_FULL_B_BELOW = "household full, biogas interior below demand"
    H_ZERO_B_ABOVE = "household zero, biogas interior above demand"
    H_ZERO_B_BELOW = "household zero, biogas interior below demand"
    CONTINUUM_ABOVE = "continuum above demand"
    CONTINUUM_BELOW = "continuum below demand"
    # both interior off beta_n: the member with the larger target fills first
    HOUSEHOLD_LEADS = "both interior, household target larger"
    BIOGAS_LEADS = "both interior, biogas target larger"
    # biogas incentive share too small to ever install
    NC_H_FULL = "no community, household full"
    NC_H_ZERO = "no community, household zero"
    NC_H_ABOVE = "no community, household interior above demand"
    NC_H_BELOW = "no community, household interior below demand"

    @property
    def is_continuum(self) -> bool:
        return self in (Case.CONTINUUM_ABOVE, Case.CONTINUUM_BELOW)


@dataclass(frozen=True)
class EquilibriumOutcome:
    case: Case
    installs: InstallationPair
    community_formed: bool
    beta: float
    aggregate_target: float | None = None  # continuum cases only

    @property
    def y_h(self) -> float:
        return self.installs.y_h

    @property
    def y_b(self) -> float:
        return self.installs.y_b


_FIXED_CASES = {
    (Regime.FULL, Regime.FULL): Case.BOTH_FULL,
    (Regime.ZERO, Regime.FULL): Case.H_ZERO_B_FULL,
    (Regime.FULL, Regime.ZERO): Case.NC_H_FULL,
    (Regime.ZERO, Regime.ZERO): Case.NC_H_ZERO,
}


def _case_for(m: Model, beta: float, hr: Regime, br: Regime) -> Case:
    if (hr, br) in _FIXED_CASES:
        return _FIXED_CASES[hr, br]
    th = m.thresholds
    if hr is Regime.INTERIOR:
        above = beta > th.beta_h
        if br is Regime.FULL:
            return Case.H_ABOVE_B_FULL if above else Case.H_BELOW_B_FULL
        return Case.NC_H_ABOVE if above else Case.NC_H_BELOW
    above = beta < th.beta_b
    if hr is Regime.FULL:
        return Case.H_FULL_B_ABOVE if above else Case.H_FULL_B_BELOW
    return Case.H_ZERO_B_ABOVE if above else Case.H_ZERO_B_BELOW


def continuum_aggregate(m: Model) -> tuple[Case, float]:
    """Aggregate capacity shared by every equilibrium at ``beta = beta_n``."""
    c, th, g = m.coeffs, m.thresholds, m.gains
    s, total = m.scenario, m.gains.g_h + m.gains.g_b
    if th.beta_h < th.beta_n < th.beta_b:
        return Case.CONTINUUM_ABOVE, s.d * (-s.Z * c.seam_marginal / total) ** (1.0 / c.m2)
    ratio = s.Z * c.C1 * (c.m1 - 1.0) / (g.g_h + g.g_b + m.incentive_rate)
    return Case.CONTINUUM_BELOW, s.d * ratio ** (1.0 / c.m1)


def split_aggregate(total: float, s: MarketScenario, alpha: float = 0.5) -> InstallationPair:
    """Household takes ``alpha`` of ``total``, moved inside the box if needed."""
    if total >= s.theta_h + s.theta_b:
        return InstallationPair(s.theta_h, s.theta_b)
    lo, hi = max(0.0, total - s.theta_b), min(s.theta_h, total)
    y_h = min(max(alpha * total, lo), hi)
    return InstallationPair(y_h, total - y_h)


def nash_equilibrium(m: Model, beta: float, alpha: float = 0.5) -> EquilibriumOutcome:
    """Equilibrium installations for a fixed split ``beta`` in (0, 1).

    ``alpha`` selects the household's fraction of the aggregate when the
    equilibrium is a continuum (``beta == beta_n``).
    """
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    s = m.scenario
    hr, br = household_regime(m, beta), biogas_regime(m, beta)
    target = None
    if hr is Regime.INTERIOR and br is Regime.INTERIOR:
        bn = m.thresholds.beta_n
        t_h, t_b = household_target(m, beta), biogas_target(m, beta)
        if math.isclose(beta, bn, rel_tol=BETA_N_RTOL):
            case, target = continuum_aggregate(m)
            y = split_aggregate(target, s, alpha)
        elif t_h > t_b:
            case = Case.HOUSEHOLD_LEADS
            y_h = min(t_h, s.theta_h)
            y = InstallationPair(y_h, _clamp(t_b - y_h, s.theta_b))
        else:
            case = Case.BIOGAS_LEADS
            y_b = min(t_b, s.theta_b)
            y = InstallationPair(_clamp(t_h - y_b, s.theta_h), y_b)
    else:
        case = _case_for(m, beta, hr, br)
        if br is not Regime.INTERIOR:
            y_b = s.theta_b if br is Regime.FULL else 0.0
            y = InstallationPair(best_response_household(m, y_b, beta), y_b)
        else:
            y_h = s.theta_h if hr is Regime.FULL else 0.0
            y = InstallationPair(y_h, best_response_biogas(m, y_h, beta))
    formed = (
        m.gains.g_b + (1.0 - beta) * m.incentive_rate >= 0 and y.y_b > 0 and y.y_h >= 0
    )
    return EquilibriumOutcome(case, y, formed, beta, target)
