"""Expected discounted self-consumption ``w(y_h, y_b, d)``.

``w`` is the value of ``E[int_0^tau e^{-rs} min(D(s), y_h + y_b) ds]`` with
``tau ~ Exp(lambda)`` independent of the demand path.  Killing at rate
``lambda`` turns this into an infinite-horizon problem discounted at
``r + lambda``; the value solves

    (r+lam) w - (mu_d + sigma_d^2/2) d w' - (sigma_d^2/2) d^2 w'' = min(d, y)

with ``w(0) = 0``, bounded growth, and C^1 pasting at ``d = y``.  Everything
here depends on the installations only through the aggregate ``y``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scenario import MarketScenario, NetRates, ScenarioError


class RateViolation(ScenarioError):
    """The demand net rate ``r_d`` is not positive (or demand has no volatility)."""


class DegenerateAggregate(ValueError):
    """Marginal value requested at zero aggregate capacity."""


@dataclass(frozen=True)
class IncentiveCoefficients:
    """Roots ``m1 < 0 < 1 < m2`` and pasting constants ``B1, C1 < 0``.

    ``discount`` is ``r + lambda`` and ``demand_discount`` is ``r_d + lambda``;
    they are carried along so that ``w`` needs nothing else.
    """

    m1: float
    m2: float
    B1: float
    C1: float
    discount: float
    demand_discount: float
    m2_minus_1: float  # m2 - 1 without cancellation

    @property
    def seam_marginal(self) -> float:
        """``dw/dy`` at ``y = d``, i.e. ``B1 (1 - m2)``."""
        return -self.B1 * self.m2_minus_1

    @property
    def zero_capacity_marginal(self) -> float:
        """Limit of ``dw/dy`` as the aggregate capacity goes to zero, ``1/(r+lambda)``."""
        return 1.0 / self.discount


def coefficients(s: MarketScenario, rates: NetRates) -> IncentiveCoefficients:
    mu, sigma = s.demand.drift, s.demand.volatility
    if not rates.r_d > 0:
        raise RateViolation(f"r_d must be > 0, got {rates.r_d}")
    if not sigma > 0:
        raise RateViolation("demand volatility must be > 0 for the closed form")
    k = s.discount
    var = sigma * sigma
    disc = math.sqrt(mu * mu + 2.0 * k * var)
    # take the root without cancellation, recover the other from m1*m2 = -2k/var
    if mu <= 0:
        m2 = (-mu + disc) / var
        m1 = -2.0 * k / (var * m2)
    else:
        m1 = (-mu - disc) / var
        m2 = -2.0 * k / (var * m1)
    kd = rates.r_d + s.lam
    # n = m - 1 solves (var/2) n^2 + (mu + var) n - kd = 0
    b = mu + var
    n2 = 2.0 * kd / (b + math.sqrt(b * b + 2.0 * var * kd)) if b > 0 else (
        -b + math.sqrt(b * b + 2.0 * var * kd)) / var
    denom = k * kd * (2.0 * disc / var)  # (r+lam)(r_d+lam)(m2-m1)
    # m*mu + m*var/2 - k == -(var/2) m (m-1) for either root
    B1 = -0.5 * var * m1 * (m1 - 1.0) / denom
    C1 = -0.5 * var * m2 * n2 / denom
    return IncentiveCoefficients(m1, m2, B1, C1, k, kd, n2)


def _prep(y_h, y_b, d):
    y = np.add(np.asarray(y_h, dtype=float), np.asarray(y_b, dtype=float))
    d = np.asarray(d, dtype=float)
    y, d = np.broadcast_arrays(y, d)
    if np.any(y < 0) or np.any(d < 0):
        raise ValueError("installations and demand must be non-negative")
    return y, d


def _out(arr):
    return float(arr) if arr.ndim == 0 else arr


def _log_ratio(d, y, mask):
    lr = np.zeros_like(y)
    lr[mask] = np.log(d[mask]) - np.log(y[mask])
    return lr


def w(c: IncentiveCoefficients, y_h, y_b, d):
    """Closed-form incentive value; broadcasts over array arguments."""
    y, d = _prep(y_h, y_b, d)
    out = np.zeros(y.shape)
    pos = (y > 0) & (d > 0)
    lr = _log_ratio(d, y, pos)
    lo = pos & (d < y)
    hi = pos & (d >= y)
    out[lo] = c.B1 * y[lo] * np.exp(c.m2 * lr[lo]) + d[lo] / c.demand_discount
    out[hi] = c.C1 * y[hi] * np.exp(c.m1 * lr[hi]) + y[hi] / c.discount
    return _out(out)


def w_partial(c: IncentiveCoefficients, y_h, y_b, d):
    """``dw/dy_h == dw/dy_b``; raises :class:`DegenerateAggregate` at ``y_h + y_b == 0``.

    At ``d == 0`` the value is 0 (the ``d < y`` branch with ``m2 > 1``).
    """
    y, d = _prep(y_h, y_b, d)
    if np.any(y == 0):
        raise DegenerateAggregate(
            "marginal value undefined at zero aggregate capacity; "
            "its limit is IncentiveCoefficients.zero_capacity_marginal"
        )
    out = np.zeros(y.shape)
    pos = d > 0
    lr = _log_ratio(d, y, pos)
    lo = pos & (d < y)
    hi = pos & (d >= y)
    out[lo] = c.seam_marginal * np.exp(c.m2 * lr[lo])
    out[hi] = c.C1 * (1.0 - c.m1) * np.exp(c.m1 * lr[hi]) + 1.0 / c.discount
    return _out(out)


def w_d(c: IncentiveCoefficients, y_h, y_b, d):
    """First derivative of ``w`` in the demand level ``d`` (``d > 0``)."""
    y, d = _prep(y_h, y_b, d)
    out = np.zeros(y.shape)
    pos = (y > 0) & (d > 0)
    lr = _log_ratio(d, y, pos)
    lo = pos & (d < y)
    hi = pos & (d >= y)
    out[lo] = c.B1 * c.m2 * np.exp(c.m2_minus_1 * lr[lo]) + 1.0 / c.demand_discount
    out[hi] = c.C1 * c.m1 * np.exp((c.m1 - 1.0) * lr[hi])
    zero_y = (y == 0) & (d > 0)
    out[zero_y] = 0.0
    return _out(out)


def w_dd(c: IncentiveCoefficients, y_h, y_b, d):
    """Second derivative of ``w`` in ``d`` (``d > 0``)."""
    y, d = _prep(y_h, y_b, d)
    out = np.zeros(y.shape)
    pos = (y > 0) & (d > 0)
    lr = _log_ratio(d, y, pos)
    lo = pos & (d < y)
    hi = pos & (d >= y)
    out[lo] = c.B1 * c.m2 * c.m2_minus_1 * np.exp((c.m2 - 2.0) * lr[lo]) / y[lo]
    out[hi] = c.C1 * c.m1 * (c.m1 - 1.0) * np.exp((c.m1 - 2.0) * lr[hi]) / y[hi]
    return _out(out)


def ode_residual(c: IncentiveCoefficients, s: MarketScenario, y_h, y_b, d):
    """Relative residual of the pricing ODE at ``d``.

    Normalised by the largest absolute term so the value is meaningful on
    both sides of the seam.
    """
    y, d = _prep(y_h, y_b, d)
    drift = s.demand.drift + 0.5 * s.demand.volatility**2
    half_var = 0.5 * s.demand.volatility**2
    terms = (
        c.discount * np.asarray(w(c, y, 0.0, d)),
        -drift * d * np.asarray(w_d(c, y, 0.0, d)),
        -half_var * d**2 * np.asarray(w_dd(c, y, 0.0, d)),
        -np.minimum(d, y),
    )
    resid = sum(terms)
    scale = np.maximum.reduce([np.abs(t) for t in terms])
    return _out(np.abs(resid) / np.where(scale > 0, scale, 1.0))
