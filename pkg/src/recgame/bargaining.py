"""Coordinator's problem: choose the incentive split by Nash bargaining.

The Nash product ``F(beta) = (J_h - d_h)(J_b - d_b)`` is evaluated at the
installation equilibrium induced by ``beta``.  It is piecewise smooth with
kinks or jumps where the equilibrium changes regime, so the maximiser scans a
grid that includes every regime boundary and polishes each local peak by
golden-section search inside its segment.

``participation`` is the coordinator's admission rule.  ``"biogas"`` counts
any equilibrium in which the biogas producer installs as a community (the
household may stay a pure consumer).  ``"both"`` also requires the household
to install; with both unit gains negative this leaves only the continuum
equilibrium at ``beta_n``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .game import EquilibriumOutcome, Model, nash_equilibrium
from .incentive import w
from .scenario import MarketScenario

log = logging.getLogger(__name__)

EPS = 1e-6
GRID_POINTS = 512
BETA_TOL = 1e-9

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
PARTICIPATION = ("biogas", "both")


@dataclass(frozen=True)
class BargainingSolution:
    beta_star: float
    outcome: EquilibriumOutcome
    j_h_star: float
    j_b_star: float
    d_h: float
    d_b: float
    nash_product: float
    participation: str = "biogas"

    @property
    def community_formed(self) -> bool:
        return admitted(self.outcome, self.participation)


def admitted(out: EquilibriumOutcome, participation: str = "biogas") -> bool:
    if participation not in PARTICIPATION:
        raise ValueError(f"participation must be one of {PARTICIPATION}, got {participation!r}")
    if participation == "both":
        return out.community_formed and out.y_h > 0
    return out.community_formed


def surplus(m: Model, out: EquilibriumOutcome, participation: str = "biogas") -> tuple[float, float]:
    """Gains over the disagreement points, ``(J_h - d_h, J_b - d_b)``.

    Computed from differences of the linear parts so that the large
    consumption and gas-sale constants cancel exactly.  Outside a formed
    community both members keep their stand-alone payoffs.
    """
    if not admitted(out, participation):
        return 0.0, 0.0
    s, g = m.scenario, m.gains
    y0_h = s.theta_h if g.g_h >= 0 else 0.0
    y0_b = s.theta_b if g.g_b >= 0 else 0.0
    zw = s.Z * w(m.coeffs, out.y_h, out.y_b, s.d)
    return (
        g.g_h * (out.y_h - y0_h) + out.beta * zw,
        g.g_b * (out.y_b - y0_b) + (1.0 - out.beta) * zw,
    )


def nash_product(m: Model, beta: float, alpha: float = 0.5, participation: str = "biogas") -> float:
    gh, gb = surplus(m, nash_equilibrium(m, beta, alpha), participation)
    return gh * gb


def nash_product_by_case(m: Model, beta: float, alpha: float = 0.5,
                         participation: str = "biogas") -> float:
    """Nash product written out per sign pattern of the unit gains.

    Independent expansion of ``(J_h - d_h)(J_b - d_b)`` used to cross-check
    :func:`nash_product`.
    """
    out = nash_equilibrium(m, beta, alpha)
    if not admitted(out, participation):
        return 0.0
    s, g_h, g_b = m.scenario, m.gains.g_h, m.gains.g_b
    y_h, y_b, Z = out.y_h, out.y_b, s.Z
    ww = w(m.coeffs, y_h, y_b, s.d)
    base = beta * (1.0 - beta) * Z**2 * ww**2
    if g_h >= 0 and g_b >= 0:
        return base
    if g_h < 0 and g_b >= 0:
        return base + (1.0 - beta) * Z * ww * g_h * y_h
    if g_h >= 0 and g_b < 0:
        return base + beta * Z * ww * g_b * y_b
    return (base + beta * Z * ww * g_b * y_b + (1.0 - beta) * Z * ww * g_h * y_h
            + y_b * y_h * g_b * g_h)


def breakpoints(m: Model, eps: float = EPS) -> list[float]:
    """Values of beta in ``[eps, 1-eps]`` where the equilibrium changes form."""
    th, R = m.thresholds, m.incentive_rate
    pts = [th.beta_h, th.beta_b, th.beta_n, -m.gains.g_h / R, 1.0 + m.gains.g_b / R]
    return sorted({p for p in pts if math.isfinite(p) and eps < p < 1.0 - eps})


def golden_max(f, a: float, b: float, tol: float = BETA_TOL) -> tuple[float, float]:
    """Golden-section search for a maximum of ``f`` on ``[a, b]``."""
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def _as_model(s) -> Model:
    return s if isinstance(s, Model) else Model.build(s)


def _solution(m: Model, beta: float, alpha: float, participation: str) -> BargainingSolution:
    out = nash_equilibrium(m, beta, alpha)
    sh, sb = surplus(m, out, participation)
    return BargainingSolution(beta, out, m.d_h + sh, m.d_b + sb, m.d_h, m.d_b, sh * sb,
                              participation)


def solve_bargaining(s: MarketScenario | Model, alpha: float = 0.5, participation: str = "biogas",
                     grid: int = GRID_POINTS, eps: float = EPS,
                     tol: float = BETA_TOL) -> BargainingSolution:
    """Maximise the Nash product over ``beta`` in ``[eps, 1 - eps]``.

    Ties between peaks resolve to the smaller beta.  When no split forms the
    community every product is zero and the smallest grid beta is returned.
    """
    m = _as_model(s)
    g = m.gains
    if g.g_h >= 0 and g.g_b >= 0:
        # F = beta (1-beta) Z^2 w(theta_h, theta_b, d)^2
        return _solution(m, 0.5, alpha, participation)

    f = lambda b: nash_product(m, b, alpha, participation)  # noqa: E731
    kinks = breakpoints(m, eps)
    betas = np.union1d(np.linspace(eps, 1.0 - eps, grid), kinks)
    vals = np.array([f(b) for b in betas])

    cands = [(float(b), float(v)) for b, v in zip(betas, vals)]
    kink_set = set(kinks)
    for i in range(1, len(betas) - 1):
        if vals[i] >= vals[i - 1] and vals[i] >= vals[i + 1] and vals[i] > 0:
            lo, hi = betas[i - 1], betas[i + 1]
            # stay inside the segment between regime boundaries
            if betas[i] in kink_set:
                continue
            cands.append(golden_max(f, float(lo), float(hi), tol))

    best = max(v for _, v in cands)
    top = sorted(b for b, v in cands if v >= best - 1e-12 * abs(best))
    beta_star = top[0]
    far = [b for b in top if abs(b - beta_star) > 1e3 * tol]
    if best > 0 and far:
        log.info("Nash product tie: beta=%.9g also attains %.6g", far[0], best)
    return _solution(m, beta_star, alpha, participation)


def shapley_share() -> float:
    """Shapley value share of each member; only the grand coalition has worth."""
    return 0.5
