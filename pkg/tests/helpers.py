"""Random scenario generators shared by the tests."""
import math

import numpy as np

from recgame.game import Model
from recgame.scenario import GbmSpec, ScenarioError, example


def log_uniform(rng, lo, hi):
    return float(math.exp(rng.uniform(math.log(lo), math.log(hi))))


def random_demand_scenario(rng, base=None):
    """Random rates, demand process and capacities; prices untouched."""
    s = base or example("example1")
    while True:
        r = log_uniform(rng, 1e-6, 1e-3)
        lam = log_uniform(rng, 1e-6, 1e-3)
        sig = log_uniform(rng, 3e-3, 0.1)
        # keep r_d = r - (mu + sig^2/2) in [r/2, 3r/2]
        mu = -0.5 * sig**2 + rng.uniform(-0.5, 0.5) * r
        theta_h = rng.uniform(0.1, 0.6)
        theta_b = rng.uniform(0.05, 0.3)
        d = rng.uniform(0.05, 0.95) * (theta_h + theta_b)
        try:
            return s.replace(r=r, lam=lam, theta_h=theta_h, theta_b=theta_b,
                             K_g=theta_b / s.b * rng.uniform(1.0, 2.0),
                             demand=GbmSpec(d, mu, sig))
        except ScenarioError:
            continue


def random_scenario(rng, signs=None):
    """Random valid scenario with unit gains of order ``Z/(r+lambda)``.

    ``signs`` = (sign_h, sign_b) forces the sign of each unit gain; by default
    each is negative with probability 2/3 so interior regimes are common.
    """
    while True:
        s = random_demand_scenario(rng)
        spot = rng.uniform(10, 100)
        s = s.replace(spot_price=GbmSpec(spot, -0.5 * 1e-4**2, 1e-4),
                      Z=rng.uniform(20, 200), rho_c=rng.uniform(-1, 1))
        R = s.Z / s.discount
        r_v = s.r  # martingale spot
        value = spot / r_v
        sh, sb = signs or (None, None)
        g_h = R * rng.uniform(-2.0, 1.0)
        g_b = R * rng.uniform(-2.0, 1.0)
        if sh is not None:
            g_h = math.copysign(abs(g_h), sh)
        if sb is not None:
            g_b = math.copysign(abs(g_b), sb)
        c_h = value - g_h
        c_b = rng.uniform(0.05, 0.5) * value
        gas = value - c_b - g_b  # = p / r_p with a martingale gas price
        if c_h <= 0 or gas <= 0:
            continue
        try:
            s = s.replace(c_h=c_h, c_b=c_b,
                          gas_price=GbmSpec(gas * s.r, -0.5 * 1e-4**2, 1e-4))
            Model.build(s)
        except (ScenarioError, ZeroDivisionError):
            continue
        return s


def mc_friendly():
    """Small volatilities and fast discounting so payoff integrals have finite variance."""
    s = example("example2")
    return s.replace(
        r=1e-3, lam=5e-4, rho_c=0.3, c_h=5e4, c_b=3e4,
        spot_price=GbmSpec(60.0, -0.5 * 0.005**2, 0.005),
        purchase_price=GbmSpec(70.0, -1e-4, 0.004),
        gas_price=GbmSpec(40.0, -0.5 * 0.01**2, 0.01),
        demand=GbmSpec(0.3, -0.5 * 0.01**2, 0.01),
    )


def rng_for(*keys):
    return np.random.default_rng(list(keys))
