import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_demand_scenario, rng_for
from oracles import w_by_quadrature
from recgame.incentive import (DegenerateAggregate, RateViolation, coefficients, ode_residual, w,
                               w_d, w_dd, w_partial)
from recgame.scenario import GbmSpec, compute_net_rates


def coeffs_of(s):
    return coefficients(s, compute_net_rates(s))


def test_example1_coefficients(ex1):
    c = coeffs_of(ex1)
    assert c.m2 == pytest.approx(1.0181, abs=1e-4)
    assert c.m1 == pytest.approx(-0.01814, abs=1e-5)
    assert c.B1 == pytest.approx(-7.19e4, rel=1e-3)
    assert c.B1 < 0 and c.C1 < 0


def test_zero_drift_roots_are_symmetric(ex1):
    s = ex1.replace(demand=GbmSpec(0.3, 0.0, 1e-3))
    c = coeffs_of(s)
    root = math.sqrt(2 * s.discount) / s.demand.volatility
    assert c.m2 == pytest.approx(root, rel=1e-12)
    assert c.m1 == pytest.approx(-root, rel=1e-12)


def test_identities_on_random_scenarios():
    rng = rng_for(11)
    for _ in range(200):
        s = random_demand_scenario(rng)
        c = coeffs_of(s)
        k, sig2, mu = s.discount, s.demand.volatility**2, s.demand.drift
        assert c.m1 < 0 < 1 < c.m2
        assert c.B1 < 0 and c.C1 < 0
        seam = c.seam_marginal
        assert seam == pytest.approx(c.B1 * (1 - c.m2), rel=1e-10)
        assert abs(seam - c.C1 * (1 - c.m1) - 1 / k) <= 1e-12 * abs(seam)
        assert abs(c.m1 * c.m2 + 2 * k / sig2) <= 1e-12 * 2 * k / sig2
        assert abs(c.m1 + c.m2 + 2 * mu / sig2) <= 1e-12 * max(abs(c.m1), c.m2)


def test_rate_violation(ex1):
    s = ex1.replace(**{"demand.drift": 0.0})  # r_d = r - sigma^2/2 < 0
    with pytest.raises(RateViolation):
        coefficients(s, compute_net_rates(s, check=False))


def test_zero_volatility_has_no_closed_form(ex1):
    s = ex1.replace(demand=GbmSpec(0.3, 0.0, 0.0))
    with pytest.raises(RateViolation):
        coeffs_of(s)


def test_zero_capacity_and_zero_demand(ex1):
    c = coeffs_of(ex1)
    assert w(c, 0.0, 0.0, 0.3) == 0.0
    assert w(c, 0.32, 0.2, 0.0) == 0.0


def test_large_demand_limit(ex1):
    c = coeffs_of(ex1)
    y = 0.52
    assert w(c, 0.32, 0.2, 1e200) == pytest.approx(y / ex1.discount, rel=1e-3)


def test_matches_quadrature_oracle():
    rng = rng_for(12)
    for _ in range(25):
        s = random_demand_scenario(rng)
        c = coeffs_of(s)
        for y in (0.3 * s.d, s.d, 2.5 * s.d):
            assert w(c, y, 0.0, s.d) == pytest.approx(w_by_quadrature(s, y), rel=1e-7)


def test_partial_at_seam(ex1):
    c = coeffs_of(ex1)
    seam = c.B1 * (1 - c.m2)
    assert w_partial(c, 0.1, 0.2, 0.3) == pytest.approx(seam, rel=1e-12)
    assert w_partial(c, 0.1, 0.2 + 1e-12, 0.3) == pytest.approx(seam, rel=1e-9)
    assert w_partial(c, 0.1, 0.2 - 1e-12, 0.3) == pytest.approx(seam, rel=1e-9)


def test_partial_matches_finite_difference():
    rng = rng_for(13)
    for _ in range(50):
        s = random_demand_scenario(rng)
        c = coeffs_of(s)
        d = s.d
        for y in (0.5 * d, 0.9 * d, 1.1 * d, 3 * d):
            h = 1e-6 * d
            fd = (w(c, y + h, 0.0, d) - w(c, y - h, 0.0, d)) / (2 * h)
            # the difference quotient carries roundoff of order eps * w / h
            roundoff = 20 * np.finfo(float).eps * w(c, y, 0.0, d) / h
            assert w_partial(c, y, 0.0, d) == pytest.approx(fd, rel=1e-5, abs=roundoff)


def test_partial_errors_and_limits(ex1):
    c = coeffs_of(ex1)
    with pytest.raises(DegenerateAggregate):
        w_partial(c, 0.0, 0.0, 0.3)
    assert c.zero_capacity_marginal == 1 / ex1.discount
    # (d/y)^m1 vanishes only slowly for small |m1|
    near = [w_partial(c, y, 0.0, 0.3) for y in (1e-3, 1e-100, 1e-300)]
    assert near[0] < near[1] < near[2] < 1 / ex1.discount
    assert near[2] == pytest.approx(1 / ex1.discount, rel=1e-4)
    assert 0 < w_partial(c, 1e6, 0.0, 0.3) < 1e-3 * w_partial(c, 0.5, 0.0, 0.3)


def test_seam_is_c1_on_random_scenarios():
    rng = rng_for(14)
    for _ in range(100):
        s = random_demand_scenario(rng)
        c = coeffs_of(s)
        y = s.d
        lo, hi = np.nextafter(y, 0), np.nextafter(y, 2 * y)
        v = w(c, y, 0.0, np.array([lo, y, hi]))
        assert abs(v[0] - v[2]) <= 1e-10 * abs(v[1])
        dv = w_d(c, y, 0.0, np.array([lo, hi]))
        assert abs(dv[0] - dv[1]) <= 1e-10 * max(abs(dv[0]), 1e-300) + 1e-12 * y / s.discount / y


def test_ode_residual_small():
    rng = rng_for(15)
    for _ in range(20):
        s = random_demand_scenario(rng)
        c = coeffs_of(s)
        y = rng.uniform(0.1, 1.0)
        for d in np.concatenate([rng.uniform(0.01, 0.999, 20) * y, rng.uniform(1.0, 50.0, 20) * y]):
            assert ode_residual(c, s, y, 0.0, d) < 1e-8


def test_derivatives_match_finite_differences(ex1):
    c = coeffs_of(ex1)
    for d in (0.1, 0.4, 0.9):
        h = 1e-5 * d
        fd1 = (w(c, 0.32, 0.2, d + h) - w(c, 0.32, 0.2, d - h)) / (2 * h)
        fd2 = (w_d(c, 0.32, 0.2, d + h) - w_d(c, 0.32, 0.2, d - h)) / (2 * h)
        assert w_d(c, 0.32, 0.2, d) == pytest.approx(fd1, rel=1e-6)
        assert w_dd(c, 0.32, 0.2, d) == pytest.approx(fd2, rel=1e-4)


def test_vectorised_matches_scalar(ex1):
    c = coeffs_of(ex1)
    ds = np.linspace(0.01, 2.0, 17)
    vec = w(c, 0.32, 0.2, ds)
    assert vec.shape == ds.shape
    assert all(vec[i] == w(c, 0.32, 0.2, float(x)) for i, x in enumerate(ds))
    assert isinstance(w(c, 0.32, 0.2, 0.3), float)


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), a=st.floats(1e-3, 3.0), b=st.floats(1e-3, 3.0),
       d=st.floats(1e-3, 3.0))
def test_bounds_monotone_concave(seed, a, b, d):
    s = random_demand_scenario(np.random.default_rng(seed))
    c = coeffs_of(s)
    y1, y2 = sorted((a, b))
    k = s.discount
    v1, v2 = w(c, y1, 0.0, d), w(c, y2, 0.0, d)
    # bounds, with slack for rounding in the large terms
    tol = 1e-9 * y2 / k
    assert -tol <= v1 <= y1 / k + tol
    assert v1 <= v2 + tol
    mid = w(c, 0.5 * (y1 + y2), 0.0, d)
    assert mid >= 0.5 * (v1 + v2) - tol
    # increasing and concave in d
    d1, d2 = d, d * 1.5
    assert w(c, y1, 0.0, d1) <= w(c, y1, 0.0, d2) + tol
    assert w(c, y1, 0.0, 0.5 * (d1 + d2)) >= 0.5 * (w(c, y1, 0.0, d1) + w(c, y1, 0.0, d2)) - tol
