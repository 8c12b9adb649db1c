"""Independent reference computations used as test oracles."""
import math

import numpy as np
from scipy import integrate
from scipy.stats import norm


def expected_min(t, d, mu, sigma, y):
    """``E[min(D_t, y)]`` for ``D_t = d exp(mu t + sigma W_t)``."""
    if t <= 0 or sigma == 0:
        return min(d * math.exp(mu * t), y)
    s = sigma * math.sqrt(t)
    m = math.log(d) + mu * t
    z = (math.log(y) - m) / s
    return math.exp(m + 0.5 * s * s) * norm.cdf(z - s) + y * norm.sf(z)


def w_by_quadrature(s, y, d=None):
    """``int_0^inf e^{-(r+lambda)t} E[min(D_t, y)] dt`` by adaptive quadrature."""
    d = s.d if d is None else d
    k = s.discount
    mu, sig = s.demand.drift, s.demand.volatility

    def f(u):  # t = u / k
        return math.exp(-u) * expected_min(u / k, d, mu, sig, y) / k

    val, err = integrate.quad(f, 0, 60, limit=400, epsabs=0, epsrel=1e-11)
    return val


def argmax_grid(f, lo, hi, n):
    x = np.linspace(lo, hi, n)
    v = np.array([f(xi) for xi in x])
    i = int(np.argmax(v))
    return x, v, i
