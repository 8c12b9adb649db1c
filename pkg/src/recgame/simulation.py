"""Monte Carlo oracle for the incentive value and the member payoffs.

Paths use exact log-normal transitions, so the only discretisation error is
the time quadrature.  Integrals of ``e^{-ks} f(s)`` are taken with an
exponentially fitted trapezoid rule (``f`` linear between nodes, the
discount factor integrated exactly) on a time grid whose steps grow
geometrically: fine where the integrand moves, coarse far out where the
discount has already done its work.

Two formulations of the incentive horizon are available.  ``tau`` samples the
expiry ``tau ~ Exp(lambda)`` per path and integrates up to ``min(tau, T)``,
using a Brownian bridge for the demand level at ``tau``.  ``killed`` drops
``tau`` and discounts at ``r + lambda`` instead.

Paths are generated in fixed-size batches, each with its own child seed from
``numpy.random.SeedSequence``; batch statistics are merged in batch order, so
results do not depend on the number of worker threads.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .payoffs import InstallationPair
from .scenario import MarketScenario, compute_net_rates

TRUNCATION_RTOL = 1e-3
_HORIZON_DECAYS = 12.0  # e^-12 ~ 6e-6


class TruncationTooShort(ValueError):
    """The discarded tail beyond the horizon is not negligible."""


class InfiniteVariance(ValueError):
    """A discounted price integral has no finite second moment.

    ``int e^{-rs} X(s) ds`` has finite variance only when
    ``volatility**2 < 2 * net_rate``; beyond that the sample mean does not
    settle at any practical number of paths.
    """


@dataclass(frozen=True)
class McConfig:
    """Path count, truncation horizon ``T`` (h), first step (h) and seed.

    ``horizon`` and ``step`` default to values derived from the scenario.
    With ``growth == 1`` the grid is uniform and ``step`` must divide
    ``horizon``.
    """

    paths: int = 100_000
    horizon: float | None = None
    step: float | None = None
    seed: int = 0
    growth: float = 1.01
    batch_size: int = 20_000
    workers: int = 1

    def __post_init__(self):
        if self.paths < 2:
            raise ValueError("need at least 2 paths for a standard error")
        if self.batch_size < 2:
            raise ValueError("batch_size must be at least 2")
        if self.horizon is not None and not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if self.step is not None and not self.step > 0:
            raise ValueError("step must be positive")
        if not self.growth >= 1.0:
            raise ValueError("growth must be >= 1")
        if self.growth == 1.0 and self.horizon is not None and self.step is not None:
            n = self.horizon / self.step
            if abs(n - round(n)) > 1e-9 * max(1.0, n):
                raise ValueError("step must divide horizon on a uniform grid")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    standard_error: float
    paths_used: int

    def zscore(self, target: float, extra_se: float = 0.0) -> float:
        """Distance from ``target`` in combined standard errors."""
        se = math.hypot(self.standard_error, extra_se)
        if se == 0:
            return 0.0 if self.mean == target else math.inf
        return abs(self.mean - target) / se


def combined_z(a: McEstimate, b: McEstimate) -> float:
    return a.zscore(b.mean, b.standard_error)


# --------------------------------------------------------------------------
# grid and quadrature


def time_grid(horizon: float, step: float, growth: float = 1.01) -> np.ndarray:
    """Nodes ``0 = t_0 < ... < t_n = horizon`` with ``t_{i+1}-t_i = step*growth**i``.

    The last step is cut at the horizon; a sliver shorter than half the
    previous step is merged into it.
    """
    if growth == 1.0:
        n = max(1, int(round(horizon / step)))
        return np.linspace(0.0, horizon, n + 1)
    n = math.ceil(math.log1p(horizon * (growth - 1.0) / step) / math.log(growth))
    t = np.concatenate(([0.0], np.cumsum(step * growth ** np.arange(n))))
    t = t[t < horizon]
    if len(t) > 2 and horizon - t[-1] < 0.5 * (t[-1] - t[-2]):
        t = t[:-1]
    return np.append(t, horizon)


def fitted_weights(h, k: float):
    """Weights ``(A, B)`` with ``int_0^h e^{-kt} f dt ~ A f(0) + B f(h)``.

    Exact when ``f`` is linear in ``t``.  Broadcasts over ``h``.
    """
    h = np.asarray(h, dtype=float)
    q = k * h
    # I0 = int_0^h e^{-kt} dt ;  B = (1/h) int_0^h t e^{-kt} dt = h * phi(q)
    i0 = np.where(q > 0, -np.expm1(-q) / np.where(k > 0, k, 1.0), h)
    small = q < 1e-4
    qs = np.where(small, 1.0, q)
    phi = np.where(small, 0.5 - q / 3.0 + q * q / 8.0, (1.0 - np.exp(-qs) * (1.0 + qs)) / qs**2)
    b = h * phi
    return i0 - b, b


def _discounted_weights(t: np.ndarray, k: float):
    a, b = fitted_weights(np.diff(t), k)
    disc = np.exp(-k * t[:-1])
    return a * disc, b * disc


# --------------------------------------------------------------------------
# batching


def _batches(cfg: McConfig) -> list[tuple[int, np.random.SeedSequence]]:
    n_full, rest = divmod(cfg.paths, cfg.batch_size)
    sizes = [cfg.batch_size] * n_full + ([rest] if rest else [])
    if len(sizes) > 1 and sizes[-1] < 2:
        sizes[-2] += sizes.pop()
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(sizes))
    return list(zip(sizes, seeds))


def _merge(stats) -> McEstimate:
    """Combine per-batch ``(n, mean, M2)`` with Chan's pairwise update."""
    n, mean, m2 = 0, 0.0, 0.0
    for nb, mb, m2b in stats:
        tot = n + nb
        delta = mb - mean
        mean += delta * nb / tot
        m2 += m2b + delta * delta * n * nb / tot
        n = tot
    var = m2 / (n - 1)
    return McEstimate(float(mean), float(math.sqrt(var / n)), int(n))


def _run(cfg: McConfig, batch_fn) -> McEstimate:
    jobs = _batches(cfg)

    def one(job):
        size, seq = job
        x = batch_fn(size, np.random.default_rng(seq))
        mean = float(np.mean(x))
        return size, mean, float(np.sum((x - mean) ** 2))

    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            stats = list(pool.map(one, jobs))
    else:
        stats = [one(j) for j in jobs]
    return _merge(stats)


# --------------------------------------------------------------------------
# incentive value


def _aggregate(y) -> float:
    if isinstance(y, InstallationPair):
        return y.total
    if np.ndim(y) == 0:
        return float(y)
    y_h, y_b = y
    return float(y_h) + float(y_b)


def _rate_scale(*gbms) -> float:
    return max(g.volatility**2 + abs(g.drift) for g in gbms)


def _grid(cfg: McConfig, horizon: float, kappa: float) -> np.ndarray:
    step = cfg.step if cfg.step is not None else min(1.0, 0.01 / kappa)
    return time_grid(horizon, min(step, horizon), cfg.growth)


def _check_tail(tail: float, estimate: McEstimate, horizon: float):
    if not tail < TRUNCATION_RTOL * abs(estimate.mean) and tail > 0:
        raise TruncationTooShort(
            f"horizon T={horizon:.6g} h leaves a tail bound {tail:.3g} "
            f"against an estimate {estimate.mean:.6g}; increase the horizon"
        )


def _w_setup(s: MarketScenario, y, cfg: McConfig):
    y = _aggregate(y)
    if y < 0:
        raise ValueError("installations must be non-negative")
    k = s.discount
    horizon = cfg.horizon if cfg.horizon is not None else _HORIZON_DECAYS / k
    t = _grid(cfg, horizon, k + _rate_scale(s.demand))
    return y, k, horizon, t


def simulate_w_killed(s: MarketScenario, y, cfg: McConfig = McConfig()) -> McEstimate:
    """``E int_0^T e^{-(r+lambda)s} min(D(s), y) ds`` by simulation."""
    y, k, horizon, t = _w_setup(s, y, cfg)
    wa, wb = _discounted_weights(t, k)
    h = np.diff(t)
    mu, sig = s.demand.drift, s.demand.volatility
    step_mean, step_sd = mu * h, sig * np.sqrt(h)
    d0 = s.d

    def batch(n, rng):
        log_d = np.full(n, math.log(d0))
        prev = np.full(n, min(d0, y))
        acc = np.zeros(n)
        for i in range(len(h)):
            log_d += step_mean[i] + step_sd[i] * rng.standard_normal(n)
            cur = np.minimum(np.exp(log_d), y)
            acc += wa[i] * prev + wb[i] * cur
            prev = cur
        return acc

    est = _run(cfg, batch)
    _check_tail(math.exp(-k * horizon) * y / k, est, horizon)
    return est


def simulate_w_tau(s: MarketScenario, y, cfg: McConfig = McConfig()) -> McEstimate:
    """``E int_0^{min(tau,T)} e^{-rs} min(D(s), y) ds`` with ``tau ~ Exp(lambda)``."""
    y, k, horizon, t = _w_setup(s, y, cfg)
    r = s.r
    wa, wb = _discounted_weights(t, r)
    h = np.diff(t)
    mu, sig = s.demand.drift, s.demand.volatility
    step_mean, step_sd = mu * h, sig * np.sqrt(h)
    d0 = s.d

    def batch(n, rng):
        tau = rng.exponential(1.0 / s.lam, n)
        log_d = np.full(n, math.log(d0))
        prev = np.full(n, min(d0, y))
        acc = np.zeros(n)
        for i in range(len(h)):
            a, b = t[i], t[i + 1]
            start = log_d.copy()
            log_d += step_mean[i] + step_sd[i] * rng.standard_normal(n)
            cur = np.minimum(np.exp(log_d), y)
            full = tau >= b
            acc[full] += wa[i] * prev[full] + wb[i] * cur[full]
            part = np.flatnonzero((tau > a) & ~full)
            if part.size:
                u = tau[part] - a
                frac = u / h[i]
                # Brownian bridge in log space between the two nodes
                bridge_sd = sig * np.sqrt(u * (1.0 - frac))
                log_tau = (start[part] + frac * (log_d[part] - start[part])
                           + bridge_sd * rng.standard_normal(part.size))
                pa, pb = fitted_weights(u, r)
                acc[part] += math.exp(-r * a) * (pa * prev[part] + pb * np.minimum(np.exp(log_tau), y))
            prev = cur
        return acc

    est = _run(cfg, batch)
    _check_tail(math.exp(-k * horizon) * y / k, est, horizon)
    return est


# --------------------------------------------------------------------------
# payoffs


def _check_variance(name: str, vol2: float, net_rate: float):
    if vol2 >= 2.0 * net_rate:
        raise InfiniteVariance(
            f"{name}: volatility^2 = {vol2:.3g} >= 2 * net rate = {2.0 * net_rate:.3g}; "
            "the discounted integral has unbounded variance"
        )


def simulate_payoff(s: MarketScenario, y, beta: float, cfg: McConfig = McConfig(),
                    member: str = "household") -> McEstimate:
    """Simulated payoff ``J_h`` or ``J_b`` inside the community.

    Price integrals are truncated at the horizon; the incentive uses a
    sampled expiry ``tau``.  Only the demand and purchase-price Brownian
    motions are correlated (``rho_c``).
    """
    if member not in ("household", "biogas"):
        raise ValueError(f"member must be 'household' or 'biogas', got {member!r}")
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    if isinstance(y, InstallationPair):
        y_h, y_b = y.y_h, y.y_b
    else:
        y_h, y_b = map(float, y)
    rates = compute_net_rates(s)
    r, k, lam = s.r, s.discount, s.lam
    share = beta if member == "household" else 1.0 - beta
    own = y_h if member == "household" else y_b
    agg = y_h + y_b
    gas_left = s.b * s.K_g - y_b

    # (process name, coefficient, initial level, net rate, vol^2)
    terms = [("spot_price", own, s.x_v, rates.r_v, s.spot_price.volatility**2)]
    if member == "household":
        c, d = s.purchase_price, s.demand
        vol2 = c.volatility**2 + d.volatility**2 + 2 * s.rho_c * c.volatility * d.volatility
        terms.append(("purchase_price * demand", -1.0, s.x_c * s.d, rates.r_cd, vol2))
    else:
        terms.append(("gas_price", gas_left, s.p, rates.r_p, s.gas_price.volatility**2))
    terms = [tm for tm in terms if tm[1] != 0]
    for name, _, _, net, vol2 in terms:
        _check_variance(name, vol2, net)

    slowest = min([net for _, _, _, net, _ in terms] + [k])
    horizon = cfg.horizon if cfg.horizon is not None else _HORIZON_DECAYS / slowest
    t = _grid(cfg, horizon, k + _rate_scale(s.spot_price, s.purchase_price, s.gas_price, s.demand))
    h = np.diff(t)
    sqrt_h = np.sqrt(h)
    wa, wb = _discounted_weights(t, r)
    rho, rho_perp = s.rho_c, math.sqrt(max(0.0, 1.0 - s.rho_c**2))
    zr = share * s.Z
    capex = (s.c_h if member == "household" else s.c_b) * own

    def batch(n, rng):
        tau = rng.exponential(1.0 / lam, n) if zr and agg > 0 else None
        log_d = np.full(n, math.log(s.d))
        log_v = np.full(n, math.log(s.x_v))
        log_c = np.full(n, math.log(s.x_c))
        log_p = np.full(n, math.log(s.p))

        def flow(ld, lv, lc, lp):
            out = own * np.exp(lv)
            if member == "household":
                out = out - np.exp(lc + ld)
            else:
                out = out + gas_left * np.exp(lp)
            return out

        def incent(ld):
            return np.minimum(np.exp(ld), agg)

        prev_f = flow(log_d, log_v, log_c, log_p)
        prev_i = incent(log_d)
        acc = np.zeros(n)
        for i in range(len(h)):
            a, b = t[i], t[i + 1]
            start_d = log_d.copy()
            z_d = rng.standard_normal(n)
            z_c = rho * z_d + rho_perp * rng.standard_normal(n)
            log_d += s.demand.drift * h[i] + s.demand.volatility * sqrt_h[i] * z_d
            log_c += s.purchase_price.drift * h[i] + s.purchase_price.volatility * sqrt_h[i] * z_c
            log_v += s.spot_price.drift * h[i] + s.spot_price.volatility * sqrt_h[i] * rng.standard_normal(n)
            log_p += s.gas_price.drift * h[i] + s.gas_price.volatility * sqrt_h[i] * rng.standard_normal(n)
            cur_f = flow(log_d, log_v, log_c, log_p)
            acc += wa[i] * prev_f + wb[i] * cur_f
            prev_f = cur_f
            if tau is not None:
                cur_i = incent(log_d)
                full = tau >= b
                acc[full] += zr * (wa[i] * prev_i[full] + wb[i] * cur_i[full])
                part = np.flatnonzero((tau > a) & ~full)
                if part.size:
                    u = tau[part] - a
                    frac = u / h[i]
                    bridge_sd = s.demand.volatility * np.sqrt(u * (1.0 - frac))
                    log_tau = (start_d[part] + frac * (log_d[part] - start_d[part])
                               + bridge_sd * rng.standard_normal(part.size))
                    pa, pb = fitted_weights(u, r)
                    acc[part] += zr * math.exp(-r * a) * (
                        pa * prev_i[part] + pb * np.minimum(np.exp(log_tau), agg))
                prev_i = cur_i
        return acc - capex

    est = _run(cfg, batch)
    tail = sum(abs(coef) * x0 * math.exp(-net * horizon) / net for _, coef, x0, net, _ in terms)
    tail += zr * agg * math.exp(-k * horizon) / k
    _check_tail(tail, est, horizon)
    return est


def simulate_gbm(g, n: int, dt: float = 1.0, seed=None) -> np.ndarray:
    """One path of ``n`` samples of a GBM at spacing ``dt``, starting at ``initial_value``."""
    rng = np.random.default_rng(seed)
    inc = g.drift * dt + g.volatility * math.sqrt(dt) * rng.standard_normal(n - 1)
    return g.initial_value * np.exp(np.concatenate(([0.0], np.cumsum(inc))))
