"""Model parameters for the two-member energy community.

All rates are hourly. Prices are in EUR/MWh, power in MW, costs in EUR/MW.
A scenario file is TOML with top-level scalars and one table per stochastic
process (``spot_price``, ``purchase_price``, ``gas_price``, ``demand``).
"""
from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

log = logging.getLogger(__name__)

HOURS_PER_YEAR = 8760.0

PROCESSES = ("spot_price", "purchase_price", "gas_price", "demand")
_SCALARS = ("rho_c", "r", "lambda", "Z", "c_h", "c_b", "theta_h", "theta_b", "K_g", "b")
# correlations other than Corr(W, W_c) never enter a closed form
_IGNORED_CORRELATIONS = ("rho_vc", "rho_vp", "rho_vd", "rho_cp", "rho_pd")


class ScenarioError(ValueError):
    """Invalid or malformed scenario input."""


class AssumptionViolation(ScenarioError):
    """One or more net discount rates are not strictly positive."""

    def __init__(self, rates: dict[str, float]):
        self.rates = rates
        names = ", ".join(f"{k}={v:.6g}" for k, v in rates.items())
        super().__init__(f"non-positive net discount rate(s): {names}")


@dataclass(frozen=True)
class GbmSpec:
    """Geometric Brownian motion ``x * exp(drift*s + volatility*W(s))``."""

    initial_value: float
    drift: float
    volatility: float

    def __post_init__(self):
        if not self.initial_value > 0:
            raise ScenarioError(f"initial_value must be > 0, got {self.initial_value}")
        if not self.volatility >= 0:
            raise ScenarioError(f"volatility must be >= 0, got {self.volatility}")
        if not math.isfinite(self.drift):
            raise ScenarioError(f"drift must be finite, got {self.drift}")

    @property
    def net_rate_offset(self) -> float:
        """Expected log-growth ``drift + volatility**2 / 2``."""
        return self.drift + 0.5 * self.volatility**2


def martingale_adjust(g: GbmSpec) -> GbmSpec:
    """Return ``g`` with drift set to ``-volatility**2/2`` (constant expectation)."""
    return dataclasses.replace(g, drift=-0.5 * g.volatility**2)


@dataclass(frozen=True)
class NetRates:
    r_v: float
    r_p: float
    r_c: float
    r_d: float
    r_cd: float

    def as_dict(self) -> dict[str, float]:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class MarketScenario:
    spot_price: GbmSpec
    purchase_price: GbmSpec
    gas_price: GbmSpec
    demand: GbmSpec
    rho_c: float
    r: float
    lam: float
    Z: float
    c_h: float
    c_b: float
    theta_h: float
    theta_b: float
    K_g: float
    b: float

    def __post_init__(self):
        problems = []
        for name in ("r", "lam", "Z", "c_h", "c_b", "theta_h", "theta_b", "K_g", "b"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                problems.append(f"{name} must be a finite positive number, got {v}")
        if not -1.0 <= self.rho_c <= 1.0:
            problems.append(f"rho_c must lie in [-1, 1], got {self.rho_c}")
        if not problems:
            if not self.demand.initial_value < self.theta_h + self.theta_b:
                problems.append(
                    f"demand.initial_value={self.demand.initial_value} must be below "
                    f"theta_h + theta_b = {self.theta_h + self.theta_b}"
                )
            # relative slack: b*K_g is usually a rounded product
            if self.theta_b > self.b * self.K_g * (1 + 1e-9):
                problems.append(
                    f"theta_b={self.theta_b} exceeds gas-derived power b*K_g={self.b * self.K_g}"
                )
        if problems:
            raise ScenarioError("; ".join(problems))

    @property
    def d(self) -> float:
        return self.demand.initial_value

    @property
    def x_v(self) -> float:
        return self.spot_price.initial_value

    @property
    def x_c(self) -> float:
        return self.purchase_price.initial_value

    @property
    def p(self) -> float:
        return self.gas_price.initial_value

    @property
    def discount(self) -> float:
        """Incentive discount rate ``r + lambda``."""
        return self.r + self.lam

    def replace(self, **changes) -> "MarketScenario":
        """Copy with fields replaced; dotted keys reach into processes.

        >>> s.replace(**{"gas_price.initial_value": 53.5})  # doctest: +SKIP
        """
        flat, nested = {}, {}
        for key, value in changes.items():
            if "." in key:
                proc, field = key.split(".", 1)
                if proc not in PROCESSES or field not in ("initial_value", "drift", "volatility"):
                    raise ScenarioError(f"unknown parameter path {key!r}")
                nested.setdefault(proc, {})[field] = value
            else:
                name = "lam" if key == "lambda" else key
                if name not in {f.name for f in dataclasses.fields(self)}:
                    raise ScenarioError(f"unknown parameter {key!r}")
                flat[name] = value
        for proc, fields in nested.items():
            flat[proc] = dataclasses.replace(getattr(self, proc), **fields)
        return dataclasses.replace(self, **flat)


def compute_net_rates(s: MarketScenario, check: bool = True) -> NetRates:
    """Discount rates net of each process's expected growth.

    With ``check`` (the default) every rate must be strictly positive,
    otherwise :class:`AssumptionViolation` lists the offending ones.
    """
    r = s.r
    rates = NetRates(
        r_v=r - s.spot_price.net_rate_offset,
        r_p=r - s.gas_price.net_rate_offset,
        r_c=r - s.purchase_price.net_rate_offset,
        r_d=r - s.demand.net_rate_offset,
        r_cd=0.0,
    )
    rates = dataclasses.replace(
        rates,
        r_cd=rates.r_c + rates.r_d - r
        - s.rho_c * s.purchase_price.volatility * s.demand.volatility,
    )
    if check:
        bad = {k: v for k, v in rates.as_dict().items() if not v > 0}
        if bad:
            raise AssumptionViolation(bad)
    return rates


# --------------------------------------------------------------------------
# scenario files


def _number(section: str, key: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{section}{key}: expected a number, got {value!r}")
    return float(value)


def _gbm_from_table(name: str, table) -> GbmSpec:
    if not isinstance(table, dict):
        raise ScenarioError(f"[{name}] must be a table")
    unknown = set(table) - {"initial_value", "drift", "volatility"}
    if unknown:
        raise ScenarioError(f"[{name}] unknown key(s): {', '.join(sorted(unknown))}")
    missing = {"initial_value", "volatility"} - set(table)
    if missing:
        raise ScenarioError(f"[{name}] missing key(s): {', '.join(sorted(missing))}")
    vol = _number(f"{name}.", "volatility", table["volatility"])
    drift = table.get("drift", "martingale")
    if drift == "martingale":
        drift = -0.5 * vol**2
    else:
        drift = _number(f"{name}.", "drift", drift)
    return GbmSpec(_number(f"{name}.", "initial_value", table["initial_value"]), drift, vol)


def scenario_from_dict(data: dict) -> MarketScenario:
    """Build a scenario from parsed TOML.

    ``r`` and ``lambda`` are hourly; ``r_annual`` / ``lambda_annual`` are
    accepted instead and divided by 8760. ``drift = "martingale"`` (or an
    omitted drift) sets ``-volatility**2/2``.
    """
    allowed = set(_SCALARS) | set(PROCESSES) | {"r_annual", "lambda_annual"}
    allowed |= set(_IGNORED_CORRELATIONS)
    unknown = set(data) - allowed
    if unknown:
        raise ScenarioError(f"unknown key(s): {', '.join(sorted(unknown))}")
    for key in _IGNORED_CORRELATIONS:
        if key in data:
            log.warning("%s is accepted but ignored: only rho_c enters the model", key)

    values = {}
    for key, annual in (("r", "r_annual"), ("lambda", "lambda_annual")):
        if key in data and annual in data:
            raise ScenarioError(f"give either {key} or {annual}, not both")
        if annual in data:
            values[key] = _number("", annual, data[annual]) / HOURS_PER_YEAR
        elif key in data:
            values[key] = _number("", key, data[key])
    for key in _SCALARS:
        if key in ("r", "lambda"):
            continue
        if key in data:
            values[key] = _number("", key, data[key])
    missing = [k for k in _SCALARS if k not in values]
    missing += [p for p in PROCESSES if p not in data]
    if missing:
        raise ScenarioError(f"missing key(s): {', '.join(missing)}")

    procs = {p: _gbm_from_table(p, data[p]) for p in PROCESSES}
    values["lam"] = values.pop("lambda")
    return MarketScenario(**procs, **values)


def loads(text: str) -> MarketScenario:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"cannot parse scenario: {exc}") from exc
    return scenario_from_dict(data)


def load(path) -> MarketScenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc}") from exc
    try:
        return loads(text)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


def _fmt(x: float) -> str:
    # repr round-trips doubles exactly
    return repr(float(x))


def dumps(s: MarketScenario) -> str:
    lines = [
        "# time unit: hour; prices EUR/MWh; power MW; costs EUR/MW",
        f"r = {_fmt(s.r)}  # 1/h",
        f"lambda = {_fmt(s.lam)}  # 1/h, incentive expiry intensity",
        f"Z = {_fmt(s.Z)}  # EUR/MWh self-consumption incentive",
        f"c_h = {_fmt(s.c_h)}",
        f"c_b = {_fmt(s.c_b)}",
        f"theta_h = {_fmt(s.theta_h)}  # MW",
        f"theta_b = {_fmt(s.theta_b)}  # MW",
        f"K_g = {_fmt(s.K_g)}  # m3",
        f"b = {_fmt(s.b)}  # MW/m3",
        f"rho_c = {_fmt(s.rho_c)}  # Corr(W, W_c)",
    ]
    for proc in PROCESSES:
        g = getattr(s, proc)
        lines += [
            "",
            f"[{proc}]",
            f"initial_value = {_fmt(g.initial_value)}",
            f"drift = {_fmt(g.drift)}  # 1/h",
            f"volatility = {_fmt(g.volatility)}  # 1/sqrt(h)",
        ]
    return "\n".join(lines) + "\n"


def dump(s: MarketScenario, path) -> None:
    Path(path).write_text(dumps(s))


def example(name: str) -> MarketScenario:
    """Load a bundled scenario: ``"example1"``, ``"example1_table"`` or ``"example2"``."""
    ref = resources.files("recgame") / "data" / f"{name}.toml"
    if not ref.is_file():
        raise ScenarioError(f"no bundled scenario named {name!r}")
    return loads(ref.read_text())


def example_path(name: str) -> Path:
    return Path(str(resources.files("recgame") / "data" / f"{name}.toml"))
