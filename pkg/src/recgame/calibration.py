"""GBM calibration from hourly market data.

The pipeline is: read an hourly series, remove seasonality by least-squares
harmonic regression on the log values at given frequencies, then estimate
drift and volatility from the hourly log increments of what is left.  For
``X(s) = x exp(mu s + sigma W(s))`` the increments are i.i.d.
``Normal(mu dt, sigma^2 dt)``, so the estimators are the sample mean and
standard deviation, rescaled.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path
from statistics import NormalDist

import numpy as np

from .scenario import GbmSpec

log = logging.getLogger(__name__)

MIN_POINTS = 100
MAX_GAP_HOURS = 3
DEGENERATE_SIGMA = 1e-12
_Z95 = NormalDist().inv_cdf(0.975)

# cycles per hour; the gas set is published per day for a daily series and
# is rescaled here
FREQUENCIES = {
    "demand": (0.04168, 0.00595, 0.00035, 0.0007, 0.08336),
    "gas_price": tuple(f / 24.0 for f in (0.00271, 0.00542, 0.01085, 0.00814)),
    "spot_price": (0.08335, 0.04165, 0.00595, 0.01190),
}


class CalibrationError(ValueError):
    pass


class SingularDesign(CalibrationError):
    """Duplicate or aliased frequencies make the regression rank-deficient."""


class NonPositiveValue(CalibrationError):
    pass


class InsufficientData(CalibrationError):
    pass


class GapTooLarge(CalibrationError):
    pass


class CsvFormatError(CalibrationError):
    pass


@dataclass(frozen=True)
class HourlySeries:
    """Positive values on a regular hourly grid starting at ``start``."""

    values: np.ndarray
    start: datetime | None = None
    name: str = ""

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise CalibrationError("series must be one-dimensional")
        if not np.all(np.isfinite(v)):
            raise CalibrationError("series contains non-finite values")
        bad = np.flatnonzero(v <= 0)
        if bad.size:
            raise NonPositiveValue(
                f"{self.name or 'series'}: value {v[bad[0]]} at index {bad[0]} is not positive"
            )
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)

    @property
    def hours(self) -> np.ndarray:
        return np.arange(len(self.values), dtype=float)

    def scaled(self, factor: float) -> "HourlySeries":
        return HourlySeries(self.values * factor, self.start, self.name)


@dataclass(frozen=True)
class SeasonalComponent:
    """``amplitude * sin(2 pi frequency t + phase)`` in log space, t in hours."""

    frequency: float
    amplitude: float
    phase: float


@dataclass(frozen=True)
class CalibrationResult:
    intercept: float
    mu_hat: float
    mu_ci: tuple[float, float]
    sigma_hat: float
    seasonal_components: list[SeasonalComponent] = field(default_factory=list)
    n_increments: int = 0
    degenerate: bool = False

    def gbm(self, martingale: bool = True) -> GbmSpec:
        drift = -0.5 * self.sigma_hat**2 if martingale else self.mu_hat
        return GbmSpec(self.intercept, drift, self.sigma_hat)


# --------------------------------------------------------------------------
# ingestion


def fill_gaps(hours: np.ndarray, values: np.ndarray, max_gap: int = MAX_GAP_HOURS,
              where: str = "series") -> np.ndarray:
    """Put values on a full hourly grid, interpolating short gaps in log space."""
    hours = np.asarray(hours, dtype=np.int64)
    steps = np.diff(hours)
    if np.any(steps <= 0):
        i = int(np.flatnonzero(steps <= 0)[0])
        raise CsvFormatError(f"{where}: timestamps not strictly increasing at row {i + 2}")
    missing = steps - 1
    if np.any(missing > max_gap):
        i = int(np.flatnonzero(missing > max_gap)[0])
        raise GapTooLarge(
            f"{where}: {int(missing[i])} missing hour(s) after row {i + 1}; at most {max_gap} allowed"
        )
    values = np.asarray(values, dtype=float)
    if not np.any(missing):
        return values
    log.warning("%s: interpolating %d missing hour(s) in log space", where, int(missing.sum()))
    grid = np.arange(hours[0], hours[-1] + 1)
    out = np.exp(np.interp(grid, hours, np.log(values)))
    out[hours - hours[0]] = values  # observed points stay bit-exact
    return out


def read_csv(path, max_gap: int = MAX_GAP_HOURS) -> HourlySeries:
    """Read ``timestamp,value`` rows (header required, ISO-8601 hourly stamps)."""
    path = Path(path)
    stamps, values = [], []
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise CsvFormatError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["timestamp", "value"]:
            raise CsvFormatError(f"{path}:1: expected header 'timestamp,value', got {header}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise CsvFormatError(f"{path}:{line}: expected 2 columns, got {len(row)}")
            try:
                ts = datetime.fromisoformat(row[0].strip())
            except ValueError as exc:
                raise CsvFormatError(f"{path}:{line}: bad timestamp {row[0]!r}") from exc
            if ts.minute or ts.second or ts.microsecond:
                raise CsvFormatError(f"{path}:{line}: timestamp {row[0]!r} is not on the hour")
            try:
                val = float(row[1])
            except ValueError as exc:
                raise CsvFormatError(f"{path}:{line}: bad value {row[1]!r}") from exc
            if not (math.isfinite(val) and val > 0):
                raise NonPositiveValue(f"{path}:{line}: value {val} is not positive")
            stamps.append(ts)
            values.append(val)
    if not stamps:
        raise InsufficientData(f"{path}: no data rows")
    t0 = stamps[0]
    try:
        hours = np.array([(ts - t0) // timedelta(hours=1) for ts in stamps])
    except TypeError as exc:
        raise CsvFormatError(f"{path}: mixed timezone-aware and naive timestamps") from exc
    filled = fill_gaps(hours, np.array(values), max_gap, where=str(path))
    return HourlySeries(filled, t0, path.stem)


def write_csv(series: HourlySeries, path) -> None:
    start = series.start or datetime(2000, 1, 1)
    with Path(path).open("w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["timestamp", "value"])
        for i, v in enumerate(series.values):
            out.writerow([(start + timedelta(hours=i)).isoformat(), repr(float(v))])


# --------------------------------------------------------------------------
# estimation


def _as_values(series) -> np.ndarray:
    if isinstance(series, HourlySeries):
        return series.values
    return HourlySeries(np.asarray(series, dtype=float)).values


def _check_frequencies(freqs) -> list[float]:
    freqs = [float(f) for f in freqs]
    for f in freqs:
        if not 0.0 < f < 0.5:
            raise SingularDesign(f"frequency {f} outside (0, 0.5) cycles per hour aliases")
    if len(set(freqs)) != len(freqs):
        raise SingularDesign(f"duplicate frequencies in {freqs}")
    return freqs


def harmonic_design(n: int, freqs) -> np.ndarray:
    """Columns ``1, sin(2 pi f t), cos(2 pi f t), ...`` for ``t = 0..n-1``."""
    t = np.arange(n, dtype=float)
    cols = [np.ones(n)]
    for f in freqs:
        arg = 2.0 * np.pi * f * t
        cols += [np.sin(arg), np.cos(arg)]
    return np.column_stack(cols)


def deseasonalize(series, frequencies) -> tuple[np.ndarray, list[SeasonalComponent], float]:
    """Remove harmonic seasonality from ``log(series)``.

    Returns ``(residual, components, constant)``: the residual is
    ``exp(log x - seasonal part)`` and keeps the regression constant, so
    it is the deseasonalised series on the original scale.
    """
    x = _as_values(series)
    freqs = _check_frequencies(frequencies)
    X = harmonic_design(len(x), freqs)
    if X.shape[1] > len(x):
        raise SingularDesign(f"{X.shape[1]} regressors for {len(x)} points")
    logx = np.log(x)
    coef, _, rank, sv = np.linalg.lstsq(X, logx, rcond=None)
    if rank < X.shape[1] or sv[-1] < 1e-10 * sv[0]:
        raise SingularDesign("harmonic design is rank-deficient; frequencies too close for this span")
    seasonal = X[:, 1:] @ coef[1:]
    comps = []
    for i, f in enumerate(freqs):
        a, b = coef[1 + 2 * i], coef[2 + 2 * i]
        comps.append(SeasonalComponent(f, float(math.hypot(a, b)), float(math.atan2(b, a))))
    return np.exp(logx - seasonal), comps, float(coef[0])


def estimate_gbm(series, dt: float = 1.0, intercept: float | None = None,
                 components=()) -> CalibrationResult:
    """Drift and volatility (per hour) from log increments.

    ``intercept`` defaults to ``exp(mean(log x))``, the constant of a
    harmonic regression with no frequencies.
    """
    x = _as_values(series)
    if len(x) < MIN_POINTS:
        raise InsufficientData(f"need at least {MIN_POINTS} points, got {len(x)}")
    logx = np.log(x)
    inc = np.diff(logx)
    n = len(inc)
    mu = float(inc.mean() / dt)
    sigma = float(inc.std(ddof=1) / math.sqrt(dt))
    degenerate = sigma < DEGENERATE_SIGMA
    if degenerate:
        log.warning("volatility estimate %.3g is numerically zero; series is deterministic", sigma)
    half = _Z95 * sigma / math.sqrt(n * dt)
    if intercept is None:
        intercept = float(np.exp(logx.mean()))
    return CalibrationResult(intercept, mu, (mu - half, mu + half), sigma,
                             list(components), n, degenerate)


def calibrate(series, frequencies=()) -> CalibrationResult:
    """Deseasonalise (if frequencies are given) and estimate the GBM."""
    if not len(frequencies):
        return estimate_gbm(series)
    resid, comps, const = deseasonalize(series, frequencies)
    return estimate_gbm(resid, intercept=math.exp(const), components=comps)


# --------------------------------------------------------------------------
# report


def fragment(results: dict[str, CalibrationResult], drift: str = "martingale") -> str:
    """Scenario-file tables for calibrated processes.

    The active ``drift`` line is martingale-adjusted (``-sigma^2/2``) by
    default or the raw estimate with ``drift="raw"``; the other one is kept
    as a comment so either can be switched on by hand.
    """
    if drift not in ("martingale", "raw"):
        raise ValueError("drift must be 'martingale' or 'raw'")
    out = []
    for name, res in results.items():
        mart = -0.5 * res.sigma_hat**2
        lo, hi = res.mu_ci
        active, other = (mart, res.mu_hat) if drift == "martingale" else (res.mu_hat, mart)
        other_label = "raw" if drift == "martingale" else "martingale"
        out += [
            f"[{name}]",
            f"initial_value = {res.intercept!r}",
            f"volatility = {res.sigma_hat!r}",
            f"drift = {active!r}  # {drift}",
            f"# drift_{other_label} = {other!r}",
            f"# drift_raw 95% CI = [{lo!r}, {hi!r}]  ({res.n_increments} increments)",
        ]
        if res.degenerate:
            out.append("# WARNING: degenerate series, volatility is numerically zero")
        for c in res.seasonal_components:
            out.append(f"# seasonal f={c.frequency:.6g}/h amplitude={c.amplitude:.6g} phase={c.phase:.6g}")
        out.append("")
    return "\n".join(out)
