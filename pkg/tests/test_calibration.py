import logging
import math

import numpy as np
import pytest

from recgame.calibration import (FREQUENCIES, CsvFormatError, GapTooLarge, HourlySeries,
                                 InsufficientData, NonPositiveValue, SingularDesign, calibrate,
                                 deseasonalize, estimate_gbm, fragment, read_csv, write_csv)
from recgame.scenario import GbmSpec, dumps, example, loads
from recgame.simulation import simulate_gbm

TRUE = GbmSpec(30000.0, -0.004, 0.09)


def seasonal(n, comps):
    t = np.arange(n)
    return sum(a * np.sin(2 * np.pi * f * t + ph) for f, a, ph in comps)


def test_constant_series():
    x = np.full(500, 7.5)
    resid, comps, const = deseasonalize(x, [1 / 24, 1 / 168])
    assert all(c.amplitude < 1e-12 for c in comps)
    assert np.allclose(resid, x, rtol=1e-13)
    assert math.exp(const) == pytest.approx(7.5, rel=1e-13)


def test_pure_daily_sinusoid():
    x = np.exp(3.0 + 0.25 * np.sin(2 * np.pi * np.arange(2000) / 24 + 0.4))
    resid, comps, const = deseasonalize(x, [1 / 24])
    assert comps[0].amplitude == pytest.approx(0.25, abs=1e-10)
    assert comps[0].phase == pytest.approx(0.4, abs=1e-9)
    assert np.allclose(resid, math.exp(3.0), rtol=1e-10)


def test_refit_removes_everything():
    rng = np.random.default_rng(1)
    n = 20_000
    x = simulate_gbm(GbmSpec(100.0, 0.0, 0.01), n, seed=2)
    x = x * np.exp(seasonal(n, [(1 / 24, 0.1, 0.3), (1 / 168, 0.05, 1.0)]) + 0.01 * rng.standard_normal(n))
    freqs = FREQUENCIES["demand"]
    resid, comps, _ = deseasonalize(x, freqs)
    _, again, _ = deseasonalize(resid, freqs)
    biggest = max(c.amplitude for c in comps)
    assert max(c.amplitude for c in again) < 1e-8 * biggest


def test_presets_accepted():
    x = simulate_gbm(GbmSpec(100.0, 0.0, 0.01), 20_000, seed=3)
    for name, freqs in FREQUENCIES.items():
        _, comps, _ = deseasonalize(x, freqs)
        assert len(comps) == len(freqs)
    assert FREQUENCIES["demand"] == (0.04168, 0.00595, 0.00035, 0.0007, 0.08336)


@pytest.mark.parametrize("freqs", [[0.1, 0.1], [0.5], [0.0], [0.6], [1e-6, 2e-6]])
def test_singular_design(freqs):
    x = simulate_gbm(GbmSpec(100.0, 0.0, 0.01), 500, seed=4)
    with pytest.raises(SingularDesign):
        deseasonalize(x, freqs)


def test_gbm_round_trip():
    x = simulate_gbm(TRUE, 50_000, seed=5)
    res = estimate_gbm(x)
    assert res.sigma_hat == pytest.approx(0.09, rel=0.02)
    assert res.mu_ci[0] < res.mu_hat < res.mu_ci[1]
    assert res.mu_ci[0] <= -0.004 <= res.mu_ci[1]


def test_ci_coverage():
    hits = 0
    for seed in range(100):
        lo, hi = estimate_gbm(simulate_gbm(TRUE, 50_000, seed=1000 + seed)).mu_ci
        hits += lo <= TRUE.drift <= hi
    assert hits >= 90


def test_seasonal_gbm_pipeline():
    n = 50_000
    x = simulate_gbm(TRUE, n, seed=6) * np.exp(seasonal(n, [(0.04168, 0.3, 0.2), (0.00595, 0.1, 2.0),
                                                           (0.08336, 0.05, 1.0)]))
    naive = estimate_gbm(x).sigma_hat
    res = calibrate(x, FREQUENCIES["demand"])
    assert res.sigma_hat == pytest.approx(0.09, rel=0.05)
    assert abs(naive - 0.09) > abs(res.sigma_hat - 0.09)
    assert len(res.seasonal_components) == 5


def test_scale_equivariance():
    x = simulate_gbm(TRUE, 5000, seed=7)
    a, b = calibrate(x, [1 / 24]), calibrate(3.0 * x, [1 / 24])
    assert b.mu_hat == pytest.approx(a.mu_hat, rel=1e-9, abs=1e-15)
    assert b.sigma_hat == pytest.approx(a.sigma_hat, rel=1e-9)
    assert b.intercept == pytest.approx(3.0 * a.intercept, rel=1e-9)


def test_deterministic_series_is_flagged(caplog):
    x = 5.0 * np.exp(-0.001 * np.arange(1000))
    with caplog.at_level(logging.WARNING):
        res = estimate_gbm(x)
    assert res.degenerate and res.sigma_hat < 1e-12
    assert res.mu_hat == pytest.approx(-0.001, rel=1e-9)
    assert "deterministic" in caplog.text


def test_input_errors():
    with pytest.raises(InsufficientData):
        estimate_gbm(np.ones(50))
    with pytest.raises(NonPositiveValue):
        HourlySeries(np.array([1.0, -2.0, 3.0]))


def test_martingale_spec_and_fragment_round_trip():
    x = simulate_gbm(GbmSpec(0.3, -7e-4, 0.03812835), 20_000, seed=8)
    res = calibrate(x)
    g = res.gbm()
    assert g.drift == -0.5 * res.sigma_hat**2
    assert res.gbm(martingale=False).drift == res.mu_hat
    text = fragment({"demand": res})
    base = dumps(example("example1"))
    head = base[: base.index("[demand]")]
    s = loads(head + text)
    assert s.demand.volatility == res.sigma_hat
    assert s.demand.initial_value == res.intercept
    raw = loads(head + fragment({"demand": res}, drift="raw"))
    assert raw.demand.drift == res.mu_hat
    # a realistic hourly volatility survives a scenario file unchanged
    s2 = s.replace(**{"demand.volatility": 0.03812835})
    assert loads(dumps(s2)).demand.volatility == 0.03812835


def test_csv_round_trip(tmp_path):
    x = simulate_gbm(GbmSpec(50.0, 0.0, 0.02), 300, seed=9)
    p = tmp_path / "spot.csv"
    write_csv(HourlySeries(x), p)
    back = read_csv(p)
    assert np.array_equal(back.values, x)
    assert back.name == "spot"


def _write(path, rows, header="timestamp,value"):
    path.write_text(header + "\n" + "\n".join(rows) + "\n")


def test_short_gap_interpolated(tmp_path, caplog):
    rows = [f"2021-01-01T{h:02d}:00:00,{10.0 * 2 ** (h / 4)}" for h in range(24) if h not in (5, 6)]
    p = tmp_path / "g.csv"
    _write(p, rows)
    with caplog.at_level(logging.WARNING):
        s = read_csv(p)
    assert len(s) == 24
    assert s.values[5] == pytest.approx(10.0 * 2 ** (5 / 4), rel=1e-12)
    assert "interpolating 2" in caplog.text


def test_long_gap_rejected(tmp_path):
    rows = [f"2021-01-01T{h:02d}:00:00,1.0" for h in range(24) if not 5 <= h < 15]
    p = tmp_path / "g.csv"
    _write(p, rows)
    with pytest.raises(GapTooLarge, match="10 missing"):
        read_csv(p)


def test_bad_rows_report_line(tmp_path):
    p = tmp_path / "bad.csv"
    _write(p, ["2021-01-01T00:00:00,1.0", "not a date,2.0"])
    with pytest.raises(CsvFormatError, match=r"bad.csv:3"):
        read_csv(p)
    _write(p, ["2021-01-01T00:30:00,1.0"])
    with pytest.raises(CsvFormatError, match="on the hour"):
        read_csv(p)
    _write(p, ["2021-01-01T00:00:00,1.0"], header="time,price")
    with pytest.raises(CsvFormatError, match="header"):
        read_csv(p)
    _write(p, ["2021-01-01T00:00:00,0.0"])
    with pytest.raises(NonPositiveValue, match=":2"):
        read_csv(p)
    _write(p, ["2021-01-01T01:00:00,1.0", "2021-01-01T00:00:00,1.0"])
    with pytest.raises(CsvFormatError, match="increasing"):
        read_csv(p)
