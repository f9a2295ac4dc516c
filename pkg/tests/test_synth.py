import json

import numpy as np
import pytest

from demand_backcast.errors import InvalidScenario
from demand_backcast.features import calendar_arrays
from demand_backcast.ingest import join_hourly, parse_series_csv
from demand_backcast.synth import (
    SynthScenario,
    TemperatureModel,
    WinterRegime,
    closed_form_demand,
    generate,
    realistic_scenario,
    winter_regime_scenario,
    write_scenario_csvs,
)

FLAT = dict(cooling_slope=0.0, heating_slope=0.0, noise_sigma_mw=0.0)


def test_constant_case():
    r = generate(SynthScenario(**FLAT), seed=1)
    assert np.all(r.series.demand_mw == 10_000.0)


def test_cooling_hinge():
    sc = SynthScenario(base_load_mw=1000.0, cooling_slope=50.0, heating_slope=0.0)
    ts = np.array(["2015-03-01T00"], dtype="datetime64[h]")
    assert closed_form_demand(sc, [sc.balance_temp_c + 10], ts)[0] == pytest.approx(1500.0)


def test_same_seed_same_series():
    sc = realistic_scenario(noise_sigma_mw=100.0, end="2015-01-10T23:00")
    a, b = generate(sc, 5), generate(sc, 5)
    assert np.array_equal(a.series.demand_mw, b.series.demand_mw)
    assert np.array_equal(a.series.temperature_c, b.series.temperature_c)
    assert not np.array_equal(a.series.demand_mw, generate(sc, 6).series.demand_mw)


@pytest.mark.parametrize(
    "kw",
    [
        {"cooling_slope": -1.0},
        {"noise_sigma_mw": -1.0},
        {"end": "2015-01-01T10:00"},
        {"hour_profile": [0.0] * 23},
    ],
)
def test_invalid_scenarios(kw):
    with pytest.raises(InvalidScenario):
        SynthScenario(**kw)


def test_unknown_scenario_key(tmp_path):
    p = tmp_path / "s.json"
    p.write_text(json.dumps({"base_load": 5}))
    with pytest.raises(InvalidScenario):
        SynthScenario.from_json(p)


def test_temperature_within_bounds():
    tm = TemperatureModel(annual_mean_c=20, seasonal_amplitude_c=30, noise_sigma_c=10, min_c=-5, max_c=35)
    r = generate(SynthScenario(temperature=tm, end="2015-12-31T23:00"), 0)
    assert r.series.temperature_c.min() >= -5 and r.series.temperature_c.max() <= 35


def test_negative_demand_clamped():
    sc = SynthScenario(base_load_mw=10.0, noise_sigma_mw=500.0, end="2015-01-05T23:00", **{k: v for k, v in FLAT.items() if k != "noise_sigma_mw"})
    r = generate(sc, 0)
    assert r.clamped > 0 and r.series.demand_mw.min() == 0.0


def test_noiseless_channel_matches_closed_form():
    sc = realistic_scenario(winter_regime=WinterRegime(12.0, 300.0), noise_sigma_mw=50.0)
    r = generate(sc, 3)
    rng = np.random.default_rng(0)
    idx = rng.choice(len(r.series), 100, replace=False)
    hp, dp, mp = (np.asarray(x) for x in (sc.hour_profile, sc.dow_profile, sc.month_profile))
    for i in idx:
        ts = r.series.timestamps[i].astype(object)
        t = r.series.temperature_c[i]
        expected = (
            sc.base_load_mw
            + hp[ts.hour]
            + dp[ts.weekday()]
            + mp[ts.month - 1]
            + sc.year_trend * (ts.year - 2015)
            + sc.cooling_slope * max(0.0, t - sc.balance_temp_c)
            + sc.heating_slope * max(0.0, sc.balance_temp_c - t)
            + (300.0 * max(0.0, t - 12.0) if ts.month >= 10 else 0.0)
        )
        assert r.noiseless_mw[i] == pytest.approx(expected, rel=1e-12)


def test_csv_output_reads_back(tmp_path):
    sc = realistic_scenario(end="2015-01-03T23:00", noise_sigma_mw=10.0)
    r = generate(sc, 0)
    paths = write_scenario_csvs(r, tmp_path)
    s = join_hourly(parse_series_csv(paths["demand"], "MW"), parse_series_csv(paths["temperature"], "Kelvin"))
    assert np.array_equal(s.timestamps, r.series.timestamps)
    assert np.allclose(s.temperature_c, r.series.temperature_c, atol=1e-9)
    assert np.array_equal(s.demand_mw, r.series.demand_mw)


def test_winter_regime_preset_shape():
    sc = winter_regime_scenario()
    r = generate(sc, 0)
    months = calendar_arrays(r.series.timestamps)["month"]
    winter, summer = months >= 10, (months >= 7) & (months <= 9)
    # winter demand varies far less than summer demand
    assert r.series.demand_mw[winter].std() < 0.5 * r.series.demand_mw[summer].std()
