import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from demand_backcast.ingest import HourlySeries

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def hourly(start: str, n: int, demand=None, temperature=None) -> HourlySeries:
    ts = np.datetime64(start, "h") + np.arange(n).astype("timedelta64[h]")
    temp = np.linspace(0.0, 30.0, n) if temperature is None else np.asarray(temperature, dtype=float)
    dem = np.full(n, 1000.0) if demand is None else np.asarray(demand, dtype=float)
    return HourlySeries(ts, dem, temp, ("test",))


@pytest.fixture
def make_series():
    return hourly


def write_csv(path, rows, header=("timestamp", "value")):
    lines = [",".join(header)] + [",".join(map(str, r)) for r in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def small_world(start="2012-01-01T00:00", era_start="2014-01-01T00", end="2014-12-31T23:00", seed=0, sigma=150.0):
    """Synthetic temperature record whose demand is only known from ``era_start`` on."""
    from demand_backcast.synth import generate, realistic_scenario

    r = generate(realistic_scenario(start=start, end=end, noise_sigma_mw=sigma), seed)
    s = r.series
    d = s.demand_mw.copy()
    d[s.timestamps < np.datetime64(era_start, "h")] = np.nan
    return HourlySeries(s.timestamps, d, s.temperature_c, ("synthetic",))


FAST_TRAIN = {"epochs": 2, "hidden_size": 8, "dense_units": 8, "batch_size": 256}


ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, title: str, passed: bool, detail: str) -> None:
    line = f"criterion {number:>2}  {'PASS' if passed else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
