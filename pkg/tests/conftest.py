import json
import time
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from snnswitch.classifier import split_train_test, train_adaboost
from snnswitch.dataset import SweepConfig, generate_sweep, label_sweep

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def serial_cost_cases():
    return json.loads((FIXTURES / "serial_cost_tuples.json").read_text())


@pytest.fixture(scope="session")
def timed_grid():
    """The full 16000-layer sweep, labelled once per test session, with its wall time."""
    start = time.perf_counter()
    rows = label_sweep(generate_sweep(SweepConfig()))
    return rows, time.perf_counter() - start


@pytest.fixture(scope="session")
def grid_rows(timed_grid):
    return timed_grid[0]


@pytest.fixture(scope="session")
def grid_model(grid_rows):
    train, test = split_train_test(grid_rows, 0.8, 0)
    return train_adaboost(train, n_rounds=200, seed=0, test_rows=test)


@pytest.fixture(scope="session")
def small_rows():
    cfg = SweepConfig(
        source_range=(100, 300, 500),
        target_range=(100, 300, 500),
        density_range=(0.3, 1.0),
        delay_range=(1, 2, 4, 8),
        base_seed=7,
    )
    return label_sweep(generate_sweep(cfg))


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion."""

    def record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
