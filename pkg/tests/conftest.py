import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from doma.scenario import ScenarioConfig  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def base_config():
    return ScenarioConfig(
        total_bandwidth_hz=8.0, subband_bandwidth_hz=1.0, overlap_fraction=0.0,
        cluster_size=8, ap_count=2, per_ap_cluster_power_budget=10.0, noise_power=1.0,
        ici_power_fraction=0.1, ftpa_decay=0.5, epsilon=0.1, trials=200, seed=7,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    if call.when == "call":
        item.rep_call = outcome.get_result()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
