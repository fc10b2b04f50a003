import numpy as np
import pytest

from nodecount.dataset import Dataset
from nodecount.synth import GeneratorConfig, generate


@pytest.fixture(scope="session")
def campaign():
    """Default synthetic campaign, seed 42 (5400 examples)."""
    return generate(GeneratorConfig(seed=42))


def make_dataset(eta, labels, tx_power=10, distance=5, channel=6, time_of_day="afternoon"):
    m = len(eta)
    return Dataset(
        eta=np.asarray(eta, dtype=float),
        tx_power=np.broadcast_to(tx_power, m),
        distance=np.broadcast_to(distance, m),
        channel=np.broadcast_to(channel, m),
        time_of_day=np.array([time_of_day] * m, dtype=object),
        labels=np.asarray(labels),
    )


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
