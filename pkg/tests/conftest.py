from __future__ import annotations

import random
from pathlib import Path

import pytest

from kcrb.trust import generate_random, load_config

ROOT = Path(__file__).resolve().parents[1]
EXAMPLE1 = ROOT / "configs" / "example1.json"

# Labels of the shipped four-process config, as ids.
P1, P2, P3, P4 = range(4)


@pytest.fixture(scope="session")
def example1():
    return load_config(EXAMPLE1)


@pytest.fixture(scope="session")
def example1_path():
    return str(EXAMPLE1)


def random_instances(seed: int, count: int, n_max: int = 5):
    rng = random.Random(seed)
    return [generate_random(rng, rng.randint(1, n_max)) for _ in range(count)]


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
