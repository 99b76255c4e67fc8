import numpy as np
import pytest

from thzqkd import ExperimentConfig, build_channel


@pytest.fixture(scope="session")
def base_cfg():
    return ExperimentConfig()


def channel_for(cfg):
    return build_channel(cfg.environment(), cfg.tx_array(), cfg.rx_array())


@pytest.fixture(scope="session")
def h_32(base_cfg):
    return channel_for(base_cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, filled by tests/test_acceptance.py
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
