import math

import pytest

from eitmirror.params import TWO_PI_MHZ, default_config, load_config, DEFAULT_CONFIG_TEXT

# filled by the acceptance tests, printed at the end of the session
ACCEPTANCE_LINES: dict[int, str] = {}


def mhz(x: float) -> float:
    return x * TWO_PI_MHZ


@pytest.fixture
def fig2():
    return default_config()


@pytest.fixture
def fig2_atom(fig2):
    return fig2.atom


@pytest.fixture
def config_text():
    return DEFAULT_CONFIG_TEXT


@pytest.fixture
def make_config():
    def make(*overrides):
        return load_config(DEFAULT_CONFIG_TEXT, list(overrides))
    return make


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
