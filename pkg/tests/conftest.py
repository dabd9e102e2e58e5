import functools

import pytest
from hypothesis import HealthCheck, settings

from transducernet.energy import get_profile, traditional_equivalent
from transducernet.network import simulate
from transducernet.scenario import builtin_home
from transducernet.server import Store

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], max_examples=100
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def zigbee():
    return get_profile("zigbee-default")


@pytest.fixture(scope="session")
def pottie():
    return get_profile("pottie-reference")


@functools.lru_cache(maxsize=None)
def home_run(minutes: int, traditional: bool = False, keep: bool = True):
    """Cached short runs of the built-in home (records kept for inspection)."""
    sc = builtin_home(horizon_ms=minutes * 60_000)
    if traditional:
        sc = traditional_equivalent(sc)
    return simulate(sc, get_profile("zigbee-default"), store=Store(keep_records=keep))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance")
        for line in RESULTS:
            terminalreporter.write_line(line)
