import pytest
from hypothesis import settings

from simulation.rng import RngContract


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run desk-scale Monte Carlo acceptance tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: desk-scale Monte Carlo run, needs --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def stream():
    return RngContract(20240101, 0).stream()


settings.register_profile("ci", settings(max_examples=500, deadline=None))
settings.register_profile("dev", settings(max_examples=50, deadline=None))
settings.load_profile("dev")
