import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from windflex import dataio
from windflex.config import load_config

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def project():
    return load_config()


@pytest.fixture(scope="session")
def wind_params(project):
    return dataio.load_wind_params(project.wind_params)


@pytest.fixture(scope="session")
def demand_params(project):
    return dataio.load_demand_params(project.demand_params)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    acceptance = __import__("sys").modules.get("test_acceptance")
    lines = getattr(acceptance, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
