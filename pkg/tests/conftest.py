import os

import pytest
from hypothesis import HealthCheck, settings

from uavgather.instance import FleetParams, generate_random_instance, make_instance

settings.register_profile("ci", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("dev", max_examples=15, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))


@pytest.fixture
def single_node():
    return make_instance([(10.0, 0.0)], [20.0])


@pytest.fixture
def small_instance():
    return generate_random_instance(6, seed=3, fleet=FleetParams(uav_count=2, max_tour_length=100))


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
