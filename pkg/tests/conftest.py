import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mds.moebius import Canonical, Perturbed, Snowflake

settings.register_profile("mds", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("mds")

SQUARE = (0.0, np.pi / 2, np.pi, 3 * np.pi / 2)


@pytest.fixture
def canonical():
    return Canonical()


@pytest.fixture(params=["canonical", "snowflake(0.5)", "snowflake(2)", "perturbed(1e-5)"])
def monotone_family(request):
    return {"canonical": Canonical(), "snowflake(0.5)": Snowflake(0.5), "snowflake(2)": Snowflake(2.0),
            "perturbed(1e-5)": Perturbed(1e-5)}[request.param]


# one summary line per acceptance criterion, filled in by test_acceptance.py
CRITERIA = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        terminalreporter.write_line(CRITERIA[k])
