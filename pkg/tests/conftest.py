import os

import pytest
from hypothesis import HealthCheck, settings

from hpz.model import PhysicalConfig

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=400)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def ohmic_high():
    return PhysicalConfig.build(temperature=1.0, regime="high")


@pytest.fixture
def srt_high():
    return PhysicalConfig.build(bath_kind="srt", relaxation_time=0.1, temperature=10.0, regime="high")


@pytest.fixture
def srt_zero():
    return PhysicalConfig.build(bath_kind="srt", relaxation_time=0.1)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
