import math

import pytest
from hypothesis import settings

from fragarea.measures import Atomic, BetaSplit, Brownian, FragmentationParams

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

SQRT_PI_8 = math.sqrt(math.pi / 8.0)


@pytest.fixture
def brownian():
    return FragmentationParams(Brownian(), -0.5)


@pytest.fixture
def beta32():
    return FragmentationParams(BetaSplit(c=1.0, beta=-1.5), -0.5)


@pytest.fixture
def dyadic():
    return FragmentationParams(Atomic(((0.5, 1.0),)), -0.5)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(module.RESULTS, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
        terminalreporter.write_line(line)
