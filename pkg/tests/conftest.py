import sys

import numpy as np
import pytest
from hypothesis import settings

from hadamard_ppa import EuclideanSpace, PoincareBall, SpiderSpace, make_space

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def shipped_spaces():
    return {
        "euclid1": EuclideanSpace(1),
        "euclid2": EuclideanSpace(2),
        "euclid3": EuclideanSpace(3),
        "poincare2": PoincareBall(2),
        "spider3": SpiderSpace(3),
        "spider5": SpiderSpace(5),
        "product": make_space({"kind": "product", "components": [
            {"kind": "euclidean", "dim": 1}, {"kind": "spider", "legs": 3}]}),
    }


@pytest.fixture(params=sorted(shipped_spaces()))
def space(request):
    return shipped_spaces()[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.report_lines():
        terminalreporter.write_line(line)
