import re

import pytest

from kolmogorov_harnack import build_structure, pipeline, prototype


@pytest.fixture(scope="session")
def proto():
    return prototype()


@pytest.fixture(scope="session")
def s21():
    """Three-dimensional structure with blocks of sizes 2 and 1."""
    return build_structure([2, 1], [[[1.0], [0.5]]])


@pytest.fixture(scope="session")
def s111():
    """Two steps of degeneracy, N = 3, Q = 9."""
    return build_structure([1, 1, 1], [[[1.0]], [[1.0]]])


@pytest.fixture(scope="session")
def consts(proto):
    return pipeline(proto, "H1", 1.0, 1.2)


# one summary line per acceptance criterion

_CRITERIA = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", report.nodeid)
    if not m:
        return
    key = (int(m.group(1)), m.group(2))
    if report.when == "call" or report.outcome != "passed":
        prev = _CRITERIA.get(key)
        if prev is None or prev[0] == "PASS":
            _CRITERIA[key] = ("PASS" if report.passed else "FAIL", report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for (num, name), (status, dur) in sorted(_CRITERIA.items()):
        tr.write_line(f"criterion {num:2d} {name.replace('_', ' '):<28s} {status}  ({dur:.2f} s)")
