import numpy as np
import pytest

from dynmem.generators import make_preset


@pytest.fixture(params=["classical", "tempered", "affine", "hybrid"])
def preset(request):
    g, th = make_preset(request.param)
    return request.param, g, th


@pytest.fixture
def rng():
    return np.random.default_rng(20240617)


def pytest_terminal_summary(terminalreporter):
    # one line per acceptance criterion, in criterion order
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when == "call" and "test_acceptance.py::test_criterion_" in rep.nodeid:
                lines.append((rep.nodeid.split("::")[-1], outcome))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in sorted(lines):
        number = int(name.split("_")[2])
        label = " ".join(name.split("_")[3:])
        terminalreporter.write_line(
            f"criterion {number:2d} {'PASS' if outcome == 'passed' else 'FAIL'}  {label}")
