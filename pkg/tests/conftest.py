import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from dnmembrane.mesh import build_rect_mesh  # noqa: E402


@pytest.fixture(scope="session")
def unit16():
    return build_rect_mesh(1.0, 1.0, 16)


@pytest.fixture(scope="session")
def unit32():
    return build_rect_mesh(1.0, 1.0, 32)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
