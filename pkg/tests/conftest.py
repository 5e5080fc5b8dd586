import numpy as np
import pytest

from blockdiff import geometry, grid as gridmod


@pytest.fixture
def layered():
    """Two equal horizontal layers, 0.1 below 1.0."""
    return gridmod.from_array([[0.1], [1.0]])


@pytest.fixture(params=[1, 2, 3, 4], ids=lambda k: f"layout{k}")
def layout(request):
    return request.param, geometry.case_layout(request.param)


def rot90(grid):
    return gridmod.from_array(np.rot90(grid.D))


# criterion number -> one-line verdict, filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
