from pathlib import Path

import numpy as np
import pytest

from schrostab.operators import assemble_control, q_gradients
from schrostab.spectral import Grid, build_basis

SPECS = Path(__file__).resolve().parents[1] / "specs"

# certified generic pair: audit passes at K = 16 and K = 32
BUMP = dict(amplitude=20.0, center=0.4, width=50.0)
Q_AMPLITUDE = 5.0


def bump(x):
    return BUMP["amplitude"] * np.exp(-BUMP["width"] * (x - BUMP["center"]) ** 2)


def make_generic(k_modes=16, m_points=2000, q_amplitude=Q_AMPLITUDE):
    grid = Grid(0.0, 1.0, m_points)
    basis = build_basis(grid, bump(grid.x), k_modes)
    control = assemble_control(q_amplitude * grid.x, basis)
    grads = q_gradients(q_amplitude * grid.x_closed, grid.h)
    return basis, control, grads


@pytest.fixture(scope="session")
def generic():
    return make_generic()


@pytest.fixture(scope="session")
def free_unit_fine():
    """V = 0, Q = x on (0, 1), fine enough to resolve gap resonances."""
    grid = Grid(0.0, 1.0, 20000)
    basis = build_basis(grid, np.zeros(grid.m_points), 16)
    return basis, assemble_control(grid.x, basis)


@pytest.fixture(scope="session")
def spec_dir():
    return SPECS


_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
