import logging

import numpy as np
import pytest
from scipy.linalg import expm

from schrostab.operators import (apply_A, assemble_control, extend_to_boundary, project_p1,
                                 q_gradients, truncation_sensitivity)
from schrostab.spectral import Grid, basis_state, build_basis, random_state

from .conftest import bump


@pytest.fixture(scope="module")
def free_unit():
    g = Grid(0.0, 1.0, 2000)
    return build_basis(g, np.zeros(g.m_points), 16)


def test_unit_control_is_identity(free_unit):
    ctl = assemble_control(np.ones(free_unit.grid.m_points), free_unit)
    assert np.abs(ctl.q_matrix - np.eye(16)).max() <= 1e-10


def test_linear_control_matrix_elements(free_unit):
    ctl = assemble_control(free_unit.grid.x, free_unit)
    assert ctl.q_matrix[0, 0] == pytest.approx(0.5, abs=1e-6)
    assert abs(ctl.q_matrix[0, 2]) <= 1e-8
    # <x e1, e2> = -16 / (9 pi^2) for the continuous sine basis
    assert ctl.q_matrix[0, 1] == pytest.approx(-16 / (9 * np.pi ** 2), rel=1e-5)


def test_symmetry_and_eig_reconstruction(generic):
    _, ctl, _ = generic
    q = ctl.q_matrix
    assert np.abs(q - q.T).max() <= 1e-12
    rebuilt = ctl.q_vecs @ np.diag(ctl.q_vals) @ ctl.q_vecs.T
    assert np.abs(rebuilt - q).max() <= 1e-10


def test_assemble_dimension_mismatch(free_unit):
    with pytest.raises(ValueError):
        assemble_control(np.ones(10), free_unit)


@pytest.mark.parametrize("s", [0.0, 1e-3, 0.37, -2.0])
def test_exp_apply_matches_expm(generic, s):
    _, ctl, _ = generic
    c = random_state(16, np.random.default_rng(3))
    ref = expm(-1j * s * ctl.q_matrix) @ c
    np.testing.assert_allclose(ctl.exp_apply(c, s), ref, atol=1e-13)


def test_apply_A(generic):
    basis = generic[0]
    np.testing.assert_array_equal(apply_A(basis_state(2, 16), basis),
                                  basis.eigenvalues[1] * basis_state(2, 16))
    np.testing.assert_array_equal(apply_A(np.zeros(16), basis), 0)
    c = random_state(16, np.random.default_rng(4))
    assert abs(np.vdot(c, apply_A(c, basis)).imag) <= 1e-12 * basis.eigenvalues.max()


def test_project_p1():
    assert np.all(project_p1(basis_state(1, 5)) == 0)
    np.testing.assert_array_equal(project_p1(basis_state(2, 5)), basis_state(2, 5))
    c = random_state(5, np.random.default_rng(5))
    np.testing.assert_array_equal(project_p1(project_p1(c)), project_p1(c))


def test_project_commutes_with_A(generic):
    basis = generic[0]
    c = random_state(16, np.random.default_rng(6))
    diff = project_p1(apply_A(c, basis)) - apply_A(project_p1(c), basis)
    assert np.abs(diff).max() == 0.0


def test_q_gradients_of_quadratic():
    g = Grid(0.0, 1.0, 99)
    grads = q_gradients(g.x_closed ** 2, g.h)
    mid = 0.5 * (g.x_closed[1:] + g.x_closed[:-1])
    np.testing.assert_allclose(grads.edge, 2 * mid, atol=1e-12)
    np.testing.assert_allclose(grads.laplacian, 2.0, atol=1e-9)


def test_extend_to_boundary_is_linear():
    g = Grid(0.0, 1.0, 10)
    np.testing.assert_allclose(extend_to_boundary(3 * g.x + 1), 3 * g.x_closed + 1)


def test_truncation_sensitivity_report(caplog):
    g = Grid(0.0, 1.0, 2000)
    v = bump(g.x)
    small = build_basis(g, v, 16)
    large = build_basis(g, v, 32)
    drift = truncation_sensitivity(small, assemble_control(g.x, small),
                                   assemble_control(g.x, large))
    logging.getLogger(__name__).info("Q_jk truncation sensitivity: %.3e", drift)
    # Galerkin entries depend only on the retained modes themselves
    assert drift <= 1e-8
