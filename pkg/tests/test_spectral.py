import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from schrostab.spectral import (Grid, SpectralError, basis_state, build_basis, from_grid,
                                random_state, sobolev_norms, to_grid)

from .conftest import bump


@pytest.fixture(scope="module")
def free_pi():
    grid = Grid(0.0, np.pi, 4000)
    return build_basis(grid, np.zeros(grid.m_points), 10)


@pytest.fixture(scope="module")
def bump_basis():
    grid = Grid(0.0, 1.0, 1000)
    return build_basis(grid, bump(grid.x), 12)


def test_grid_nodes():
    g = Grid(0.0, 1.0, 4)
    assert g.h == pytest.approx(0.2)
    np.testing.assert_allclose(g.x, [0.2, 0.4, 0.6, 0.8])
    assert g.x_closed[0] == 0.0 and g.x_closed[-1] == pytest.approx(1.0)


@pytest.mark.parametrize("a, b, m", [(1.0, 1.0, 10), (0.0, 1.0, 0)])
def test_grid_rejects_bad_input(a, b, m):
    with pytest.raises(ValueError):
        Grid(a, b, m)


def test_free_spectrum_on_zero_pi(free_pi):
    k = np.arange(1, 6)
    np.testing.assert_allclose(free_pi.eigenvalues[:5] / k ** 2, 1.0, rtol=0, atol=1e-4)


def test_constant_shift(free_pi):
    grid = free_pi.grid
    shifted = build_basis(grid, np.full(grid.m_points, 3.5), free_pi.k_modes)
    np.testing.assert_allclose(shifted.eigenvalues - free_pi.eigenvalues, 3.5, atol=1e-8)
    np.testing.assert_allclose(shifted.eigenvectors, free_pi.eigenvectors, atol=1e-8)


def test_bump_matches_refined_grid():
    # oracle: same operator on a grid with h halved
    coarse = Grid(0.0, 1.0, 4000)
    fine = Grid(0.0, 1.0, 8001)
    lam_c = build_basis(coarse, bump(coarse.x), 12).eigenvalues
    lam_f = build_basis(fine, bump(fine.x), 12).eigenvalues
    np.testing.assert_allclose(lam_c, lam_f, rtol=1e-5)


def test_richardson_second_order():
    K = 12
    lams = []
    for m in (499, 999, 1999):  # h, h/2, h/4
        g = Grid(0.0, 1.0, m)
        lams.append(build_basis(g, bump(g.x), K).eigenvalues)
    ratio = (lams[0] - lams[1]) / (lams[1] - lams[2])
    assert np.all((ratio[:K // 4] >= 3.5) & (ratio[:K // 4] <= 4.5)), ratio


def test_orthonormal_and_rayleigh(bump_basis):
    e, h = bump_basis.eigenvectors, bump_basis.h
    gram = h * e.T @ e
    assert np.abs(gram - np.eye(bump_basis.k_modes)).max() <= 1e-10
    for k, lam in enumerate(bump_basis.eigenvalues):
        rq = h * e[:, k] @ bump_basis.apply_operator_grid(e[:, k])
        assert abs(rq - lam) <= 1e-8 * (1 + abs(lam))


def test_ordering_and_sign_convention(bump_basis):
    lam = bump_basis.eigenvalues
    assert lam[1] - lam[0] > 0
    assert np.all(np.diff(lam) >= 0)
    for col in bump_basis.eigenvectors.T:
        first = col[np.flatnonzero(np.abs(col) > 1e-14 * np.abs(col).max())[0]]
        assert first > 0


def test_basis_is_read_only(bump_basis):
    with pytest.raises(ValueError):
        bump_basis.eigenvalues[0] = 0.0


def test_degenerate_ground_state_rejected():
    # symmetric double well with an impenetrable barrier: tunnelling splitting underflows
    g = Grid(0.0, 1.0, 400)
    v = np.where(np.abs(g.x - 0.5) < 0.1, 1e7, 0.0)
    with pytest.raises(SpectralError, match="degenerate"):
        build_basis(g, v, 4)


def test_build_basis_preconditions():
    g = Grid(0.0, 1.0, 50)
    with pytest.raises(ValueError):
        build_basis(g, np.zeros(49), 3)
    with pytest.raises(ValueError):
        build_basis(g, np.zeros(50), 51)
    with pytest.raises(ValueError):
        build_basis(g, np.full(50, np.nan), 3)


def test_full_spectrum_path():
    g = Grid(0.0, 1.0, 20)
    b = build_basis(g, np.zeros(20), 20)
    assert b.k_modes == 20


def test_to_grid_reproduces_basis(bump_basis):
    np.testing.assert_allclose(to_grid(basis_state(1, 12), bump_basis),
                               bump_basis.eigenvectors[:, 0])


def test_round_trip_and_parseval(bump_basis):
    rng = np.random.default_rng(1)
    c = random_state(12, rng)
    f = to_grid(c, bump_basis)
    np.testing.assert_allclose(from_grid(f, bump_basis), c, atol=1e-12)
    assert abs(np.sqrt(bump_basis.h * np.vdot(f, f).real) - 1) <= 1e-10


def test_from_grid_of_mode(bump_basis):
    np.testing.assert_allclose(from_grid(bump_basis.eigenvectors[:, 1], bump_basis),
                               basis_state(2, 12).real, atol=1e-12)


def test_from_grid_drops_higher_mode():
    g = Grid(0.0, 1.0, 1000)
    big = build_basis(g, bump(g.x), 13)
    small = build_basis(g, bump(g.x), 12)
    np.testing.assert_allclose(from_grid(big.eigenvectors[:, 12], small), 0, atol=1e-10)


def test_from_grid_linear(bump_basis):
    rng = np.random.default_rng(2)
    f = rng.standard_normal(1000) + 1j * rng.standard_normal(1000)
    g = rng.standard_normal(1000)
    a, b = 0.3 - 1.2j, 2.5
    lhs = from_grid(a * f + b * g, bump_basis)
    rhs = a * from_grid(f, bump_basis) + b * from_grid(g, bump_basis)
    np.testing.assert_allclose(lhs, rhs, atol=1e-13)


def test_dimension_mismatch(bump_basis):
    with pytest.raises(ValueError):
        to_grid(np.ones(11), bump_basis)
    with pytest.raises(ValueError):
        from_grid(np.ones(999), bump_basis)


def test_sobolev_single_mode(bump_basis, free_pi):
    lam1 = bump_basis.eigenvalues[0]
    _, _, h2 = sobolev_norms(basis_state(1, 12), bump_basis)
    assert h2 == pytest.approx(np.sqrt(1 + lam1 ** 2))
    _, _, h2_free = sobolev_norms(basis_state(1, 10), free_pi)
    assert h2_free == pytest.approx(np.sqrt(2), rel=1e-4)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_sobolev_ordering(seed):
    g = Grid(0.0, 1.0, 200)
    b = build_basis(g, np.zeros(200), 8)
    l2, h1, h2 = sobolev_norms(random_state(8, np.random.default_rng(seed)), b)
    assert l2 == pytest.approx(1.0)
    assert h2 >= h1 >= l2


def test_basis_csv(tmp_path, bump_basis):
    path = tmp_path / "basis.csv"
    bump_basis.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "k,lambda_k"
    k, lam = lines[1].split(",")
    assert int(k) == 1 and float(lam) == bump_basis.eigenvalues[0]
    assert len(lines) == 13
