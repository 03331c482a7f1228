"""Finite-difference spectral frame for ``A = -d^2/dx^2 + V`` on an interval.

The interval ``(a, b)`` carries ``m_points`` interior nodes with homogeneous
Dirichlet data at both ends.  ``A`` is discretized by the three-point stencil,
giving a symmetric tridiagonal matrix whose lowest ``k_modes`` eigenpairs form
the truncated basis used everywhere else in the package.

States are plain complex numpy vectors of eigenbasis coefficients
``c_k = <z, e_k>`` with ``<f, g> = h * sum(f * conj(g))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

__all__ = [
    "Grid",
    "SpectralBasis",
    "SpectralError",
    "build_basis",
    "to_grid",
    "from_grid",
    "sobolev_norms",
    "basis_state",
    "random_state",
]

ORTHONORMALITY_TOL = 1e-10
GROUND_GAP_TOL = 1e-12


class SpectralError(RuntimeError):
    """Eigensolver failure or a degenerate ground state."""


@dataclass(frozen=True)
class Grid:
    """Uniform grid of interior nodes ``x_i = a + i*h``, ``i = 1..m_points``."""

    a: float
    b: float
    m_points: int

    def __post_init__(self):
        if not self.b > self.a:
            raise ValueError(f"need b > a, got a={self.a}, b={self.b}")
        if self.m_points < 1:
            raise ValueError(f"m_points must be positive, got {self.m_points}")

    @property
    def h(self) -> float:
        return (self.b - self.a) / (self.m_points + 1)

    @property
    def x(self) -> np.ndarray:
        """Interior nodes."""
        return self.a + self.h * np.arange(1, self.m_points + 1)

    @property
    def x_closed(self) -> np.ndarray:
        """Interior nodes plus the two boundary nodes."""
        return self.a + self.h * np.arange(0, self.m_points + 2)


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """Lowest ``k_modes`` eigenpairs of the discrete operator.

    ``eigenvectors[:, k]`` holds mode ``k+1`` at the interior nodes, normalized
    so that ``h * e_j @ e_k = delta_jk``.
    """

    grid: Grid
    potential: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    orthonormality_residual: float = field(default=0.0)

    @property
    def k_modes(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def h(self) -> float:
        return self.grid.h

    def apply_operator_grid(self, values: np.ndarray) -> np.ndarray:
        """Apply the full discrete tridiagonal operator to node values."""
        h2 = self.h ** 2
        out = (2.0 / h2 + self.potential) * values
        out[1:] -= values[:-1] / h2
        out[:-1] -= values[1:] / h2
        return out

    def to_csv(self, path) -> None:
        rows = ["k,lambda_k"]
        rows += [f"{k + 1},{lam:.17g}" for k, lam in enumerate(self.eigenvalues)]
        with open(path, "w", newline="") as fh:
            fh.write("\n".join(rows) + "\n")


def build_basis(grid: Grid, potential, k_modes: int) -> SpectralBasis:
    """Compute the lowest ``k_modes`` eigenpairs of ``-D2 + V`` on ``grid``.

    Parameters
    ----------
    grid : Grid
    potential : array_like
        ``V`` sampled at the interior nodes (length ``grid.m_points``).
    k_modes : int
        Number of retained modes, ``1 <= k_modes <= m_points``.

    Returns
    -------
    SpectralBasis

    Raises
    ------
    SpectralError
        If LAPACK fails or the two lowest eigenvalues coincide.
    """
    v = np.asarray(potential, dtype=float)
    if v.shape != (grid.m_points,):
        raise ValueError(
            f"potential has shape {v.shape}, expected ({grid.m_points},)")
    if not np.all(np.isfinite(v)):
        raise ValueError("potential contains non-finite values")
    if not 1 <= k_modes <= grid.m_points:
        raise ValueError(
            f"k_modes must lie in [1, {grid.m_points}], got {k_modes}")

    h2 = grid.h ** 2
    diag = 2.0 / h2 + v
    off = np.full(grid.m_points - 1, -1.0 / h2)
    try:
        if k_modes == grid.m_points:
            lam, vec = eigh_tridiagonal(diag, off)
        else:
            lam, vec = eigh_tridiagonal(
                diag, off, select="i", select_range=(0, k_modes - 1))
    except np.linalg.LinAlgError as exc:
        raise SpectralError(f"tridiagonal eigensolver failed: {exc}") from exc

    order = np.argsort(lam, kind="stable")
    lam = lam[order]
    vec = vec[:, order] / np.sqrt(grid.h)

    # first nonzero component positive
    for k in range(vec.shape[1]):
        col = vec[:, k]
        nz = np.flatnonzero(np.abs(col) > 1e-14 * np.abs(col).max())
        if col[nz[0]] < 0:
            vec[:, k] = -col

    if k_modes > 1 and not lam[1] - lam[0] > GROUND_GAP_TOL * max(1.0, abs(lam[0])):
        raise SpectralError(
            f"ground state is degenerate: lambda_2 - lambda_1 = {lam[1] - lam[0]:.3e}")

    gram = grid.h * (vec.T @ vec)
    resid = float(np.abs(gram - np.eye(k_modes)).max())
    if resid > ORTHONORMALITY_TOL:
        raise SpectralError(f"eigenvectors not orthonormal (residual {resid:.3e})")

    vec.setflags(write=False)
    lam.setflags(write=False)
    v = v.copy()
    v.setflags(write=False)
    return SpectralBasis(grid, v, lam, vec, resid)


def to_grid(coeffs, basis: SpectralBasis) -> np.ndarray:
    """Evaluate ``sum_k c_k e_k`` at the interior nodes."""
    c = np.asarray(coeffs)
    if c.shape != (basis.k_modes,):
        raise ValueError(f"state has shape {c.shape}, expected ({basis.k_modes},)")
    return basis.eigenvectors @ c


def from_grid(values, basis: SpectralBasis) -> np.ndarray:
    """Project node values onto the truncated eigenbasis."""
    f = np.asarray(values)
    if f.shape != (basis.grid.m_points,):
        raise ValueError(
            f"grid values have shape {f.shape}, expected ({basis.grid.m_points},)")
    return basis.h * (basis.eigenvectors.T @ f)


def sobolev_norms(coeffs, basis: SpectralBasis) -> tuple[float, float, float]:
    """L2 norm and graph-norm proxies for H1 and H2.

    ``h1 = sqrt(sum (1+|lam_k|) |c_k|^2)`` and ``h2 = sqrt(sum (1+lam_k^2) |c_k|^2)``.
    These are equivalent to the Sobolev norms only for bounded ``V``.
    """
    p = np.abs(np.asarray(coeffs)) ** 2
    lam = basis.eigenvalues
    l2 = float(np.sqrt(p.sum()))
    h1 = float(np.sqrt(((1.0 + np.abs(lam)) * p).sum()))
    h2 = float(np.sqrt(((1.0 + lam ** 2) * p).sum()))
    return l2, h1, h2


def basis_state(k: int, k_modes: int, phase: float = 0.0) -> np.ndarray:
    """Coefficient vector of ``exp(i*phase) e_k`` (``k`` is 1-based)."""
    c = np.zeros(k_modes, dtype=complex)
    c[k - 1] = np.exp(1j * phase)
    return c


def random_state(k_modes: int, rng: np.random.Generator) -> np.ndarray:
    """Normalized complex Gaussian coefficient vector."""
    c = rng.standard_normal(k_modes) + 1j * rng.standard_normal(k_modes)
    return c / np.linalg.norm(c)
