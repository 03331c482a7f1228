"""Control operator matrix elements, ``A`` and the ground-state projector."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import SpectralBasis

__all__ = [
    "ControlOperator",
    "QGradients",
    "assemble_control",
    "q_gradients",
    "extend_to_boundary",
    "apply_A",
    "project_p1",
    "truncation_sensitivity",
]


@dataclass(frozen=True, eq=False)
class ControlOperator:
    """``Q`` on the grid and its Galerkin matrix ``Q_jk = <Q e_j, e_k>``.

    ``q_vecs`` and ``q_vals`` diagonalize ``q_matrix`` once so that
    ``exp(-i s Q)`` can be applied as ``W diag(exp(-i s mu)) W^T``.
    """

    grid_values: np.ndarray
    q_matrix: np.ndarray
    q_vals: np.ndarray
    q_vecs: np.ndarray

    @property
    def k_modes(self) -> int:
        return self.q_matrix.shape[0]

    def exp_apply(self, coeffs: np.ndarray, s: float) -> np.ndarray:
        """Return ``exp(-i s Q) c``.

        Written as ``c + W (exp(-i s mu) - 1) W^T c`` so that the rounding in
        ``W W^T != I`` only enters through a term of size ``|s mu|``; otherwise
        it accumulates into a systematic norm drift over long runs.
        """
        theta = s * self.q_vals
        # exp(-i theta) - 1 without cancellation
        phase_m1 = -2.0 * np.sin(0.5 * theta) ** 2 - 1j * np.sin(theta)
        w = self.q_vecs
        return coeffs + w @ (phase_m1 * (w.T @ coeffs))


@dataclass(frozen=True, eq=False)
class QGradients:
    """Finite differences of ``Q`` on the closed grid.

    ``edge`` has the ``m_points + 1`` forward differences ``(Q_{i+1} - Q_i)/h``
    for ``i = 0..m_points``; ``laplacian`` is the three-point second difference
    at the interior nodes.
    """

    edge: np.ndarray
    laplacian: np.ndarray


def assemble_control(q_values, basis: SpectralBasis) -> ControlOperator:
    q = np.asarray(q_values, dtype=float)
    if q.shape != (basis.grid.m_points,):
        raise ValueError(
            f"control has shape {q.shape}, expected ({basis.grid.m_points},)")
    e = basis.eigenvectors
    m = basis.h * (e.T @ (q[:, None] * e))
    m = 0.5 * (m + m.T)
    vals, vecs = np.linalg.eigh(m)
    for arr in (q, m, vals, vecs):
        arr.setflags(write=False)
    return ControlOperator(q, m, vals, vecs)


def q_gradients(q_closed, h: float) -> QGradients:
    """Differences of ``Q`` sampled on all ``m_points + 2`` nodes.

    Boundary values of ``Q`` cancel out of every product against a Dirichlet
    state, so any reasonable extension works for node-sampled input.
    """
    q = np.asarray(q_closed, dtype=float)
    edge = np.diff(q) / h
    lap = np.diff(edge) / h
    return QGradients(edge, lap)


def extend_to_boundary(q_interior) -> np.ndarray:
    """Linear extrapolation of interior samples to the two boundary nodes."""
    q = np.asarray(q_interior, dtype=float)
    if q.size == 1:
        return np.array([q[0], q[0], q[0]])
    return np.concatenate(([2 * q[0] - q[1]], q, [2 * q[-1] - q[-2]]))


def apply_A(coeffs, basis: SpectralBasis) -> np.ndarray:
    return basis.eigenvalues * np.asarray(coeffs)


def project_p1(coeffs) -> np.ndarray:
    out = np.array(coeffs, copy=True)
    out[0] = 0
    return out


def truncation_sensitivity(basis_small: SpectralBasis, control_small: ControlOperator,
                           control_large: ControlOperator) -> float:
    """Max change of ``Q_jk`` for ``j, k <= K/2`` between two truncations."""
    n = max(1, basis_small.k_modes // 2)
    return float(np.abs(control_small.q_matrix[:n, :n]
                        - control_large.q_matrix[:n, :n]).max())
