"""Lyapunov function, feedback law and target-set helpers.

All quantities use the inner product ``<f, g> = sum f * conj(g)`` on
eigenbasis coefficients (equivalently ``h * sum`` on the grid).  The
Lyapunov function is

    V(z) = alpha * ||A P1 z||^2 + 1 - |<z, e1>|^2

and the feedback

    u(z) = -delta * Im[ alpha <A P1(Qz), A P1 z> - <Qz, e1><e1, z> ]

which makes ``dV/dt = -(2/delta) u^2`` along the closed loop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import ControlOperator, QGradients
from .spectral import SpectralBasis, to_grid

__all__ = [
    "FeedbackParams",
    "NormError",
    "lyapunov",
    "feedback",
    "feedback_tilde",
    "distance_to_target",
    "alpha_star",
    "closed_loop_field",
]

NORM_TOL = 1e-9


class NormError(ValueError):
    """State is not on the unit L2 sphere."""


@dataclass(frozen=True)
class FeedbackParams:
    alpha: float
    delta: float

    def __post_init__(self):
        if not (self.alpha > 0 and np.isfinite(self.alpha)):
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not (self.delta > 0 and np.isfinite(self.delta)):
            raise ValueError(f"delta must be positive, got {self.delta}")


def _check_norm(c):
    drift = abs(np.linalg.norm(c) - 1.0)
    if drift > NORM_TOL:
        raise NormError(f"state norm deviates from 1 by {drift:.3e}")


def lyapunov(coeffs, basis: SpectralBasis, params: FeedbackParams,
             check: bool = True) -> float:
    c = np.asarray(coeffs)
    if check:
        _check_norm(c)
    lam = basis.eigenvalues
    p = np.abs(c) ** 2
    return float(params.alpha * np.dot(lam[1:] ** 2, p[1:]) + 1.0 - p[0])


def _dissipation_bracket(c, lam2, q_matrix, alpha):
    # Im[alpha <A P1 Qz, A P1 z> - <Qz, e1><e1, z>]
    d = q_matrix @ c
    s = alpha * np.dot(lam2[1:] * d[1:], c[1:].conj()) - d[0] * np.conj(c[0])
    return s.imag


def feedback(coeffs, basis: SpectralBasis, control: ControlOperator,
             params: FeedbackParams, check: bool = True) -> float:
    c = np.asarray(coeffs)
    if check:
        _check_norm(c)
    lam2 = basis.eigenvalues ** 2
    return float(-params.delta * _dissipation_bracket(c, lam2, control.q_matrix, params.alpha))


def _commutator_grid(z, grads: QGradients, h: float, weight: float = 2.0):
    """``-weight * grad Q . grad z - z lap Q`` at interior nodes.

    With ``weight = 2`` this is exactly ``[T, Q] z`` for the three-point
    operator ``T``; the gradient product is averaged over the two adjacent
    edges.
    """
    zc = np.concatenate(([0.0], z, [0.0]))
    dz = np.diff(zc) / h
    flux = grads.edge * dz
    grad_dot = 0.5 * (flux[1:] + flux[:-1])
    return -weight * grad_dot - z * grads.laplacian


def feedback_tilde(coeffs, basis: SpectralBasis, control: ControlOperator,
                   params: FeedbackParams, grads: QGradients,
                   check: bool = True) -> float:
    """Feedback recomputed after commuting ``Q`` through ``A``.

    The real term ``alpha <Q A z, A z>`` is dropped and the commutator
    ``[A, Q] z`` is evaluated on the grid from finite differences of ``Q``.
    Only used to cross-check :func:`feedback`.
    """
    c = np.asarray(coeffs, dtype=complex)
    if check:
        _check_norm(c)
    lam = basis.eigenvalues
    alpha, h = params.alpha, basis.h
    d = control.q_matrix @ c
    a_c = lam * c

    a_p1_qz = lam * d
    a_p1_qz[0] = 0.0
    a_ground = np.zeros_like(c)
    a_ground[0] = -c[0] * lam[0]
    t1 = alpha * np.vdot(a_ground, a_p1_qz)

    t2 = alpha * (-d[0] * lam[0]) * np.conj(a_c[0])

    z = to_grid(c, basis)
    az = to_grid(a_c, basis)
    comm = _commutator_grid(z, grads, h)
    t3 = alpha * h * np.vdot(az, comm)

    t4 = -d[0] * np.conj(c[0])
    return float(-params.delta * (t1 + t2 + t3 + t4).imag)


def closed_loop_field(coeffs, basis: SpectralBasis, control: ControlOperator,
                      params: FeedbackParams) -> np.ndarray:
    """``F(z) = -i (A z + u(z) Q z)`` in coefficients."""
    c = np.asarray(coeffs)
    u = feedback(c, basis, control, params, check=False)
    return -1j * (basis.eigenvalues * c + u * (control.q_matrix @ c))


def distance_to_target(coeffs, basis: SpectralBasis):
    """Phase-aligned distances to the circle ``{exp(i theta) e1}``.

    Returns ``(l2_dist, h1_dist, overlap)``.  When ``c1 == 0`` the phase is
    undefined and taken as 0.
    """
    c = np.asarray(coeffs)
    _check_norm(c)
    c1 = c[0]
    overlap = float(abs(c1) ** 2)
    l2 = float(np.sqrt(max(2.0 - 2.0 * abs(c1), 0.0)))
    theta = float(np.angle(c1)) if c1 != 0 else 0.0
    diff = np.array(c, dtype=complex)
    diff[0] -= np.exp(1j * theta)
    w = 1.0 + np.abs(basis.eigenvalues)
    h1 = float(np.sqrt(np.dot(w, np.abs(diff) ** 2)))
    return l2, h1, overlap


def alpha_star(coeffs, basis: SpectralBasis) -> float:
    """Supremum of ``alpha`` for which ``V(z0) < 1``.

    ``V(z0) < 1`` iff ``alpha * sum_{k>=2} lam_k^2 |c_k|^2 < |c_1|^2``.
    """
    c = np.asarray(coeffs)
    _check_norm(c)
    p = np.abs(c) ** 2
    if p[0] == 0.0:
        raise ValueError("alpha_star undefined: state has no ground-state component")
    denom = float(np.dot(basis.eigenvalues[1:] ** 2, p[1:]))
    if denom <= 0.0:
        raise ValueError("alpha_star undefined: state already lies on the target circle")
    return float(p[0] / denom)
