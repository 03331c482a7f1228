"""Norm-preserving Strang splitting for ``i z' = A z + u Q z``.

One step of length ``dt`` with the control frozen at ``u``::

    c <- exp(-i Lambda dt/2) c
    c <- exp(-i u dt Q) c          (via the eigendecomposition of Q)
    c <- exp(-i Lambda dt/2) c

Every factor is unitary, so the coefficient norm is conserved to roundoff.

Closed-loop control evaluation (``u_eval``):

``start_of_step``
    ``u = u(z_n)``.  First order.
``half_step``
    ``u`` evaluated once after the first ``A`` half-step.  First order.
``half_step_midpoint`` (default)
    predictor ``u0 = u(c')`` after the ``A`` half-step, then a corrector
    ``u = u(exp(-i u0 dt/2 Q) c')`` at the midpoint of the control substep.
    Explicit and second order; the discrete Lyapunov decrease matches
    ``-(2/delta) u^2 dt`` to ``O(dt^3)`` per step.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .feedback_law import FeedbackParams, NormError, _dissipation_bracket, alpha_star
from .operators import ControlOperator
from .spectral import SpectralBasis

__all__ = [
    "IntegratorConfig",
    "IntegrationError",
    "TrajectoryRecord",
    "U_EVAL_MODES",
    "step",
    "evolve_closed_loop",
    "evolve_open_loop",
    "CSV_COLUMNS",
]

U_EVAL_MODES = ("start_of_step", "half_step", "half_step_midpoint")
CSV_COLUMNS = ("t", "u", "lyapunov", "norm", "overlap", "h1_dist", "h2_proxy", "cum_u2")
MONOTONICITY_TOL = 1e-8


class IntegrationError(RuntimeError):
    """Lyapunov increase beyond tolerance, or a non-finite control."""


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float
    t_final: float
    record_stride: int = 1
    u_eval: str = "half_step_midpoint"
    abort_tol: float = 1e-6

    def __post_init__(self):
        if not self.dt > 0 or not self.t_final > 0:
            raise ValueError("dt and t_final must be positive")
        if self.dt > self.t_final * (1 + 1e-12):
            raise ValueError(f"dt={self.dt} exceeds t_final={self.t_final}")
        if self.record_stride < 1:
            raise ValueError("record_stride must be a positive integer")
        if self.u_eval not in U_EVAL_MODES:
            raise ValueError(f"u_eval must be one of {U_EVAL_MODES}, got {self.u_eval!r}")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_final / self.dt)))


@dataclass(eq=False)
class TrajectoryRecord:
    """Recorded rows plus per-step diagnostics of one trajectory.

    Row ``n`` holds the state at ``t_n``; its ``u`` is the control applied on
    ``[t_n, t_n + dt)`` (for the final row, the control the rule would apply
    next).  ``cum_u2`` is ``sum_{j<n} u_j^2 dt``.
    """

    t: np.ndarray
    u: np.ndarray
    lyapunov: np.ndarray
    norm: np.ndarray
    overlap: np.ndarray
    h1_dist: np.ndarray
    h2_proxy: np.ndarray
    cum_u2: np.ndarray
    u_steps: np.ndarray
    lyapunov_steps: np.ndarray
    final_state: np.ndarray
    dt: float
    k_modes: int
    m_points: int
    params: FeedbackParams | None = None
    max_norm_drift: float = 0.0
    monotonicity_violations: int = 0
    max_lyapunov_increase: float = 0.0
    dissipation_residual: float = math.nan
    extra: dict = field(default_factory=dict)

    @property
    def t_final(self) -> float:
        return float(self.t[-1])

    @property
    def final_overlap(self) -> float:
        return float(self.overlap[-1])

    @property
    def final_lyapunov(self) -> float:
        return float(self.lyapunov[-1])

    def first_time_overlap(self, level: float) -> float:
        """Earliest recorded time with overlap >= level (``inf`` if never)."""
        hit = np.flatnonzero(self.overlap >= level)
        return float(self.t[hit[0]]) if hit.size else math.inf

    def rows(self):
        cols = [getattr(self, name) for name in CSV_COLUMNS]
        return zip(*cols)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for row in self.rows():
                writer.writerow([f"{v:.17g}" for v in row])

    def summary(self) -> dict:
        out = {
            "t_final": self.t_final,
            "dt": self.dt,
            "alpha": self.params.alpha if self.params else None,
            "delta": self.params.delta if self.params else None,
            "K": self.k_modes,
            "m_points": self.m_points,
            "final_overlap": self.final_overlap,
            "final_lyapunov": self.final_lyapunov,
            "max_norm_drift": self.max_norm_drift,
            "monotonicity_violations": self.monotonicity_violations,
        }
        out.update(self.extra)
        return out


def _half_phase(basis: SpectralBasis, dt: float) -> np.ndarray:
    return np.exp(-0.5j * dt * basis.eigenvalues)


def step(coeffs, u_value: float, dt: float, basis: SpectralBasis,
         control: ControlOperator) -> np.ndarray:
    """Advance one Strang step with the control frozen at ``u_value``."""
    if not math.isfinite(u_value):
        raise IntegrationError(f"non-finite control value {u_value}")
    half = _half_phase(basis, dt)
    c = half * np.asarray(coeffs, dtype=complex)
    c = control.exp_apply(c, u_value * dt)
    return half * c


def _resolution_check(basis, dt):
    lam_max = float(np.abs(basis.eigenvalues).max())
    if dt * lam_max > math.pi:
        warnings.warn(
            f"dt*max|lambda| = {dt * lam_max:.3g} > pi; top modes are under-resolved in time",
            RuntimeWarning, stacklevel=3)


class _Recorder:
    def __init__(self, basis, params, n_steps, stride):
        self.basis = basis
        self.params = params
        self.stride = stride
        n_rows = n_steps // stride + 1 + (1 if n_steps % stride else 0)
        self.buf = {name: np.empty(n_rows) for name in CSV_COLUMNS}
        self.row = 0
        lam = basis.eigenvalues
        self.w1 = 1.0 + np.abs(lam)
        self.w2 = 1.0 + lam ** 2

    def add(self, t, u, lyap, c, norm, cum_u2):
        p = np.abs(c) ** 2
        c1 = c[0]
        theta_phase = c1 / abs(c1) if c1 != 0 else 1.0
        diff_p = p.copy()
        diff_p[0] = abs(c1 - theta_phase) ** 2
        b, r = self.buf, self.row
        b["t"][r] = t
        b["u"][r] = u
        b["lyapunov"][r] = lyap
        b["norm"][r] = norm
        b["overlap"][r] = p[0]
        b["h1_dist"][r] = math.sqrt(float(np.dot(self.w1, diff_p)))
        b["h2_proxy"][r] = math.sqrt(float(np.dot(self.w2, p)))
        b["cum_u2"][r] = cum_u2
        self.row += 1


def _lyap(p, lam2, alpha):
    return alpha * float(np.dot(lam2[1:], p[1:])) + 1.0 - float(p[0])


def _evolve(state0, config, basis, control, params, control_rule, closed):
    c = np.array(state0, dtype=complex)
    if c.shape != (basis.k_modes,):
        raise ValueError(f"state has shape {c.shape}, expected ({basis.k_modes},)")
    drift0 = abs(np.linalg.norm(c) - 1.0)
    if drift0 > 1e-9:
        raise NormError(f"initial state norm deviates from 1 by {drift0:.3e}")
    _resolution_check(basis, config.dt)

    dt = config.dt
    n = config.n_steps
    stride = config.record_stride
    half = _half_phase(basis, dt)
    lam2 = basis.eigenvalues ** 2
    # without params (open loop) the Lyapunov column is undefined
    alpha = params.alpha if params is not None else math.nan

    rec = _Recorder(basis, params, n, stride)
    u_steps = np.empty(n)
    lyap_steps = np.empty(n + 1)
    lyap = _lyap(np.abs(c) ** 2, lam2, alpha)
    lyap_steps[0] = lyap
    max_drift = drift0
    violations = 0
    max_incr = -math.inf
    residual = 0.0
    cum = 0.0
    pending_row = True

    for k in range(n):
        c_half = half * c
        u = control_rule(k, c, c_half)
        if not math.isfinite(u):
            raise IntegrationError(f"non-finite control at step {k}")
        u_steps[k] = u
        if pending_row:
            rec.add(k * dt, u, lyap, c, float(np.linalg.norm(c)), cum)
            pending_row = False
        c = half * control.exp_apply(c_half, u * dt)
        cum += u * u * dt

        p = c.real ** 2 + c.imag ** 2
        new = _lyap(p, lam2, alpha)
        incr = new - lyap
        if closed:
            if incr > config.abort_tol * dt:
                raise IntegrationError(
                    f"Lyapunov increased by {incr:.3e} at step {k} (t={(k + 1) * dt:.6g}); "
                    f"threshold {config.abort_tol * dt:.3e}")
            if incr > MONOTONICITY_TOL * dt:
                violations += 1
            residual = max(residual, abs(incr / dt + 2.0 / params.delta * u * u))
        max_incr = max(max_incr, incr)
        lyap = new
        lyap_steps[k + 1] = lyap
        max_drift = max(max_drift, abs(math.sqrt(float(p.sum())) - 1.0))
        if (k + 1) % stride == 0:
            pending_row = True

    u_next = control_rule(n, c, half * c)
    rec.add(n * dt, u_next, lyap, c, float(np.linalg.norm(c)), cum)
    rows = {name: arr[:rec.row].copy() for name, arr in rec.buf.items()}
    return TrajectoryRecord(
        **rows,
        u_steps=u_steps,
        lyapunov_steps=lyap_steps,
        final_state=c,
        dt=dt,
        k_modes=basis.k_modes,
        m_points=basis.grid.m_points,
        params=params,
        max_norm_drift=max_drift,
        monotonicity_violations=violations,
        max_lyapunov_increase=max_incr,
        dissipation_residual=residual if closed else math.nan,
    )


def _closed_loop_rule(basis, control, params, config):
    lam2 = basis.eigenvalues ** 2
    qm = control.q_matrix
    alpha, delta, dt = params.alpha, params.delta, config.dt
    mode = config.u_eval

    def u_of(c):
        return -delta * float(_dissipation_bracket(c, lam2, qm, alpha))

    if mode == "start_of_step":
        return lambda k, c, c_half: u_of(c)
    if mode == "half_step":
        return lambda k, c, c_half: u_of(c_half)

    def midpoint(k, c, c_half):
        u0 = u_of(c_half)
        return u_of(control.exp_apply(c_half, 0.5 * u0 * dt))

    return midpoint


def evolve_closed_loop(state0, params: FeedbackParams, config: IntegratorConfig,
                       basis: SpectralBasis, control: ControlOperator) -> TrajectoryRecord:
    """Integrate the closed loop ``i z' = A z + u(z) Q z``.

    Raises
    ------
    IntegrationError
        If the Lyapunov function increases by more than ``abort_tol * dt``
        in a single step.
    """
    rule = _closed_loop_rule(basis, control, params, config)
    rec = _evolve(state0, config, basis, control, params, rule, closed=True)
    try:
        rec.extra["alpha_star"] = alpha_star(state0, basis)
    except ValueError:
        rec.extra["alpha_star"] = None
    return rec


def evolve_open_loop(state0, u_samples, config: IntegratorConfig, basis: SpectralBasis,
                     control: ControlOperator,
                     params: FeedbackParams | None = None) -> TrajectoryRecord:
    """Integrate with a prescribed piecewise-constant control.

    ``u_samples[n]`` is applied on ``[n dt, (n+1) dt)``.  When ``params`` is
    given, Lyapunov values are reported with its ``alpha`` (otherwise NaN); no
    abort check is made since an arbitrary control need not dissipate.
    """
    u_samples = np.asarray(u_samples, dtype=float)
    n = config.n_steps
    if u_samples.ndim != 1 or u_samples.size < n:
        raise ValueError(f"u_samples must have at least {n} entries, got {u_samples.size}")
    if not np.all(np.isfinite(u_samples[:n])):
        raise IntegrationError("u_samples contains non-finite values")
    last = u_samples[n] if u_samples.size > n else u_samples[n - 1]

    def rule(k, c, c_half):
        return float(u_samples[k]) if k < n else float(last)

    return _evolve(state0, config, basis, control, params, rule, closed=False)
