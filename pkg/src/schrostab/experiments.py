"""Experiment specs, single runs and parameter sweeps.

A spec file is an INI document with the sections ``[grid]``, ``[potential]``,
``[control]``, ``[initial]``, ``[feedback]``, ``[integrator]``,
``[conditions]``, ``[sweep]`` and ``[output]``.  Internally a spec is a flat
mapping ``"section.key" -> value``; :data:`SPEC_KEYS` is the complete list of
recognized keys and their parsers.
"""

from __future__ import annotations

import configparser
import csv
import itertools
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .conditions import check_conditions
from .feedback_law import FeedbackParams, alpha_star
from .integrator import IntegratorConfig, TrajectoryRecord, evolve_closed_loop
from .operators import assemble_control
from .profiles import control_profile, load_samples, potential_profile
from .spectral import Grid, SpectralBasis, build_basis

__all__ = [
    "SpecError",
    "SPEC_KEYS",
    "ExperimentSpec",
    "Setup",
    "load_spec",
    "parse_spec_text",
    "apply_overrides",
    "prepare",
    "initial_state",
    "run",
    "sweep",
    "SWEEP_COLUMNS",
]

log = logging.getLogger(__name__)


class SpecError(ValueError):
    """Malformed spec file, unknown key or invalid value."""


def _floats(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).replace(",", " ").split()]


def _ints(text):
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    return [int(v) for v in str(text).replace(",", " ").split()]


def _complexes(text):
    if isinstance(text, (list, tuple)):
        return [complex(v) for v in text]
    return [complex(v.replace(" ", "")) for v in str(text).split(",") if v.strip()]


def _alpha(text):
    if isinstance(text, str) and text.strip().lower() == "auto":
        return "auto"
    return float(text)


def _opt_float(text):
    return None if text in (None, "") else float(text)


def _opt_str(text):
    return None if text in (None, "") else str(text)


# key -> (parser, default)
SPEC_KEYS = {
    "name": (str, "experiment"),
    "grid.a": (float, 0.0),
    "grid.b": (float, 1.0),
    "grid.m_points": (int, 2000),
    "grid.k_modes": (int, 32),
    "potential.kind": (str, "zero"),
    "potential.value": (_opt_float, None),
    "potential.amplitude": (_opt_float, None),
    "potential.center": (_opt_float, None),
    "potential.width": (_opt_float, None),
    "potential.frequency": (_opt_float, None),
    "potential.phase": (_opt_float, None),
    "potential.path": (_opt_str, None),
    "control.kind": (str, "x"),
    "control.amplitude": (_opt_float, None),
    "control.offset": (_opt_float, None),
    "control.value": (_opt_float, None),
    "control.frequency": (_opt_float, None),
    "control.phase": (_opt_float, None),
    "control.path": (_opt_str, None),
    "initial.kind": (str, "modes"),
    "initial.coefficients": (_complexes, [1.0, 1.0]),
    "initial.seed": (int, 0),
    "initial.path": (_opt_str, None),
    "feedback.alpha": (_alpha, "auto"),
    "feedback.alpha_fraction": (float, 0.5),
    "feedback.delta": (float, 1.0),
    "integrator.dt": (float, 1e-3),
    "integrator.t_final": (float, 10.0),
    "integrator.record_stride": (int, 10),
    "integrator.u_eval": (str, "half_step_midpoint"),
    "integrator.abort_tol": (float, 1e-6),
    "conditions.eps_coupling": (float, 1e-8),
    "conditions.eps_gap": (float, 1e-6),
    "sweep.alpha": (_floats, []),
    "sweep.alpha_fraction": (_floats, []),
    "sweep.delta": (_floats, []),
    "sweep.dt": (_floats, []),
    "sweep.k_modes": (_ints, []),
    "sweep.workers": (int, 1),
    "output.directory": (_opt_str, None),
}

_PROFILE_PARAMS = {
    "potential": ("value", "amplitude", "center", "width", "frequency", "phase"),
    "control": ("amplitude", "offset", "value", "frequency", "phase"),
}


def _parse_value(key, raw):
    parser, _ = SPEC_KEYS[key]
    try:
        return parser(raw)
    except (TypeError, ValueError) as exc:
        raise SpecError(f"bad value for {key}: {raw!r} ({exc})") from None


def parse_spec_text(text: str, base_dir=None) -> dict:
    """Parse INI text into a flat, fully defaulted spec mapping."""
    cp = configparser.ConfigParser(interpolation=None, default_section="__defaults__")
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise SpecError(f"cannot parse spec: {' '.join(str(exc).split())}") from None
    flat = {key: default for key, (_, default) in SPEC_KEYS.items()}
    for section in cp.sections():
        for key, raw in cp.items(section):
            full = key if section == "experiment" else f"{section}.{key}"
            if full not in SPEC_KEYS:
                raise SpecError(f"unknown spec key {full!r}")
            flat[full] = _parse_value(full, raw)
    if base_dir is not None:
        for key in ("potential.path", "control.path", "initial.path"):
            if flat[key] and not os.path.isabs(flat[key]):
                flat[key] = str(Path(base_dir) / flat[key])
    return flat


def load_spec(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SpecError(f"cannot read spec {path}: {exc.strerror}") from None
    return parse_spec_text(text, base_dir=Path(path).parent)


def apply_overrides(flat: dict, overrides) -> dict:
    """Apply ``key=value`` strings; unknown keys raise :class:`SpecError`."""
    out = dict(flat)
    for item in overrides:
        key, sep, raw = item.partition("=")
        key = key.strip()
        if not sep:
            raise SpecError(f"override {item!r} is not of the form key=value")
        if key not in SPEC_KEYS:
            raise SpecError(f"unknown spec key {key!r}")
        out[key] = _parse_value(key, raw.strip())
    return out


def format_spec(flat: dict) -> str:
    """Serialize a flat spec back to INI text (round-trips through the parser)."""
    sections = {}
    for key, value in flat.items():
        section, _, name = key.rpartition(".")
        section = section or "experiment"
        if value is None or (isinstance(value, list) and not value):
            continue
        if isinstance(value, list):
            value = ", ".join(repr(v) if isinstance(v, float) else str(v) for v in value)
        elif isinstance(value, float):
            value = repr(value)
        sections.setdefault(section, []).append(f"{name} = {value}")
    return "\n".join(f"[{s}]\n" + "\n".join(lines) + "\n" for s, lines in sections.items())


@dataclass(frozen=True, eq=False)
class Setup:
    """Everything built from a spec before integration."""

    spec: dict
    basis: SpectralBasis
    control: object
    state0: np.ndarray
    params: FeedbackParams
    config: IntegratorConfig
    alpha_star: float | None


ExperimentSpec = dict  # flat mapping, see SPEC_KEYS


def _profile_values(flat, section, grid):
    kind = flat[f"{section}.kind"]
    x = grid.x
    if kind == "file":
        if not flat[f"{section}.path"]:
            raise SpecError(f"{section}.kind = file needs {section}.path")
        try:
            return load_samples(flat[f"{section}.path"], grid.m_points)
        except (OSError, ValueError) as exc:
            raise SpecError(str(exc)) from None
    params = {k: flat[f"{section}.{k}"] for k in _PROFILE_PARAMS[section]
              if flat[f"{section}.{k}"] is not None}
    maker = potential_profile if section == "potential" else control_profile
    try:
        return maker(kind, **params)(x)
    except ValueError as exc:
        raise SpecError(f"{section}: {exc}") from None


def _read_state_file(path):
    try:
        data = np.loadtxt(path, dtype=float, ndmin=2)
    except (OSError, ValueError) as exc:
        raise SpecError(f"cannot read initial state {path}: {exc}") from None
    return data[:, 0] + (1j * data[:, 1] if data.shape[1] > 1 else 0)


def initial_state(flat: dict, basis: SpectralBasis, alpha: float | None = None) -> np.ndarray:
    """Build the normalized initial coefficient vector.

    ``random`` draws complex Gaussian coefficients from ``initial.seed``.
    When a fixed ``alpha`` is given, the excited weight is capped so that
    ``V(z0) <= 0.5``.
    """
    K = basis.k_modes
    kind = flat["initial.kind"]
    if kind == "modes":
        raw = np.asarray(flat["initial.coefficients"], dtype=complex)
    elif kind == "file":
        raw = _read_state_file(flat["initial.path"])
    elif kind == "random":
        rng = np.random.default_rng(flat["initial.seed"])
        raw = rng.standard_normal(K) + 1j * rng.standard_normal(K)
    else:
        raise SpecError(f"unknown initial.kind {kind!r}")
    if raw.size > K:
        raise SpecError(f"initial state has {raw.size} coefficients but k_modes = {K}")
    c = np.zeros(K, dtype=complex)
    c[:raw.size] = raw
    nrm = np.linalg.norm(c)
    if nrm == 0:
        raise SpecError("initial state is zero")
    c /= nrm
    if kind == "random" and alpha is not None:
        excited = np.linalg.norm(c[1:])
        s = float(np.dot(basis.eigenvalues[1:] ** 2, np.abs(c[1:] / excited) ** 2))
        b2 = min(excited ** 2, 0.5 / (1.0 + alpha * s))
        phase = c[0] / abs(c[0])
        c = np.concatenate(([phase * math.sqrt(1.0 - b2)], c[1:] / excited * math.sqrt(b2)))
    return c


def prepare(flat: dict) -> Setup:
    try:
        grid = Grid(flat["grid.a"], flat["grid.b"], flat["grid.m_points"])
    except ValueError as exc:
        raise SpecError(str(exc)) from None
    K = flat["grid.k_modes"]
    if not 1 <= K <= grid.m_points:
        raise SpecError(f"grid.k_modes must lie in [1, m_points], got {K}")
    if K > grid.m_points / 50:
        log.warning("k_modes=%d exceeds m_points/50; top modes are poorly resolved", K)
    v = _profile_values(flat, "potential", grid)
    basis = build_basis(grid, v, K)
    q = _profile_values(flat, "control", grid)
    control = assemble_control(q, basis)

    alpha_cfg = flat["feedback.alpha"]
    fixed_alpha = None if alpha_cfg == "auto" else alpha_cfg
    state0 = initial_state(flat, basis, fixed_alpha)
    try:
        a_star = alpha_star(state0, basis)
    except ValueError:
        a_star = None
    if alpha_cfg == "auto":
        if a_star is None:
            raise SpecError("feedback.alpha = auto needs an initial state off the target "
                            "circle with a ground-state component")
        alpha = flat["feedback.alpha_fraction"] * a_star
    else:
        alpha = alpha_cfg
    try:
        params = FeedbackParams(alpha, flat["feedback.delta"])
        config = IntegratorConfig(
            dt=flat["integrator.dt"],
            t_final=flat["integrator.t_final"],
            record_stride=flat["integrator.record_stride"],
            u_eval=flat["integrator.u_eval"],
            abort_tol=flat["integrator.abort_tol"],
        )
    except ValueError as exc:
        raise SpecError(str(exc)) from None
    return Setup(flat, basis, control, state0, params, config, a_star)


def _summary(setup: Setup, report, rec: TrajectoryRecord) -> dict:
    out = rec.summary()
    out.update({
        "name": setup.spec["name"],
        "verdict": "generic" if report.passed else "non-generic",
        "alpha_star": setup.alpha_star,
        "initial_lyapunov": float(rec.lyapunov[0]),
        "cum_u2": float(rec.cum_u2[-1]),
        "dissipation_residual": rec.dissipation_residual,
        "max_lyapunov_increase": rec.max_lyapunov_increase,
        "u_eval": setup.config.u_eval,
        "conditions": report.to_dict(),
    })
    return out


def run(flat: dict, write: bool = True):
    """Run one experiment.

    Returns ``(summary, record)``.  If ``output.directory`` is set (and
    ``write``), ``trajectory.csv``, ``summary.json``, ``conditions.json``,
    ``basis.csv`` and the resolved ``spec.ini`` are written there.
    """
    setup = prepare(flat)
    report = check_conditions(setup.basis, setup.control,
                              flat["conditions.eps_coupling"], flat["conditions.eps_gap"])
    if not report.passed:
        log.info("conditions not met (%d coupling, %d resonance violations)",
                 len(report.coupling_violations), len(report.resonance_violations))
    rec = evolve_closed_loop(setup.state0, setup.params, setup.config, setup.basis, setup.control)
    summary = _summary(setup, report, rec)
    out_dir = flat["output.directory"]
    if write and out_dir:
        path = Path(out_dir)
        path.mkdir(parents=True, exist_ok=True)
        rec.write_csv(path / "trajectory.csv")
        setup.basis.to_csv(path / "basis.csv")
        (path / "conditions.json").write_text(report.to_json() + "\n")
        (path / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
        (path / "spec.ini").write_text(format_spec(flat))
    return summary, rec


SWEEP_COLUMNS = ("alpha", "delta", "dt", "K", "verdict", "final_overlap", "final_lyapunov",
                 "max_norm_drift", "cum_u2", "wall_time_s", "error")
SWEEP_NORM_TOL = 1e-9

_AXES = (
    ("sweep.alpha", "feedback.alpha"),
    ("sweep.alpha_fraction", "feedback.alpha_fraction"),
    ("sweep.delta", "feedback.delta"),
    ("sweep.dt", "integrator.dt"),
    ("sweep.k_modes", "grid.k_modes"),
)


def sweep_points(flat: dict) -> list[dict]:
    axes = [(target, flat[key]) for key, target in _AXES if flat[key]]
    if not axes:
        raise SpecError("sweep needs at least one non-empty axis")
    if flat["sweep.alpha"] and flat["sweep.alpha_fraction"]:
        raise SpecError("sweep.alpha and sweep.alpha_fraction are mutually exclusive")
    points = []
    for combo in itertools.product(*(values for _, values in axes)):
        point = dict(flat)
        for (target, _), value in zip(axes, combo):
            point[target] = value
        if flat["sweep.alpha_fraction"]:
            point["feedback.alpha"] = "auto"
        points.append(point)
    return points


def _sweep_row(args):
    index, point = args
    out_dir = point["output.directory"]
    if out_dir:
        point = dict(point, **{"output.directory": str(Path(out_dir) / f"run_{index:03d}")})
    row = {"alpha": point["feedback.alpha"], "delta": point["feedback.delta"],
           "dt": point["integrator.dt"], "K": point["grid.k_modes"]}
    start = time.perf_counter()
    try:
        summary, _ = run(point)
    except Exception as exc:  # row-level isolation
        row.update(verdict="error", final_overlap=math.nan, final_lyapunov=math.nan,
                   max_norm_drift=math.nan, cum_u2=math.nan,
                   error=f"{type(exc).__name__}: {exc}")
    else:
        row.update(alpha=summary["alpha"], verdict=summary["verdict"],
                   final_overlap=summary["final_overlap"],
                   final_lyapunov=summary["final_lyapunov"],
                   max_norm_drift=summary["max_norm_drift"], cum_u2=summary["cum_u2"],
                   error="")
        problems = []
        if summary["monotonicity_violations"]:
            problems.append(f"{summary['monotonicity_violations']} monotonicity violations")
        if summary["max_norm_drift"] > SWEEP_NORM_TOL:
            problems.append(f"norm drift {summary['max_norm_drift']:.3e}")
        row["error"] = "; ".join(problems)
    row["wall_time_s"] = time.perf_counter() - start
    return row


def _fmt(value):
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def sweep(flat: dict):
    """Run the Cartesian product of the sweep axes.

    Each run goes to ``<output.directory>/run_NNN``; the aggregate table is
    written to ``<output.directory>/sweep.csv``.  A failing run is recorded
    in its row and does not stop the sweep.
    """
    points = sweep_points(flat)
    workers = max(1, flat["sweep.workers"])
    jobs = list(enumerate(points))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_row, jobs))
    else:
        rows = [_sweep_row(job) for job in jobs]
    out_dir = flat["output.directory"]
    if out_dir:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        with open(Path(out_dir) / "sweep.csv", "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(SWEEP_COLUMNS)
            for row in rows:
                writer.writerow([_fmt(row[c]) for c in SWEEP_COLUMNS])
    return rows
