"""Built-in potential and control profiles, plus node-sample files.

A profile is a callable ``f(x) -> ndarray`` so it can be sampled on interior
nodes and, for the control, on the two boundary nodes as well.
"""

from __future__ import annotations

from functools import partial

import numpy as np

__all__ = ["potential_profile", "control_profile", "load_samples",
           "POTENTIAL_KINDS", "CONTROL_KINDS"]


def _zero(x):
    return np.zeros_like(x)


def _constant(x, value=0.0):
    return np.full_like(x, value, dtype=float)


def _gaussian(x, amplitude=20.0, center=0.4, width=50.0):
    return amplitude * np.exp(-width * (x - center) ** 2)


def _cosine(x, amplitude=1.0, frequency=1.0, phase=0.0):
    return amplitude * np.cos(frequency * x + phase)


def _linear(x, amplitude=1.0, offset=0.0):
    return amplitude * x + offset


def _quadratic(x, amplitude=1.0, offset=0.0):
    return amplitude * x ** 2 + offset


POTENTIAL_KINDS = {
    "zero": (_zero, ()),
    "constant": (_constant, ("value",)),
    "gaussian": (_gaussian, ("amplitude", "center", "width")),
    "cosine": (_cosine, ("amplitude", "frequency", "phase")),
}

CONTROL_KINDS = {
    "x": (_linear, ("amplitude", "offset")),
    "x2": (_quadratic, ("amplitude", "offset")),
    "cosine": (_cosine, ("amplitude", "frequency", "phase")),
    "constant": (_constant, ("value",)),
}


def _make(table, kind, params):
    if kind not in table:
        raise ValueError(f"unknown profile kind {kind!r}; expected one of {sorted(table)}")
    func, allowed = table[kind]
    extra = set(params) - set(allowed)
    if extra:
        raise ValueError(f"profile {kind!r} does not take {sorted(extra)}")
    return partial(func, **params)


def potential_profile(kind: str, **params):
    return _make(POTENTIAL_KINDS, kind, params)


def control_profile(kind: str, **params):
    return _make(CONTROL_KINDS, kind, params)


def load_samples(path, m_points: int) -> np.ndarray:
    """Read one real per line; the count must equal ``m_points``."""
    values = np.loadtxt(path, dtype=float, ndmin=1)
    if values.shape != (m_points,):
        raise ValueError(f"{path}: expected {m_points} samples, found {values.size}")
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{path}: non-finite sample")
    return values
