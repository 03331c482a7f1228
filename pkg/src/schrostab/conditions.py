"""Numerical audit of the genericity conditions on ``(V, Q)``.

Two properties are checked on the truncated spectrum ``k <= K``:

* coupling: ``|<Q e1, ej>| > eps_coupling`` for every ``j >= 2``;
* non-resonance: ``lam1 - lamj != lamp - lamq`` whenever ``j != 1`` and
  ``{1, j} != {p, q}``, tested as a relative mismatch
  ``|(lam1 - lamj) - (lamp - lamq)| > eps_gap * (1 + |lam1 - lamj|)``.

Exact non-vanishing cannot be decided in floating point, so both thresholds
are part of the report.  Modes above ``K`` are not audited.
"""

from __future__ import annotations

import bisect
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .operators import ControlOperator
from .spectral import SpectralBasis

__all__ = ["GenericityReport", "check_conditions", "brute_force_resonances",
           "DEFAULT_EPS_COUPLING", "DEFAULT_EPS_GAP"]

DEFAULT_EPS_COUPLING = 1e-8
DEFAULT_EPS_GAP = 1e-6


@dataclass(frozen=True)
class CouplingViolation:
    j: int
    value: float


@dataclass(frozen=True)
class ResonanceViolation:
    j: int
    p: int
    q: int
    mismatch: float


@dataclass(frozen=True)
class GenericityReport:
    k_modes: int
    eps_coupling: float
    eps_gap: float
    coupling_violations: list = field(default_factory=list)
    resonance_violations: list = field(default_factory=list)

    @property
    def verdict(self) -> str:
        return "pass" if not (self.coupling_violations or self.resonance_violations) else "fail"

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def resonance_set(self) -> set:
        return {(r.j, r.p, r.q) for r in self.resonance_violations}

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "eps_coupling": self.eps_coupling,
            "eps_gap": self.eps_gap,
            "coupling_violations": [asdict(v) for v in self.coupling_violations],
            "resonance_violations": [asdict(v) for v in self.resonance_violations],
            "k_modes": self.k_modes,
            "note": f"audit limited to the lowest {self.k_modes} modes",
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _excluded(j, p, q):
    return {1, j} == {p, q}


def check_conditions(basis: SpectralBasis, control: ControlOperator,
                     eps_coupling: float = DEFAULT_EPS_COUPLING,
                     eps_gap: float = DEFAULT_EPS_GAP) -> GenericityReport:
    """Audit coupling and gap non-resonance on the truncated spectrum.

    All ``K^2`` gaps ``lam_p - lam_q`` are sorted once and each target gap
    ``lam_1 - lam_j`` is located by bisection, so the cost is
    ``O(K^2 log K)`` plus the number of hits.
    """
    if not (eps_coupling > 0 and eps_gap > 0):
        raise ValueError("thresholds must be positive")
    lam = np.asarray(basis.eigenvalues, dtype=float)
    K = lam.size
    q1 = control.q_matrix[0]

    coupling = [CouplingViolation(j + 1, float(q1[j]))
                for j in range(1, K) if abs(q1[j]) <= eps_coupling]

    gaps = (lam[:, None] - lam[None, :]).ravel()
    order = np.argsort(gaps, kind="stable")
    sorted_gaps = gaps[order].tolist()
    hits = []
    for j in range(2, K + 1):
        target = lam[0] - lam[j - 1]
        tol = eps_gap * (1.0 + abs(target))
        # widened window; the exact test below decides
        lo = bisect.bisect_left(sorted_gaps, target - 2 * tol)
        hi = bisect.bisect_right(sorted_gaps, target + 2 * tol)
        for idx in order[lo:hi]:
            p, q = divmod(int(idx), K)
            p, q = p + 1, q + 1
            if _excluded(j, p, q):
                continue
            mismatch = float(target - (lam[p - 1] - lam[q - 1]))
            if abs(mismatch) <= tol:
                hits.append(ResonanceViolation(j, p, q, mismatch))
    hits.sort(key=lambda r: (r.j, r.p, r.q))
    return GenericityReport(K, float(eps_coupling), float(eps_gap), coupling, hits)


def brute_force_resonances(eigenvalues, eps_gap: float) -> set:
    """Reference triple loop over ``(j, p, q)``; returns index triples."""
    lam = [float(v) for v in eigenvalues]
    K = len(lam)
    found = set()
    for j in range(2, K + 1):
        target = lam[0] - lam[j - 1]
        tol = eps_gap * (1.0 + abs(target))
        for p in range(1, K + 1):
            for q in range(1, K + 1):
                if _excluded(j, p, q):
                    continue
                if abs(target - (lam[p - 1] - lam[q - 1])) <= tol:
                    found.add((j, p, q))
    return found
