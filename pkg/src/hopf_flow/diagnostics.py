"""Residual reporting and generic numerical checks.

Every check in this package reduces to a set of per-sample residuals
that are summarized in a ResidualReport: the sample count, the largest
absolute residual, the root-mean-square residual, the tolerance the
check was held to, and a verdict.  Verdicts are three-valued:

- "pass": max_abs <= tolerance.
- "fail": max_abs > tolerance and the check is expected to pass.
- "documented-discrepancy": max_abs > tolerance for a check that
  measures a relation known not to hold as printed; the number is
  reported honestly instead of being hidden or the tolerance widened.

Residuals of additive identities are scaled "relative to terms": the
absolute value of the sum divided by the largest additive term, so a
residual of 1e-16 means cancellation to machine precision regardless of
the raw magnitudes involved.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .integrator import Trajectory

VERDICTS = ("pass", "fail", "documented-discrepancy")


def relative_to_terms(terms: Sequence[complex]) -> float:
    """|sum| / max|term|: cancellation quality of an additive identity."""
    terms = list(terms)
    scale = max(abs(t) for t in terms)
    if scale == 0.0:
        return 0.0
    return abs(sum(terms)) / scale


@dataclass(frozen=True)
class ResidualReport:
    """Summary of one residual battery over a sample set."""

    name: str
    samples: int
    max_abs: float
    rms: float
    verdict: str
    tolerance: float
    details: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict {self.verdict!r}")
        if self.samples > 0 and self.max_abs < self.rms * (1.0 - 1e-12):
            raise ValueError("max_abs must dominate rms")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "samples": self.samples,
            "max_abs": self.max_abs,
            "rms": self.rms,
            "verdict": self.verdict,
            "tolerance": self.tolerance,
            "details": dict(self.details),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


def summarize(name: str, residuals: Sequence[float], tolerance: float,
              documented: bool = False,
              details: Mapping[str, object] | None = None) -> ResidualReport:
    """Fold raw residuals into a report with the three-valued verdict."""
    arr = np.asarray([float(r) for r in residuals], dtype=float)
    if arr.size == 0:
        raise ValueError("no residual samples")
    if not np.all(np.isfinite(arr)):
        bad = int(np.count_nonzero(~np.isfinite(arr)))
        raise ValueError(f"{bad} non-finite residuals in {name!r}")
    max_abs = float(np.max(np.abs(arr)))
    rms = float(np.sqrt(np.mean(arr * arr)))
    if max_abs <= tolerance:
        verdict = "pass"
    elif documented:
        verdict = "documented-discrepancy"
    else:
        verdict = "fail"
    return ResidualReport(name=name, samples=int(arr.size), max_abs=max_abs,
                          rms=rms, verdict=verdict, tolerance=tolerance,
                          details=dict(details or {}))


def conservation_check(traj: Trajectory, quantity: Callable[[np.ndarray], float],
                       tol: float, name: str,
                       exclude: Callable[[np.ndarray], bool] | None = None
                       ) -> ResidualReport:
    """Drift of a scalar along an integrated trajectory.

    `quantity(y)` maps a state vector to a scalar; the residuals are the
    deviations from the value at the initial state, relative to
    max(1, |initial value|).  States where `exclude(y)` is true (for
    example chart-degenerate points) are skipped and counted in details.
    """
    ref = None
    residuals = []
    skipped = 0
    for y in traj.ys:
        if exclude is not None and exclude(y):
            skipped += 1
            continue
        q = float(quantity(y))
        if ref is None:
            ref = q
            residuals.append(0.0)
        else:
            residuals.append((q - ref) / max(1.0, abs(ref)))
    if ref is None:
        raise ValueError("all trajectory samples were excluded")
    return summarize(name, residuals, tol,
                     details={"initial_value": ref, "skipped": skipped})


def fd_check(f: Callable[[np.ndarray], float],
             analytic_grad: Callable[[np.ndarray], np.ndarray],
             probes: Sequence[np.ndarray], tol: float, name: str,
             h: float = 1e-6) -> ResidualReport:
    """Central-difference check of an analytic gradient at probe points.

    Residuals are per-component |fd - analytic| / max(1, |analytic|).
    """
    residuals = []
    for p in probes:
        p = np.asarray(p, dtype=float)
        grad = np.asarray(analytic_grad(p), dtype=float)
        for k in range(p.size):
            e = np.zeros_like(p)
            e[k] = h * max(1.0, abs(p[k]))
            fd = (f(p + e) - f(p - e)) / (2.0 * e[k])
            residuals.append((fd - grad[k]) / max(1.0, abs(grad[k])))
    return summarize(name, residuals, tol,
                     details={"probes": len(list(probes)), "step": h})
