"""Constrained choice of the passive static offset.

Minimizes the rms of the residual dynamic-force series over a scalar offset,
subject to a crest-factor cap: the residual peak may not exceed
``peak_factor`` times its rms.  The objective is scanned on a dense grid and
the best feasible cell is refined by golden-section search.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .analysis import rms

PHI = (np.sqrt(5.0) - 1.0) / 2.0  # golden ratio step


@dataclass
class OffsetProblem:
    """One offset-selection problem.

    demand_series_builder maps a candidate offset (N/kg) to the residual
    dynamic-force series it would leave for the motor(s).
    """

    demand_series_builder: Callable[[float], np.ndarray]
    f_stat_max: float
    peak_factor: float = 3.0
    grid_resolution: float = 0.01
    f_stat_min: float = 0.0

    def __post_init__(self):
        if self.f_stat_max <= self.f_stat_min:
            raise ValueError("empty offset range")
        if self.grid_resolution <= 0.0 or self.peak_factor <= 0.0:
            raise ValueError("grid_resolution and peak_factor must be positive")


@dataclass
class OffsetResult:
    f_stat: float
    f_dyn_rms: float
    f_dyn_peak: float
    feasible: bool            # constraint satisfied at the returned point
    constraint_active: bool   # peak == peak_factor * rms within tolerance

    def as_dict(self) -> dict:
        return {
            "f_stat": self.f_stat,
            "f_dyn_rms": self.f_dyn_rms,
            "f_dyn_peak": self.f_dyn_peak,
            "feasible": self.feasible,
            "constraint_active": self.constraint_active,
        }


def _evaluate(problem: OffsetProblem, x: float) -> tuple[float, float]:
    series = np.asarray(problem.demand_series_builder(float(x)), dtype=float)
    return rms(series), float(np.max(np.abs(series)))


def _is_feasible(r: float, p: float, peak_factor: float) -> bool:
    return p <= peak_factor * r * (1.0 + 1e-12) + 1e-12


def offset_sweep(problem: OffsetProblem, offsets=None) -> np.ndarray:
    """Evaluate (offset, rms, peak) rows; defaults to the problem grid."""
    if offsets is None:
        offsets = np.arange(problem.f_stat_min,
                            problem.f_stat_max + 0.5 * problem.grid_resolution,
                            problem.grid_resolution)
    rows = np.empty((len(offsets), 3))
    for k, x in enumerate(offsets):
        r, p = _evaluate(problem, x)
        rows[k] = (x, r, p)
    return rows


def _golden(problem: OffsetProblem, lo: float, hi: float, tol: float = 1e-9) -> float:
    """Golden-section minimum of the rms objective on [lo, hi]."""
    a, b = lo, hi
    c = b - PHI * (b - a)
    d = a + PHI * (b - a)
    fc = _evaluate(problem, c)[0]
    fd = _evaluate(problem, d)[0]
    while (b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - PHI * (b - a)
            fc = _evaluate(problem, c)[0]
        else:
            a, c, fc = c, d, fd
            d = a + PHI * (b - a)
            fd = _evaluate(problem, d)[0]
    return 0.5 * (a + b)


def optimal_offset(problem: OffsetProblem) -> OffsetResult:
    """Best feasible offset: grid scan, feasibility filter, golden refinement.

    Ties break toward the smallest offset.  If no grid point satisfies the
    crest-factor cap, the unconstrained rms minimizer is returned with
    ``feasible=False`` so callers can flag the outcome.
    """
    sweep = offset_sweep(problem)
    xs, rs, ps = sweep[:, 0], sweep[:, 1], sweep[:, 2]
    ok = ps <= problem.peak_factor * rs * (1.0 + 1e-12) + 1e-12

    if not np.any(ok):
        k = int(np.argmin(rs))  # argmin takes the first (smallest) offset on ties
        x, (r, p) = xs[k], (rs[k], ps[k])
        x = _refine(problem, xs, k, feasible_only=False)
        r, p = _evaluate(problem, x)
        return OffsetResult(float(x), r, p, False, False)

    masked = np.where(ok, rs, np.inf)
    k = int(np.argmin(masked))
    x = _refine(problem, xs, k, feasible_only=True)
    r, p = _evaluate(problem, x)
    if not _is_feasible(r, p, problem.peak_factor):
        # refinement drifted across the constraint boundary; keep the grid point
        x = float(xs[k])
        r, p = rs[k], ps[k]
    active = abs(p - problem.peak_factor * r) <= 1e-6 * max(1.0, p)
    return OffsetResult(float(x), r, p, True, active)


def _refine(problem: OffsetProblem, xs: np.ndarray, k: int, feasible_only: bool) -> float:
    lo = xs[max(k - 1, 0)]
    hi = xs[min(k + 1, len(xs) - 1)]
    if hi <= lo:
        return float(xs[k])
    if feasible_only:
        # shrink the bracket to the feasible sub-interval around the grid winner
        fine = np.linspace(lo, hi, 41)
        flags = np.array([_is_feasible(*_evaluate(problem, x), problem.peak_factor)
                          for x in fine])
        if not flags[20]:  # grid winner asserts feasibility; trust the scan
            flags[20] = True
        left = 20
        while left > 0 and flags[left - 1]:
            left -= 1
        right = 20
        while right < 40 and flags[right + 1]:
            right += 1
        lo, hi = fine[left], fine[right]
        if hi <= lo:
            return float(xs[k])
    x = _golden(problem, float(lo), float(hi))
    # never return a worse value than the best bracket endpoint or grid point
    cands = [x, float(xs[k]), float(lo), float(hi)]
    vals = []
    for c in cands:
        r, p = _evaluate(problem, c)
        bad = feasible_only and not _is_feasible(r, p, problem.peak_factor)
        vals.append(np.inf if bad else r)
    return cands[int(np.argmin(vals))]


def offset_problem(scenario, variant: str, peak_factor: float = 3.0,
                   grid_resolution: float = 0.01) -> OffsetProblem:
    """Offset problem for configuration B (per-leg) or D (shared circuit).

    For B the residual of the reference leg is optimized (the other leg is a
    phase-shifted copy with identical statistics).
    """
    from .analysis import demand

    if variant not in ("B", "D"):
        raise ValueError("offsets only apply to variants B and D")

    def builder(f_stat: float) -> np.ndarray:
        d = demand(scenario, variant, f_stat)
        return d.f_dyn[0]

    f_max = float(np.max(scenario.legs))
    return OffsetProblem(builder, f_stat_max=f_max, peak_factor=peak_factor,
                         grid_resolution=grid_resolution)
