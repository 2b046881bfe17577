"""Polynomials in one variable: evaluation, differentiation, and robust
root/minimum location on bounded intervals via grid scan plus bisection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

# Grid-scan defaults: the brackets we search are always small and known, so a
# fixed-resolution scan with bisection refinement beats general root solvers
# on robustness for near-degenerate fits.
DEFAULT_GRID_CELLS = 10_000
BISECT_TOL = 1e-10
# Two crossings whose anchor distances differ by less than this are a tie.
TIE_TOL = 1e-8


@dataclass(frozen=True)
class Polynomial:
    """Coefficients in ascending degree order: c0 + c1*s + c2*s**2 + ...

    The degree is structural (coefficient count minus one); trailing
    coefficients may be zero when a fit of fixed degree lands on a
    lower-degree curve.
    """

    coefficients: np.ndarray

    def __post_init__(self):
        coef = np.atleast_1d(np.asarray(self.coefficients, dtype=float))
        if coef.ndim != 1 or coef.size == 0:
            raise ValueError("coefficients must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(coef)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coefficients", coef)

    @property
    def degree(self) -> int:
        return self.coefficients.size - 1

    def __call__(self, s):
        return evaluate(self, s)


def evaluate(p: Polynomial, s):
    """Evaluate p at s (scalar or array) by nested multiplication (Horner)."""
    out = npoly.polyval(np.asarray(s, dtype=float), p.coefficients)
    return float(out) if np.isscalar(s) or np.ndim(s) == 0 else out


def derivative(p: Polynomial) -> Polynomial:
    """Formal derivative; the derivative of a constant is the zero polynomial."""
    if p.degree == 0:
        return Polynomial(np.array([0.0]))
    return Polynomial(npoly.polyder(p.coefficients))


def _bisect(f, lo: float, hi: float, tol: float = BISECT_TOL) -> float:
    """Shrink [lo, hi] around a sign change of f; f(lo) and f(hi) must have
    opposite (or zero) signs."""
    flo = f(lo)
    if flo == 0.0:
        return lo
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        if (fmid < 0.0) == (flo < 0.0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def closest_minimum_to_zero(
    p: Polynomial,
    bracket: tuple[float, float],
    grid_cells: int = DEFAULT_GRID_CELLS,
) -> tuple[float, float] | None:
    """Locate the local minimum of p inside the bracket with smallest |s|.

    Scans the derivative on a uniform grid for - to + sign changes and
    refines each by bisection. Returns (s_min, p(s_min)), or None when no
    local minimum lies in the bracket (degree <= 1, or monotone there).
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not (np.isfinite(lo) and np.isfinite(hi)) or hi <= lo:
        raise ValueError(f"bracket must be a finite non-empty interval, got {bracket}")
    dp = derivative(p)
    if dp.degree == 0 and dp.coefficients[0] == 0.0:
        return None

    grid = np.linspace(lo, hi, grid_cells + 1)
    dvals = evaluate(dp, grid)
    rising = np.nonzero((dvals[:-1] < 0.0) & (dvals[1:] >= 0.0))[0]
    if rising.size == 0:
        return None

    candidates = [_bisect(lambda s: evaluate(dp, s), grid[i], grid[i + 1]) for i in rising]
    s_min = float(min(candidates, key=abs))
    return s_min, evaluate(p, s_min)


def solve_for_value_nearest(
    p: Polynomial,
    target: float,
    anchor: float,
    bracket: tuple[float, float],
    grid_cells: int = DEFAULT_GRID_CELLS,
) -> float | None:
    """Find the s in the bracket closest to the anchor where |p(s)| == target.

    Sign changes of |p(s)| - target are scanned on a uniform grid and refined
    by bisection. Ties (two crossings equidistant from the anchor) resolve to
    the larger s, which widens the sampling interval downstream. Returns None
    when |p| never attains the target inside the bracket.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not (np.isfinite(lo) and np.isfinite(hi)) or hi <= lo:
        raise ValueError(f"bracket must be a finite non-empty interval, got {bracket}")

    def g(s):
        return np.abs(evaluate(p, s)) - target

    grid = np.linspace(lo, hi, grid_cells + 1)
    gvals = g(grid)

    candidates = list(grid[gvals == 0.0])
    crossing = np.nonzero(gvals[:-1] * gvals[1:] < 0.0)[0]
    candidates.extend(
        _bisect(g, grid[i], grid[i + 1], tol=1e-13) for i in crossing
    )
    if not candidates:
        return None

    best = None
    best_dist = np.inf
    for s in candidates:
        dist = abs(s - anchor)
        if dist < best_dist - TIE_TOL or (abs(dist - best_dist) <= TIE_TOL and s > best):
            best, best_dist = s, dist
    return float(best)
