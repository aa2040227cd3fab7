"""Degree-one circle maps: monotone envelopes, rotation intervals, rational sign test."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


class NonMonotone(ValueError):
    pass


class IdentityCase(ValueError):
    """f^q - p is the identity on the grid, where the sign test says nothing."""


class CircleVerdict(enum.Enum):
    SIGN_CHANGE_LOCKED = "SIGN_CHANGE_LOCKED"
    NO_ZERO_EXCLUDED = "NO_ZERO_EXCLUDED"
    ONE_SIDED_UPPER = "ONE_SIDED_UPPER"
    ONE_SIDED_LOWER = "ONE_SIDED_LOWER"
    UNDECIDED = "UNDECIDED"


@dataclass(frozen=True)
class CircleLift:
    evaluator: Callable[[np.ndarray], np.ndarray]
    lipschitz_bound: Optional[float] = None
    name: str = "circle"

    def __call__(self, x):
        return self.evaluator(np.asarray(x, dtype=float))

    def degree_defect(self, n: int = 1000, seed: int = 0) -> float:
        x = np.random.default_rng(seed).uniform(-2, 2, n)
        return float(np.abs(self(x + 1) - self(x) - 1).max())


def trig_lift(shift: float = 0.0, sin_amp: float = 0.0, cos_amp: float = 0.0,
              name: str = "trig") -> CircleLift:
    """x + shift + sin_amp sin(2 pi x) + cos_amp cos(2 pi x)."""
    ev = lambda x: (x + shift + sin_amp * np.sin(2 * np.pi * x)
                    + cos_amp * np.cos(2 * np.pi * x))
    return CircleLift(ev, 1 + 2 * np.pi * math.hypot(sin_amp, cos_amp), name)


def piecewise_linear_lift(values: np.ndarray, name: str = "pl") -> CircleLift:
    """Degree-one lift through (i/n, values[i]), linear in between."""
    v = np.asarray(values, dtype=float)
    n = len(v)
    xs = np.arange(n + 1) / n
    vs = np.append(v, v[0] + 1)

    def ev(x):
        k = np.floor(x)
        return np.interp(x - k, xs, vs) + k

    slope = float(np.abs(np.diff(vs)).max() * n)
    return CircleLift(ev, slope, name)


def _grid(n):
    return np.arange(n) / n


def envelope_maps(f: CircleLift, grid: int = 4096) -> tuple[CircleLift, CircleLift]:
    """(f_minus, f_plus): running inf to the right and running sup to the left, on a grid."""
    if grid < 64:
        raise ValueError("grid must be >= 64")
    x = _grid(grid)
    fx = f(x)
    ext = np.concatenate([fx - 1, fx, fx + 1])
    # for degree-one lifts the sup over y <= x equals the sup over [x - 1, x]
    up = np.maximum.accumulate(ext)[grid:2 * grid]
    down = np.minimum.accumulate(ext[::-1])[::-1][grid:2 * grid]
    return (piecewise_linear_lift(down, f"{f.name}.minus"),
            piecewise_linear_lift(up, f"{f.name}.plus"))


@dataclass(frozen=True)
class RotationInterval:
    lo: float
    hi: float
    certified_width: float
    grid_slack: float = 0.0

    def contains(self, v: float, extra: float = 0.0) -> bool:
        s = self.grid_slack + extra
        return self.lo - s <= v <= self.hi + s


def _is_monotone(f: CircleLift, n: int = 4096) -> bool:
    x = np.arange(n + 1) / n
    return bool(np.all(np.diff(f(x)) >= -1e-12))


def rotation_number_monotone(f: CircleLift, N: int = 10_000) -> RotationInterval:
    """Poincare rotation number from the orbit of 0, with the 1/N bound either side."""
    if N < 100:
        raise ValueError("N must be >= 100")
    if not _is_monotone(f):
        raise NonMonotone(f"{f.name} is not non-decreasing")
    x = np.zeros(1)
    for _ in range(N):
        x = f(x)
    v = float(x[0]) / N
    return RotationInterval(v - 1.0 / N, v + 1.0 / N, 2.0 / N)


def rotation_interval(f: CircleLift, grid: int = 4096, N: int = 10_000) -> RotationInterval:
    """[rho(f_minus), rho(f_plus)] with the iteration slack folded into the ends.

    ``grid_slack`` bounds how far the grid envelopes may sit from the exact
    ones: the Lipschitz step when a bound is known, else the gap to envelopes
    built on an eight times finer grid.
    """
    fm, fp = envelope_maps(f, grid)
    lo = rotation_number_monotone(fm, N)
    hi = rotation_number_monotone(fp, N)
    if f.lipschitz_bound is not None:
        slack = f.lipschitz_bound / grid
    else:
        fine_m, fine_p = envelope_maps(f, 8 * grid)
        x = _grid(8 * grid)
        slack = float(max(np.abs(fine_m(x) - fm(x)).max(), np.abs(fine_p(x) - fp(x)).max()))
    return RotationInterval(lo.lo, hi.hi, 2.0 / N, slack)


@dataclass(frozen=True)
class CircleClassification:
    verdict: CircleVerdict
    g_min: float
    g_max: float
    grid: int
    variation: float
    values: np.ndarray

    def to_csv(self) -> str:
        x = _grid(self.grid)
        return "x,g\n" + "".join(f"{a:.17g},{b:.17g}\n" for a, b in zip(x, self.values))


def _g_values(f: CircleLift, p: int, q: int, n: int) -> np.ndarray:
    x = _grid(n)
    y = x
    for _ in range(q):
        y = f(y)
    return y - p - x


def classify_rational_circle(f: CircleLift, p: int, q: int, grid: int = 256,
                             tol: float = 1e-3, max_grid: int = 1 << 22
                             ) -> CircleClassification:
    """Sign pattern of g = f^q - p - Id on a grid refined until its variation is below tol/2.

    A witnessed sign change is decisive at any resolution; every other verdict
    needs the variation bound, and falls back to UNDECIDED without it.
    """
    if grid < 256:
        raise ValueError("grid must be >= 256")
    if q < 1:
        raise ValueError("q must be positive")
    if not tol > 0:
        raise ValueError("tol must be positive")
    n = grid
    while True:
        g = _g_values(f, p, q, n)
        if f.lipschitz_bound is not None:
            var = (f.lipschitz_bound ** q + 1) / n
        else:
            gg = np.append(g, g[0])
            var = float(np.abs(np.diff(gg)).max())
        if var < tol / 2 or 2 * n > max_grid:
            break
        n *= 2
    lo, hi = float(g.min()), float(g.max())
    if max(abs(lo), abs(hi)) <= 1e-15:
        raise IdentityCase(f"f^{q} - {p} is the identity on a {n}-point grid")
    resolved = var < tol / 2
    if lo < -tol and hi > tol:
        v = CircleVerdict.SIGN_CHANGE_LOCKED
    elif not resolved:
        v = CircleVerdict.UNDECIDED
    elif lo > tol or hi < -tol:
        v = CircleVerdict.NO_ZERO_EXCLUDED
    elif abs(hi) <= tol and lo < -tol:
        v = CircleVerdict.ONE_SIDED_UPPER
    elif abs(lo) <= tol and hi > tol:
        v = CircleVerdict.ONE_SIDED_LOWER
    else:
        v = CircleVerdict.UNDECIDED
    return CircleClassification(v, lo, hi, n, var, g)


# the three cases of the sign test, as small examples
CANONICAL = {
    "locked": (trig_lift(sin_amp=1 / (2 * np.pi), name="x+sin(2pi x)/2pi"), 0, 1),
    "excluded": (trig_lift(shift=0.3, name="x+0.3"), 0, 1),
    "one_sided_upper": (trig_lift(shift=-1 / (2 * np.pi), cos_amp=1 / (2 * np.pi),
                                  name="x-(1-cos(2pi x))/2pi"), 0, 1),
}
