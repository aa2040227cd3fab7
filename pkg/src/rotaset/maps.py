"""Lifted degree-one torus maps and the plane-map calculus built on them.

Every evaluator is vectorised: it takes an ``(N, 2)`` float array and returns a
new ``(N, 2)`` array.  Nothing here keeps mutable state, so a built map can be
shared freely between threads.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .geometry import Vec2

ArrayMap = Callable[[np.ndarray], np.ndarray]


class MapDefinitionError(ValueError):
    """A map is ill-defined: bad parameters or non-finite output."""


@dataclass(frozen=True)
class RationalVector:
    p: int
    r: int
    q: int

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("q must be a positive integer")
        if math.gcd(math.gcd(abs(self.p), abs(self.r)), self.q) != 1:
            raise ValueError(f"gcd(p, q, r) must be 1, got ({self.p}, {self.r}, {self.q})")

    @property
    def vector(self) -> Vec2:
        return Vec2(self.p / self.q, self.r / self.q)

    @property
    def shift(self) -> np.ndarray:
        return np.array([self.p, self.r], dtype=float)


@dataclass(frozen=True)
class PeriodicHint:
    """A point the builder knows to solve f^q(z) = z + (p, r)."""

    z: Vec2
    rho: RationalVector


@dataclass(frozen=True)
class LiftedMap:
    evaluator: ArrayMap = field(compare=False)
    name: str = "map"
    params: dict = field(default_factory=dict, compare=False)
    inverse: Optional[ArrayMap] = field(default=None, compare=False)
    lipschitz_bound: Optional[float] = None
    periodic_hints: tuple[PeriodicHint, ...] = ()

    def __call__(self, z: np.ndarray) -> np.ndarray:
        return self.evaluator(np.asarray(z, dtype=float).reshape(-1, 2))

    def with_hints(self, hints) -> "LiftedMap":
        return LiftedMap(self.evaluator, self.name, self.params, self.inverse,
                         self.lipschitz_bound, tuple(hints))


def _as_array(z) -> np.ndarray:
    return np.asarray(z, dtype=float).reshape(-1, 2)


def evaluate(fmap: LiftedMap, z) -> Vec2:
    zz = _as_array(z)
    if not np.all(np.isfinite(zz)):
        raise MapDefinitionError(f"non-finite input {tuple(zz[0])}")
    out = fmap(zz)
    if not np.all(np.isfinite(out)):
        raise MapDefinitionError(f"{fmap.name}: non-finite output at {tuple(zz[0])}")
    return Vec2(float(out[0, 0]), float(out[0, 1]))


def evaluate_many(fmap: LiftedMap, z) -> np.ndarray:
    zz = _as_array(z)
    out = fmap(zz)
    bad = ~np.all(np.isfinite(out), axis=1)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise MapDefinitionError(f"{fmap.name}: non-finite output at {tuple(zz[i])}")
    return out


def iterate(fmap: LiftedMap, z, n: int) -> np.ndarray:
    zz = _as_array(z)
    for _ in range(n):
        zz = fmap(zz)
    return zz


@dataclass(frozen=True)
class PeriodicityReport:
    max_defect: float
    worst_point: Vec2
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_defect <= self.tol


def check_periodicity(fmap: LiftedMap, n_samples: int, tol: float, seed=0) -> PeriodicityReport:
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    z = rng.random((n_samples, 2))
    fz = fmap(z)
    worst, where = 0.0, Vec2(float(z[0, 0]), float(z[0, 1]))
    for mx in (-1, 0, 1):
        for my in (-1, 0, 1):
            m = np.array([mx, my], dtype=float)
            d = np.linalg.norm(fmap(z + m) - fz - m, axis=1)
            d = np.where(np.isfinite(d), d, np.inf)
            i = int(d.argmax())
            if d[i] > worst:
                worst, where = float(d[i]), Vec2(float(z[i, 0]), float(z[i, 1]))
    return PeriodicityReport(worst, where, tol)


# -- algebra ---------------------------------------------------------------

def compose(a: LiftedMap, b: LiftedMap) -> LiftedMap:
    """z -> a(b(z))."""
    inv = None
    if a.inverse is not None and b.inverse is not None:
        ai, bi = a.inverse, b.inverse
        inv = lambda z: bi(ai(z))
    lip = None
    if a.lipschitz_bound is not None and b.lipschitz_bound is not None:
        lip = a.lipschitz_bound * b.lipschitz_bound
    ae, be = a.evaluator, b.evaluator
    return LiftedMap(lambda z: ae(be(z)), f"compose({a.name},{b.name})",
                     {}, inv, lip)


def power(f: LiftedMap, n: int) -> LiftedMap:
    if n < 1:
        raise MapDefinitionError("power exponent must be >= 1")
    fe = f.evaluator

    def ev(z):
        for _ in range(n):
            z = fe(z)
        return z

    inv = None
    if f.inverse is not None:
        fi = f.inverse

        def inv(z):
            for _ in range(n):
                z = fi(z)
            return z

    lip = f.lipschitz_bound ** n if f.lipschitz_bound is not None else None
    return LiftedMap(ev, f"power({f.name},{n})", {}, inv, lip)


def minus(f: LiftedMap, v) -> LiftedMap:
    """z -> f(z) - v; hints are dropped since they no longer hold."""
    vv = np.asarray(v, dtype=float).reshape(2)
    fe = f.evaluator
    inv = None
    if f.inverse is not None:
        fi = f.inverse
        inv = lambda z: fi(z + vv)
    return LiftedMap(lambda z: fe(z) - vv, f"minus({f.name},({float(vv[0])!r} {float(vv[1])!r}))",
                     {"v": (float(vv[0]), float(vv[1]))}, inv, f.lipschitz_bound)


def swap_conjugate(f: LiftedMap, name: str | None = None) -> LiftedMap:
    """S f S with S(x, y) = (y, x)."""
    fe = f.evaluator
    ev = lambda z: fe(z[:, ::-1])[:, ::-1]
    inv = None
    if f.inverse is not None:
        fi = f.inverse
        inv = lambda z: fi(z[:, ::-1])[:, ::-1]
    return LiftedMap(ev, name or f"swap({f.name})", dict(f.params), inv, f.lipschitz_bound)


# -- profiles ----------------------------------------------------------------

@dataclass(frozen=True)
class TrigProfile:
    """c0 + sum_k a_k cos(2 pi k t) + b_k sin(2 pi k t)."""

    c0: float = 0.0
    a: tuple[float, ...] = ()
    b: tuple[float, ...] = ()

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.full_like(t, self.c0)
        for k, ak in enumerate(self.a, start=1):
            out = out + ak * np.cos(2 * np.pi * k * t)
        for k, bk in enumerate(self.b, start=1):
            out = out + bk * np.sin(2 * np.pi * k * t)
        return out

    def lipschitz(self) -> float:
        return 2 * np.pi * sum(k * (abs(ak)) for k, ak in enumerate(self.a, 1)) + \
            2 * np.pi * sum(k * abs(bk) for k, bk in enumerate(self.b, 1))


@dataclass(frozen=True)
class TableProfile:
    """Piecewise-linear 1-periodic interpolation of equally spaced samples on [0, 1)."""

    values: tuple[float, ...]

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        n = len(self.values)
        v = np.asarray(self.values + (self.values[0],), dtype=float)
        s = (t - np.floor(t)) * n
        i = np.minimum(np.floor(s).astype(int), n - 1)
        w = s - i
        return (1 - w) * v[i] + w * v[i + 1]

    def lipschitz(self) -> float:
        v = np.asarray(self.values + (self.values[0],), dtype=float)
        return float(np.abs(np.diff(v)).max() * len(self.values))


# -- primitives ----------------------------------------------------------------

def identity() -> LiftedMap:
    return LiftedMap(lambda z: z.copy(), "identity", {}, lambda z: z.copy(), 1.0)


def translation(v) -> LiftedMap:
    vv = np.asarray(v, dtype=float).reshape(2)
    return LiftedMap(lambda z: z + vv, f"translation({float(vv[0])!r} {float(vv[1])!r})",
                     {"v": (float(vv[0]), float(vv[1]))}, lambda z: z - vv, 1.0)


def shear_x(profile) -> LiftedMap:
    def ev(z):
        out = z.copy()
        out[:, 0] += profile(z[:, 1])
        return out

    def inv(z):
        out = z.copy()
        out[:, 0] -= profile(z[:, 1])
        return out

    return LiftedMap(ev, "shear_x", {"profile": profile}, inv, 1.0 + profile.lipschitz())


def shear_y(profile) -> LiftedMap:
    def ev(z):
        out = z.copy()
        out[:, 1] += profile(z[:, 0])
        return out

    def inv(z):
        out = z.copy()
        out[:, 1] -= profile(z[:, 0])
        return out

    return LiftedMap(ev, "shear_y", {"profile": profile}, inv, 1.0 + profile.lipschitz())


def _local(z, center):
    u = z - center
    return u - np.round(u)


def bump_push(center, radius: float, displacement) -> LiftedMap:
    """z -> z + (1 - s^2)^2 d with s = |z - c| / radius (periodised)."""
    c = np.asarray(center, dtype=float).reshape(2)
    d = np.asarray(displacement, dtype=float).reshape(2)
    if not 0 < radius < 0.5:
        raise MapDefinitionError("bump_push radius must lie in (0, 1/2)")
    # bump slope max is 8/(3 sqrt 3)/radius
    slope = 8 / (3 * math.sqrt(3)) / radius
    if np.linalg.norm(d) * slope >= 1:
        raise MapDefinitionError("bump_push displacement too large for a homeomorphism")

    def ev(z):
        s2 = (_local(z, c) ** 2).sum(axis=1) / radius ** 2
        w = np.where(s2 < 1, (1 - s2) ** 2, 0.0)
        return z + w[:, None] * d

    return LiftedMap(ev, "bump_push", {"center": tuple(c), "radius": radius,
                                       "displacement": tuple(d)},
                     None, 1 + np.linalg.norm(d) * slope)


@dataclass(frozen=True)
class TwistSpec:
    """Rotation by angle*ramp(r) about center in a squeezed frame.

    ``aspect`` > 1 stretches the support into an ellipse whose long axis points
    along ``direction``; the squeeze has determinant one, so the twist stays
    area preserving.
    """

    center: tuple[float, float]
    r_inner: float
    r_outer: float
    angle: float = math.pi
    direction: float = 0.0
    aspect: float = 1.0

    def frame(self):
        c, s = math.cos(self.direction), math.sin(self.direction)
        rot = np.array([[c, -s], [s, c]])
        sq = np.diag([self.aspect, 1.0 / self.aspect])
        L = rot @ sq @ rot.T
        return L, np.linalg.inv(L)

    def semi_axes(self):
        return self.r_outer * self.aspect, self.r_outer / self.aspect


def _twist_eval(spec: TwistSpec, sign: float, periodic: bool):
    c = np.asarray(spec.center, dtype=float)
    L, Linv = spec.frame()
    ri, ro = spec.r_inner, spec.r_outer

    def ev(z):
        u = _local(z, c) if periodic else z - c
        w = u @ Linv.T
        r = np.hypot(w[:, 0], w[:, 1])
        ramp = np.clip((ro - r) / (ro - ri), 0.0, 1.0)
        moved = r < ro
        if not moved.any():
            return z.copy()
        a = sign * spec.angle * ramp[moved]
        ca, sa = np.cos(a), np.sin(a)
        wm = w[moved]
        wr = np.stack([ca * wm[:, 0] - sa * wm[:, 1], sa * wm[:, 0] + ca * wm[:, 1]], axis=1)
        out = z.copy()
        out[moved] = z[moved] + (wr - wm) @ L.T
        return out

    return ev


def twist(center, r_inner: float, r_outer: float, angle: float = math.pi,
          direction: float = 0.0, aspect: float = 1.0) -> LiftedMap:
    spec = TwistSpec(tuple(float(t) for t in np.asarray(center, float).reshape(2)),
                     float(r_inner), float(r_outer), float(angle), float(direction), float(aspect))
    if not 0 < spec.r_inner < spec.r_outer:
        raise MapDefinitionError("twist needs 0 < r_inner < r_outer")
    if max(spec.semi_axes()) >= 0.5:
        raise MapDefinitionError("twist support must fit inside a fundamental domain")
    return LiftedMap(_twist_eval(spec, 1.0, True), "twist", {"spec": spec},
                     _twist_eval(spec, -1.0, True), None)


def twist_many(specs: Sequence[TwistSpec], periodic: bool = True):
    """Evaluator/inverse pair for a family of twists with pairwise disjoint supports."""
    fwd = [_twist_eval(s, 1.0, periodic) for s in specs]
    bwd = [_twist_eval(s, -1.0, periodic) for s in specs]

    def ev(z):
        for f in fwd:
            z = f(z)
        return z

    def inv(z):
        for f in bwd:
            z = f(z)
        return z

    return ev, inv
