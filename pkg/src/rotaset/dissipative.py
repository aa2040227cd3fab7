"""Smooth-pieces example with a single degenerate fixed point and its two perturbations.

f_H = (shear near y = 1/2) o f_eps with f_eps(z) = z + eps (xi(z), eta(z)); f_V is
its coordinate-swap conjugate and the example is f = f_V o f_H.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Vec2
from .maps import (LiftedMap, MapDefinitionError, PeriodicHint, RationalVector,
                   TwistSpec, minus, swap_conjugate, twist_many)

TWO_PI = 2 * math.pi
# right edge of V at height 1/2
X1 = 1 / TWO_PI


class SearchFailed(RuntimeError):
    pass


class SupportOverlap(RuntimeError):
    pass


@dataclass(frozen=True)
class DissipativeParams:
    eps: float = 0.4
    delta: float = 0.01
    sharpness: float = 1.0  # exponent k of sigma(t) = t**k
    auto_shrink: bool = True

    def validate(self):
        if not 0 < self.delta < 0.5 - 1 / TWO_PI:
            raise MapDefinitionError("delta must lie in (0, 1/2 - 1/(2 pi))")
        if not 0 < self.eps <= 1:
            raise MapDefinitionError("eps must lie in (0, 1]")
        if not self.sharpness >= 1:
            raise MapDefinitionError("sharpness must be >= 1")


@dataclass(frozen=True)
class Regions:
    in_H: np.ndarray
    in_V: np.ndarray
    in_C: np.ndarray


def _frac_dist(t):
    return np.abs(t - np.round(t))


def region_membership(z) -> Regions:
    z = np.asarray(z, dtype=float).reshape(-1, 2)
    x, y = z[:, 0], z[:, 1]
    bh = np.abs(np.sin(np.pi * x)) / TWO_PI
    bv = np.abs(np.sin(np.pi * y)) / TWO_PI
    dy, dx = _frac_dist(y), _frac_dist(x)
    in_H = dy <= bh
    in_V = dx <= bv
    # C is the closure of the complement, so it shares the boundaries of H and V
    in_C = (dy >= bh) & (dx >= bv)
    return Regions(in_H, in_V, in_C)


def xi(z, k: float = 1.0):
    x, y = z[:, 0], z[:, 1]
    s = np.sin(np.pi * x)
    d = np.maximum(_frac_dist(y) - np.abs(s) / TWO_PI, 0.0)
    return s * s * d ** k


def eta(z, k: float = 1.0):
    x, y = z[:, 0], z[:, 1]
    t = np.maximum(np.abs(np.sin(np.pi * y)) / TWO_PI - _frac_dist(x), 0.0)
    return -(t ** k)


def strip_bump(y, delta: float):
    s = (y - np.floor(y) - 0.5) / delta
    return np.where(np.abs(s) < 1, (1 - s * s) ** 2, 0.0)


def _f_eps(eps, k):
    def ev(z):
        out = z.copy()
        out[:, 0] += eps * xi(z, k)
        out[:, 1] += eps * eta(z, k)
        return out
    return ev


def _newton_inverse(fwd, w, iters=60, h=1e-7):
    z = w.copy()
    for _ in range(iters):
        r = fwd(z) - w
        if np.abs(r).max() < 1e-14:
            break
        ex = (fwd(z + [h, 0]) - fwd(z - [h, 0])) / (2 * h)
        ey = (fwd(z + [0, h]) - fwd(z - [0, h])) / (2 * h)
        det = ex[:, 0] * ey[:, 1] - ey[:, 0] * ex[:, 1]
        dx = (ey[:, 1] * r[:, 0] - ey[:, 0] * r[:, 1]) / det
        dy = (-ex[:, 1] * r[:, 0] + ex[:, 0] * r[:, 1]) / det
        z = z - np.stack([dx, dy], axis=1)
    return z


def jacobian_margin(eps: float, k: float, n: int = 400, h: float = 1e-6) -> float:
    """Smallest sampled det D f_eps; positive on a dense grid means a local homeomorphism."""
    t = (np.arange(n) + 0.37) / n
    X, Y = np.meshgrid(t, t, indexing="ij")
    z = np.stack([X.ravel(), Y.ravel()], axis=1)
    f = _f_eps(eps, k)
    ex = (f(z + [h, 0]) - f(z - [h, 0])) / (2 * h)
    ey = (f(z + [0, h]) - f(z - [0, h])) / (2 * h)
    return float((ex[:, 0] * ey[:, 1] - ey[:, 0] * ex[:, 1]).min())


def resolve_params(params: DissipativeParams) -> DissipativeParams:
    params.validate()
    eps = params.eps
    while jacobian_margin(eps, params.sharpness) <= 0.05:
        if not params.auto_shrink:
            raise MapDefinitionError(f"f_eps is not invertible at eps={eps}")
        eps *= 0.8
    if eps == params.eps:
        return params
    return DissipativeParams(eps, params.delta, params.sharpness, params.auto_shrink)


def shear_amplitude(params: DissipativeParams) -> float:
    z1 = np.array([[X1, 0.5]])
    return 1.0 - params.eps * float(xi(z1, params.sharpness)[0])


def build_fH(params: DissipativeParams = DissipativeParams()) -> LiftedMap:
    params = resolve_params(params)
    eps, k, delta = params.eps, params.sharpness, params.delta
    amp = shear_amplitude(params)
    fe = _f_eps(eps, k)

    def ev(z):
        w = fe(z)
        w[:, 0] += amp * strip_bump(w[:, 1], delta)
        return w

    def inv(w):
        u = w.copy()
        u[:, 0] -= amp * strip_bump(u[:, 1], delta)
        return _newton_inverse(fe, u)

    return LiftedMap(ev, "example_dissipative.fH",
                     {"eps": eps, "delta": delta, "sharpness": k, "shear_amplitude": amp},
                     inv, None)


def build_fV(params: DissipativeParams = DissipativeParams()) -> LiftedMap:
    return swap_conjugate(build_fH(params), "example_dissipative.fV")


def z1_point() -> Vec2:
    return Vec2(X1, 0.5)


def build_example(params: DissipativeParams = DissipativeParams()) -> LiftedMap:
    params = resolve_params(params)
    fH = build_fH(params)
    fV = swap_conjugate(fH, "example_dissipative.fV")
    he, ve = fH.evaluator, fV.evaluator
    hi, vi = fH.inverse, fV.inverse
    hints = (
        PeriodicHint(Vec2(0.0, 0.0), RationalVector(0, 0, 1)),
        PeriodicHint(Vec2(X1, 0.5), RationalVector(1, 0, 1)),
        PeriodicHint(Vec2(0.5, X1), RationalVector(0, 1, 1)),
    )
    return LiftedMap(lambda z: ve(he(z)), "example_dissipative", dict(fH.params),
                     lambda w: hi(vi(w)), None, hints)


# -- heteroclinic orbit on the vertical line x = 0 ---------------------------

def axis_step(params: DissipativeParams):
    """The example restricted to {0} x (0, 1) outside the shear strip."""
    eps, k = params.eps, params.sharpness
    return lambda y: y - eps * (np.abs(np.sin(np.pi * y)) / TWO_PI) ** k


def _axis_inverse(step, y, lo=0.0, hi=1.0):
    a, b = np.full_like(y, lo), np.full_like(y, hi)
    for _ in range(80):
        m = 0.5 * (a + b)
        below = step(m) < y
        a = np.where(below, m, a)
        b = np.where(below, b, m)
    return 0.5 * (a + b)


@dataclass(frozen=True)
class HeteroclinicStart:
    z0: Vec2
    forward_hits: int
    backward_hits: int
    strip_gap: float
    orbit: tuple[float, ...] = field(repr=False, default=())


def find_heteroclinic_start(params: DissipativeParams = DissipativeParams(),
                            ball: float = 1e-3, max_iter: int = 100_000) -> HeteroclinicStart:
    """Start on {0} x (1/2 + delta, 1) whose orbit jumps over the strip once."""
    params = resolve_params(params)
    T = axis_step(params)
    # symmetric straddle: T(y0) - 1/2 = 1/2 - y0
    a, b = 0.5, 1.0
    for _ in range(200):
        m = 0.5 * (a + b)
        if T(np.array([m]))[0] - 0.5 + (m - 0.5) < 0:
            a = m
        else:
            b = m
    y0 = 0.5 * (a + b)
    fwd, y = [], y0
    while y > ball:
        y = float(T(np.array([y]))[0])
        fwd.append(y)
        if len(fwd) > max_iter:
            raise SearchFailed("forward orbit does not reach the lattice ball")
    bwd, y = [], y0
    while 1 - y > ball:
        y = float(_axis_inverse(T, np.array([y]))[0])
        bwd.append(y)
        if len(bwd) > max_iter:
            raise SearchFailed("backward orbit does not reach the lattice ball")
    orbit = tuple(reversed(bwd)) + (y0,) + tuple(fwd)
    gap = min(abs(t - 0.5) for t in orbit)
    if gap <= params.delta:
        raise SearchFailed(f"orbit enters the shear strip (gap {gap:.3g} <= delta); shrink delta")
    return HeteroclinicStart(Vec2(0.0, y0), len(fwd), len(bwd), gap, orbit)


# -- perturbations -----------------------------------------------------------

def lock_perturbation(f: LiftedMap, v) -> LiftedMap:
    vv = np.asarray(v, dtype=float).reshape(2)
    if not (vv[0] < 0 and vv[1] < 0):
        raise ValueError("lock vector must lie in the open negative cone")
    if np.hypot(*vv) > 0.05:
        raise ValueError("lock vector must have norm <= 0.05")
    return minus(f, vv)


@dataclass(frozen=True)
class ReturnPair:
    """Forward orbit of z0 reaches ``entry`` after q steps; the push must send it to
    ``exit`` = z0 + shift - (steps already taken) so that f'^q(z0) = z0 + shift."""

    z0: Vec2
    q: int
    entry: Vec2
    exit: Vec2
    shift: tuple[int, int]
    guards: tuple[Vec2, ...] = ()


def matched_axis_pair(params: DissipativeParams, push_radius: float,
                      ramp: float = 0.25) -> ReturnPair:
    """Orbit on the x = 0 axis from (0, 1 - r) to (0, r) in q steps, r as large as allowed.

    The push is a half-turn of inner radius r about the lattice point, with outer
    radius r (1 + ramp * gap) where gap is the relative distance to the
    neighbouring orbit points.
    """
    params = resolve_params(params)
    T = axis_step(params)

    def root_r(q):
        a, b = 1e-9, 0.5
        for _ in range(200):
            m = 0.5 * (a + b)
            y = np.array([1 - m])
            for _ in range(q):
                y = T(y)
            if y[0] - m > 0:
                a = m
            else:
                b = m
        return 0.5 * (a + b)

    for q in range(2, 2000):
        r = root_r(q)
        y_entry = 1 - r
        orbit = [y_entry]
        for _ in range(q):
            orbit.append(float(T(np.array([orbit[-1]]))[0]))
        prev = orbit[-2]
        nxt = 1 - float(T(np.array([1 - r]))[0])  # distance of f(exit) below the lattice
        outer = r + ramp * min(prev - r, nxt - r)
        if outer > push_radius:
            continue
        if min(abs(t - 0.5) for t in orbit) <= params.delta:
            continue
        return ReturnPair(Vec2(0.0, 1 - r), q, Vec2(0.0, orbit[-1]), Vec2(0.0, -r), (0, -1),
                          (Vec2(0.0, prev), Vec2(0.0, -nxt)))
    raise SearchFailed("no admissible return orbit below the push radius")


def swapped(pair: ReturnPair) -> ReturnPair:
    s = lambda v: Vec2(v[1], v[0])
    return ReturnPair(s(pair.z0), pair.q, s(pair.entry), s(pair.exit),
                      (pair.shift[1], pair.shift[0]), tuple(s(g) for g in pair.guards))


def half_turn_for(pairs, push_radius: float, ramp: float = 0.25) -> TwistSpec:
    """One half-turn about the common midpoint of every (entry, exit) pair."""
    mids = [0.5 * (np.array(p.entry) + np.array(p.exit)) for p in pairs]
    c = np.mean(mids, axis=0)
    if max(np.hypot(*(m - c)) for m in mids) > 1e-12:
        raise SupportOverlap("push pairs do not share a midpoint; supports would overlap")
    r_in = max(np.hypot(*(np.array(p.entry) - c)) for p in pairs)
    guard_r = min(np.hypot(*(np.array(g) - c)) for p in pairs for g in p.guards)
    if guard_r <= r_in:
        raise SupportOverlap("an orbit point lies inside the push disk")
    r_out = r_in + ramp * (guard_r - r_in)
    if r_out > push_radius:
        raise SupportOverlap(f"push support radius {r_out:.4g} exceeds {push_radius}")
    return TwistSpec((float(c[0]), float(c[1])), float(r_in), float(r_out), math.pi)


def return_residual(fmap: LiftedMap, pair: ReturnPair) -> float:
    z = np.array([pair.z0], dtype=float)
    for _ in range(pair.q):
        z = fmap(z)
    return float(np.hypot(*(z[0] - np.array(pair.z0) - np.array(pair.shift))))


def unlock_perturbation(f: LiftedMap, pairs, push_radius: float, ramp: float = 0.25,
                        residual_tol: float = 1e-9) -> LiftedMap:
    """Compose f with a half-turn near the lattice closing each heteroclinic orbit.

    The returned map carries periodic hints for the closed orbits (and keeps the
    hints of f that still verify).
    """
    spec = half_turn_for(pairs, push_radius, ramp)
    tev, tinv = twist_many([spec])
    fe, fi = f.evaluator, f.inverse
    inv = (lambda w: fi(tinv(w))) if fi is not None else None
    g = LiftedMap(lambda z: tev(fe(z)), f"unlock({f.name})",
                  {"push": spec, "q": tuple(p.q for p in pairs)}, inv, None)
    hints = []
    for p in pairs:
        res = return_residual(g, p)
        if res > residual_tol:
            raise SearchFailed(f"closed orbit misses by {res:.3g}")
        hints.append(PeriodicHint(p.z0, RationalVector(p.shift[0], p.shift[1], p.q)))
    hints.extend(f.periodic_hints)
    return g.with_hints(hints)


def build_unlocked(params: DissipativeParams = DissipativeParams(), push_radius: float = 0.02):
    params = resolve_params(params)
    f = build_example(params)
    pair = matched_axis_pair(params, push_radius)
    return unlock_perturbation(f, [pair, swapped(pair)], push_radius), pair
