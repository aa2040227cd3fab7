"""Area-preserving example with a single fixed point whose unlocking keeps the area.

The horizontal piece is f_H = g1 o g o f1 where
  * f1 = h o f0 o h^-1 on the strip and the identity on H, with f0 a horizontal
    shear of the strip fixing its boundary and h an area-preserving chart from
    the strip onto the complement of H;
  * g is a family of half-turns in thin ellipses D_k that carries f1(0, y_k)
    onto (0, y_{k+1}), creating a heteroclinic orbit from (0, 1) to (0, 0);
  * g1 is a horizontal shear supported in a narrow band a < y < b.
The example is f = f_V o f_H with f_V the coordinate-swap conjugate of f_H.

Throughout, H = {dist(y, Z) <= 2 alpha dist(x, Z)} and V is its mirror image.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import ndimage

from .geometry import Vec2
from .maps import (LiftedMap, MapDefinitionError, PeriodicHint, RationalVector, TwistSpec,
                   swap_conjugate)


class DiskPackingFailed(RuntimeError):
    def __init__(self, k: int, reason: str):
        super().__init__(f"disk D_{k}: {reason}")
        self.k = k


class UnsupportedMap(ValueError):
    pass


# -- parameters --------------------------------------------------------------

def chain_height(k, beta: float):
    k = np.asarray(k)
    return np.where(k >= 0, 0.5 * beta ** np.abs(k), 1 - 0.5 * beta ** np.abs(k))


def default_truncation(beta: float, reach: float = 1e-6) -> int:
    """Smallest K with 0.5 beta^K <= reach."""
    return int(math.ceil(math.log(2 * reach) / math.log(beta)))


@dataclass(frozen=True)
class ConservativeParams:
    alpha: float = 0.1
    beta: float = 0.87
    a: float = 0.51
    b: float = 0.55
    c: float = 0.53
    disk_radius_fraction: float = 0.15
    aspect: float = 4.0
    phi_sharpness: float = 2.0
    K: Optional[int] = None

    @property
    def truncation(self) -> int:
        return self.K if self.K is not None else default_truncation(self.beta)

    def validate(self):
        if not 0 < self.alpha <= 0.1:
            raise MapDefinitionError("alpha must lie in (0, 1/10]")
        if not 0 < self.beta < 1:
            raise MapDefinitionError("beta must lie in (0, 1)")
        top = min(float(chain_height(-1, self.beta)), 1 - self.alpha)
        if not 0.5 < self.a < self.c < self.b < top:
            raise MapDefinitionError(f"need 1/2 < a < c < b < {top:.6g}")
        if not self.disk_radius_fraction > 0 or not self.aspect >= 1:
            raise MapDefinitionError("disk_radius_fraction must be > 0 and aspect >= 1")
        if self.truncation < 2:
            raise MapDefinitionError("chain truncation K must be >= 2")


# -- theta and the chart h -----------------------------------------------------

def domain_period(alpha: float) -> float:
    return 1.0 - alpha


def width(y, alpha: float):
    """Half-width of V at height y, alpha (1 - |2y - 1|)."""
    return alpha * (1 - np.abs(2 * np.asarray(y, dtype=float) - 1))


def _shoelace(*pts):
    s = 0.0
    for (x0, y0), (x1, y1) in zip(pts, pts[1:] + pts[:1]):
        s = s + x0 * y1 - x1 * y0
    return 0.5 * s


def quad_areas(y, t, alpha: float):
    """Signed areas of the domain and image quadrilaterals at height y, apex height t."""
    w = width(y, alpha)
    p = 0.5 * domain_period(alpha)
    dom = _shoelace((alpha, 0.5), (p, 0.5), (p, y), (w, y))
    img = _shoelace((alpha, 0.5), (0.5, 0.5), (0.5, t), (w, y))
    return dom, img


def theta(y, alpha: float):
    """Apex height making the two quadrilaterals equal in area (the image one is affine in it)."""
    y = np.asarray(y, dtype=float)
    if np.any((y < 0) | (y > 1)):
        raise ValueError("theta is defined on [0, 1]")
    dom, i0 = quad_areas(y, 0.0, alpha)
    _, i1 = quad_areas(y, 1.0, alpha)
    return (dom - i0) / (i1 - i0)


def _lower(y, alpha):
    """w, w', theta - y, theta' for y <= 1/2, in closed form."""
    d = 1 - 4 * alpha * y
    return (2 * alpha * y, 2 * alpha, alpha * (1 - 2 * y) / d,
            1 + alpha * (4 * alpha - 2) / (d * d))


def _leg_coeffs(y, alpha):
    w, dw, gap, dth = _lower(y, alpha)
    A = (0.5 - w) - gap * dw
    B = (0.5 - w) * (dth - 1) + gap * dw
    return w, gap, A, B


def _leg_forward(x, y, alpha):
    # left leg, y <= 1/2: x = w + A s + B s^2 / 2 along (w, y) -> (1/2, theta)
    w, gap, A, B = _leg_coeffs(y, alpha)
    u = np.maximum(x - w, 0.0)
    s = 2 * u / (A + np.sqrt(np.maximum(A * A + 2 * B * u, 0.0)))
    return w + s * (0.5 - w), y + s * gap


def _leg_inverse(X, Y, alpha, iters=60):
    # root in [0, Y] of (Y - y)(1 - 4 a y)^2 - 2 a (X - 2 a y)(1 - 2 y)
    a = alpha

    def F(y, X, Y):
        return (Y - y) * (1 - 4 * a * y) ** 2 - 2 * a * (X - 2 * a * y) * (1 - 2 * y)

    def dF(y, X, Y):
        d = 1 - 4 * a * y
        return -d * d - 8 * a * (Y - y) * d + 4 * a * a * (1 - 2 * y) + 4 * a * (X - 2 * a * y)

    lo, hi = np.zeros_like(Y), Y.copy()
    y = 0.5 * (lo + hi)
    act = np.arange(len(Y))
    for _ in range(iters):
        yy, XX, YY = y[act], X[act], Y[act]
        f = F(yy, XX, YY)
        pos = f > 0
        lo[act] = np.where(pos, yy, lo[act])
        hi[act] = np.where(pos, hi[act], yy)
        step = yy - f / dF(yy, XX, YY)
        ok = (step >= lo[act]) & (step <= hi[act])
        new = np.where(f == 0, yy, np.where(ok, step, 0.5 * (lo[act] + hi[act])))
        y[act] = new
        # F is only known to ~1e-16 absolutely, so demand no more of y
        moving = np.abs(new - yy) > 1e-15
        act = act[moving & (hi[act] - lo[act] > 0)]
        if not len(act):
            break
    w, gap, A, B = _leg_coeffs(y, alpha)
    s = np.where(0.5 - w > 0, (X - w) / (0.5 - w), 0.0)
    s = np.clip(s, 0.0, 1.0)
    return w + A * s + 0.5 * B * s * s, y


def h_map(z, alpha: float) -> np.ndarray:
    """The chart from R x [0, 1] onto the closure of (V u C) in the strip."""
    z = np.asarray(z, dtype=float).reshape(-1, 2)
    x, y = z[:, 0], z[:, 1]
    if np.any((y < 0) | (y > 1)) or not np.all(np.isfinite(z)):
        raise MapDefinitionError("h is defined on R x [0, 1]")
    P = domain_period(alpha)
    upper = y > 0.5
    yl = np.where(upper, 1 - y, y)
    w = width(yl, alpha)
    k = np.floor((x + w) / P)
    xr = x - k * P
    out = np.empty_like(z)
    inV = xr <= w
    out[inV, 0] = xr[inV] + k[inV]
    out[inV, 1] = yl[inV]
    C = ~inV
    right = C & (xr > 0.5 * P)
    xl = np.where(right, P - xr, xr)
    X, Y = _leg_forward(xl[C], yl[C], alpha)
    out[C, 0] = np.where(right[C], 1 - X, X) + k[C]
    out[C, 1] = Y
    out[upper, 1] = 1 - out[upper, 1]
    return out


def in_H(z, alpha: float) -> np.ndarray:
    z = np.asarray(z, dtype=float).reshape(-1, 2)
    dx = np.abs(z[:, 0] - np.round(z[:, 0]))
    dy = np.abs(z[:, 1] - np.round(z[:, 1]))
    return dy <= 2 * alpha * dx


def h_inverse(z, alpha: float) -> np.ndarray:
    z = np.asarray(z, dtype=float).reshape(-1, 2)
    X, Y = z[:, 0], z[:, 1]
    if np.any((Y < 0) | (Y > 1)) or not np.all(np.isfinite(z)):
        raise MapDefinitionError("h^-1 is defined on the strip R x [0, 1]")
    dx = np.abs(X - np.round(X))
    dy = np.minimum(Y, 1 - Y)
    if np.any(dy < 2 * alpha * dx * (1 - 1e-12) - 1e-15):
        raise MapDefinitionError("point lies in the interior of H, outside the image of h")
    P = domain_period(alpha)
    upper = Y > 0.5
    Yl = np.where(upper, 1 - Y, Y)
    w = width(Yl, alpha)
    out = np.empty_like(z)
    k = np.round(X)
    inV = np.abs(X - k) <= w
    out[inV, 0] = X[inV] - k[inV] + k[inV] * P
    out[inV, 1] = Yl[inV]
    C = ~inV
    k = np.floor(X)
    xr = X - k
    right = C & (xr > 0.5)
    Xl = np.where(right, 1 - xr, xr)
    x, y = _leg_inverse(Xl[C], Yl[C], alpha)
    out[C, 0] = np.where(right[C], P - x, x) + k[C] * P
    out[C, 1] = y
    out[upper, 1] = 1 - out[upper, 1]
    return out


def f0(z, alpha: float, sign: float = 1.0) -> np.ndarray:
    z = np.asarray(z, dtype=float).reshape(-1, 2).copy()
    z[:, 0] += sign * 0.5 * width(z[:, 1], alpha)
    return z


def _f1_eval(alpha: float, sign: float):
    def ev(z):
        z = np.asarray(z, dtype=float).reshape(-1, 2)
        out = z.copy()
        move = ~in_H(z, alpha)
        if not move.any():
            return out
        zm = z[move]
        ky = np.floor(zm[:, 1])
        strip = zm - np.stack([np.zeros_like(ky), ky], axis=1)
        img = h_map(f0(h_inverse(strip, alpha), alpha, sign), alpha)
        img[:, 1] += ky
        out[move] = img
        return out
    return ev


def build_f1(alpha: float) -> LiftedMap:
    if not 0 < alpha <= 0.1:
        raise MapDefinitionError("alpha must lie in (0, 1/10]")
    return LiftedMap(_f1_eval(alpha, 1.0), "example_conservative.f1", {"alpha": alpha},
                     _f1_eval(alpha, -1.0), None)


# -- heteroclinic chain -------------------------------------------------------

@dataclass(frozen=True)
class HeteroclinicChain:
    ks: tuple[int, ...]
    heights: tuple[float, ...]
    specs: tuple[TwistSpec, ...]
    alpha: float
    beta: float

    def height(self, k: int) -> float:
        return self.heights[self.ks.index(k)]

    def segment(self, k: int) -> tuple[Vec2, Vec2]:
        """gamma_k, from f1(0, y_k) to (0, y_{k+1})."""
        y0, y1 = float(chain_height(k, self.beta)), float(chain_height(k + 1, self.beta))
        return Vec2(0.5 * float(width(y0, self.alpha)), y0), Vec2(0.0, y1)


def build_chain(alpha: float, beta: float, K: int, radius_fraction: float = 0.15,
                aspect: float = 4.0, inner_pad: float = 0.02) -> HeteroclinicChain:
    """Half-turn twists about the midpoints of gamma_k, in ellipses stretched along gamma_k."""
    if K < 2:
        raise MapDefinitionError("chain truncation K must be >= 2")
    ks = tuple(range(-K, K + 1))
    specs = []
    for k in ks:
        y0, y1 = float(chain_height(k, beta)), float(chain_height(k + 1, beta))
        p1 = np.array([0.5 * float(width(y0, alpha)), y0])
        p2 = np.array([0.0, y1])
        m = 0.5 * (p1 + p2)
        d = p1 - p2
        half = 0.5 * math.hypot(*d)
        r_in = half * (1 + inner_pad) / aspect
        specs.append(TwistSpec((float(m[0]), float(m[1])), r_in, r_in * (1 + radius_fraction),
                               math.pi, math.atan2(d[1], d[0]), aspect))
    heights = tuple(float(chain_height(k, beta)) for k in ks)
    return HeteroclinicChain(ks, heights, tuple(specs), alpha, beta)


class _TwistFamily:
    """Vectorised evaluator for many disjoint twists, each point tested only
    against the few supports whose height range can contain it."""

    def __init__(self, specs, sign: float):
        self.sign = sign
        self.c = np.array([s.center for s in specs])
        frames = [s.frame() for s in specs]
        self.L = np.array([f[0] for f in frames])
        self.Li = np.array([f[1] for f in frames])
        self.ri = np.array([s.r_inner for s in specs])
        self.ro = np.array([s.r_outer for s in specs])
        self.ang = np.array([s.angle for s in specs])
        ext = np.array([self._vertical_extent(s) for s in specs])
        self.lo = self.c[:, 1] - ext
        self.hi = self.c[:, 1] + ext
        self.xmax = float(np.max(np.abs(self.c[:, 0]) + ext))
        order = np.argsort(self.lo)
        self.order = order
        self.lo_sorted = self.lo[order]
        self.hi_run = np.maximum.accumulate(self.hi[order])

    @staticmethod
    def _vertical_extent(s: TwistSpec) -> float:
        A, B = s.semi_axes()
        return math.hypot(A * math.sin(s.direction), B * math.cos(s.direction))

    def __call__(self, z):
        z = np.asarray(z, dtype=float).reshape(-1, 2)
        out = z.copy()
        u = z - np.round(z)
        yf = z[:, 1] - np.floor(z[:, 1])
        near = np.abs(u[:, 0]) <= self.xmax
        if not near.any():
            return out
        idx = np.flatnonzero(near)
        ys = yf[idx]
        # supports are disjoint, so at most a handful overlap any height band
        j = np.searchsorted(self.lo_sorted, ys, side="right") - 1
        done = np.zeros(len(idx), dtype=bool)
        for off in range(0, 4):
            jj = j - off
            valid = (jj >= 0) & ~done
            if not valid.any():
                break
            cand = self.order[np.clip(jj, 0, None)]
            valid &= ys <= self.hi[cand]
            if not valid.any():
                continue
            pi_, ci = idx[valid], cand[valid]
            loc = z[pi_] - self.c[ci]
            loc[:, 1] -= np.floor(z[pi_, 1])
            loc[:, 0] -= np.round(z[pi_, 0])
            w = np.einsum("nij,nj->ni", self.Li[ci], loc)
            r = np.hypot(w[:, 0], w[:, 1])
            inside = r < self.ro[ci]
            if not inside.any():
                continue
            ramp = np.clip((self.ro[ci] - r) / (self.ro[ci] - self.ri[ci]), 0.0, 1.0)
            a = self.sign * self.ang[ci] * ramp
            ca, sa = np.cos(a), np.sin(a)
            wr = np.stack([ca * w[:, 0] - sa * w[:, 1], sa * w[:, 0] + ca * w[:, 1]], axis=1)
            delta = np.einsum("nij,nj->ni", self.L[ci], wr - w)
            tgt = pi_[inside]
            out[tgt] = z[tgt] + delta[inside]
            sub = np.flatnonzero(valid)
            done[sub[inside]] = True
        return out


def _ellipse_points(spec: TwistSpec, n: int, radii=(1.0,)) -> np.ndarray:
    L, _ = spec.frame()
    t = 2 * np.pi * np.arange(n) / n
    pts = []
    for fr in radii:
        r = spec.r_outer * fr
        circ = r * np.stack([np.cos(t), np.sin(t)], axis=1)
        pts.append(circ @ L.T + np.array(spec.center))
    return np.concatenate(pts)


def _ellipse_radius(spec: TwistSpec, z) -> np.ndarray:
    _, Li = spec.frame()
    w = (z - np.array(spec.center)) @ Li.T
    return np.hypot(w[:, 0], w[:, 1])


def check_packing(chain: HeteroclinicChain, f1: LiftedMap, samples: int = 256) -> None:
    """Verify the disk conditions on samples; raises DiskPackingFailed."""
    specs = chain.specs
    for i, (k, s) in enumerate(zip(chain.ks, specs)):
        rim = _ellipse_points(s, samples)
        for j in (i + 1, i + 2):
            if j < len(specs):
                if np.any(_ellipse_radius(specs[j], rim) <= specs[j].r_outer) or np.any(
                        _ellipse_radius(s, _ellipse_points(specs[j], samples)) <= s.r_outer):
                    raise DiskPackingFailed(k, f"meets D_{chain.ks[j]}")
        body = _ellipse_points(s, samples, radii=(1.0, 0.75, 0.5, 0.25))
        body = np.concatenate([body, np.array([s.center])])
        if np.any(_ellipse_radius(s, f1(body)) <= s.r_outer):
            raise DiskPackingFailed(k, "meets its own image under f1")
        pre = f1.inverse(rim)
        gap = np.max(rim[:, 1] - rim[:, 0]) + np.max(pre[:, 0] - pre[:, 1])
        if not gap < 0:
            raise DiskPackingFailed(k, "a vector from f1^-1(D_k) to D_k leaves the half-plane y < x")
    lo = [s.center[1] - _TwistFamily._vertical_extent(s) for s in specs]
    hi = [s.center[1] + _TwistFamily._vertical_extent(s) for s in specs]
    for i in range(len(specs) - 3):
        if hi[i + 3] >= lo[i]:
            raise DiskPackingFailed(chain.ks[i], "height band overlaps a distant disk")


def apply_chain(f1: LiftedMap, chain: HeteroclinicChain) -> LiftedMap:
    fwd, bwd = _TwistFamily(chain.specs, 1.0), _TwistFamily(chain.specs, -1.0)
    e, i = f1.evaluator, f1.inverse
    return LiftedMap(lambda z: fwd(e(z)), "example_conservative.f2",
                     dict(f1.params, beta=chain.beta, K=max(chain.ks)),
                     lambda w: i(bwd(w)), None)


# -- the shear and the assembled example --------------------------------------

def phi(y, params: ConservativeParams):
    """Bump supported in (a, b) with the prescribed value at c."""
    a, b, c, al = params.a, params.b, params.c, params.alpha
    peak = 1 - al / 2 + al * (c - 0.5)
    yf = np.asarray(y, dtype=float) - np.floor(y)
    s = np.where(yf < c, (yf - c) / (c - a), (yf - c) / (b - c))
    return np.where(np.abs(s) < 1, peak * np.clip(1 - s * s, 0, None) ** params.phi_sharpness, 0.0)


def z1_point(params: ConservativeParams) -> Vec2:
    al, c = params.alpha, params.c
    return Vec2(al / 2 - al * (c - 0.5), c)


def build_fH_conservative(params: ConservativeParams = ConservativeParams(),
                          check: bool = True) -> LiftedMap:
    params.validate()
    f1 = build_f1(params.alpha)
    chain = build_chain(params.alpha, params.beta, params.truncation,
                        params.disk_radius_fraction, params.aspect)
    if check:
        check_packing(chain, f1)
    f2 = apply_chain(f1, chain)
    e2, i2 = f2.evaluator, f2.inverse

    def ev(z):
        w = e2(z)
        w[:, 0] += phi(w[:, 1], params)
        return w

    def inv(w):
        u = np.array(w, dtype=float).reshape(-1, 2)
        u[:, 0] -= phi(u[:, 1], params)
        return i2(u)

    fH = LiftedMap(ev, "example_conservative.fH",
                   {"alpha": params.alpha, "beta": params.beta, "a": params.a, "b": params.b,
                    "c": params.c, "K": params.truncation}, inv, None)
    if check:
        z1 = np.array([z1_point(params)])
        if np.abs(fH(z1) - z1 - [1.0, 0.0]).max() > 1e-12:
            raise DiskPackingFailed(-1, "a disk disturbs the orbit of z1")
    return fH


def build_example_conservative(params: ConservativeParams = ConservativeParams(),
                               check: bool = True) -> LiftedMap:
    fH = build_fH_conservative(params, check)
    fV = swap_conjugate(fH, "example_conservative.fV")
    he, ve, hi, vi = fH.evaluator, fV.evaluator, fH.inverse, fV.inverse
    z1 = z1_point(params)
    hints = (
        PeriodicHint(Vec2(0.0, 0.0), RationalVector(0, 0, 1)),
        PeriodicHint(z1, RationalVector(1, 0, 1)),
        PeriodicHint(Vec2(z1.y, z1.x), RationalVector(0, 1, 1)),
    )
    return LiftedMap(lambda z: ve(he(z)), "example_conservative", dict(fH.params),
                     lambda w: hi(vi(w)), None, hints)


def chain_pair(params: ConservativeParams, push_radius: float, ramp: float = 0.25):
    """Heteroclinic orbit (0, y_-N) -> (0, y_N) in 2N steps, closed by a half-turn at 0."""
    from .dissipative import ReturnPair  # shared with the dissipative unlock

    beta = params.beta
    for N in range(1, params.truncation):
        r = 0.5 * beta ** N
        guard = 0.5 * beta ** (N - 1)
        if r + ramp * (guard - r) <= push_radius:
            return ReturnPair(Vec2(0.0, 1 - r), 2 * N, Vec2(0.0, r), Vec2(0.0, -r), (0, -1),
                              (Vec2(0.0, guard), Vec2(0.0, -guard)))
    raise MapDefinitionError("no chain orbit fits inside the push radius")


def build_unlocked_conservative(params: ConservativeParams = ConservativeParams(),
                                push_radius: float = 0.02):
    from .dissipative import swapped, unlock_perturbation

    f = build_example_conservative(params)
    pair = chain_pair(params, push_radius)
    return unlock_perturbation(f, [pair, swapped(pair)], push_radius), pair


# -- area preservation ------------------------------------------------------

@dataclass(frozen=True)
class AreaReport:
    max_defect: float
    worst_box: tuple[float, float]
    max_sigma: float
    n_boxes: int
    box: float


def _box_boundary(x0, y0, s, n):
    t = np.arange(n) / n
    o = np.zeros(n)
    return np.concatenate([
        np.stack([x0 + s * t, y0 + o], 1), np.stack([x0 + s + o, y0 + s * t], 1),
        np.stack([x0 + s - s * t, y0 + s + o], 1), np.stack([x0 + o, y0 + s - s * t], 1)])


def _dense_image(fmap, x0, y0, s, cell, max_rounds=24):
    pts = _box_boundary(x0, y0, s, 256)
    img = fmap(pts)
    for _ in range(max_rounds):
        nxt_pts, nxt_img = np.roll(pts, -1, 0), np.roll(img, -1, 0)
        gap = np.hypot(*(nxt_img - img).T)
        bad = np.flatnonzero(gap > 0.25 * cell)
        if not len(bad):
            return img
        mid = 0.5 * (pts[bad] + nxt_pts[bad])
        pts = np.insert(pts, bad + 1, mid, axis=0)
        img = np.insert(img, bad + 1, fmap(mid), axis=0)
    return img


def _box_area(fmap, inv, x0, y0, s, cell_frac, per_cell, rng):
    cell = s * cell_frac
    img = _dense_image(fmap, x0, y0, s, cell)
    lo = img.min(axis=0) - 2 * cell
    n = np.ceil((img.max(axis=0) + 2 * cell - lo) / cell).astype(int)
    idx = np.floor((img - lo) / cell).astype(int)
    edge = np.zeros(n, dtype=bool)
    edge[idx[:, 0], idx[:, 1]] = True
    # every 4-connected run of untouched cells lies wholly inside or outside f(B)
    labels, n_comp = ndimage.label(~edge)
    flat = labels.ravel()
    _, first = np.unique(flat, return_index=True)
    first = first[flat[first] > 0]
    reps = np.stack(np.unravel_index(first, labels.shape), 1)
    pre = inv(lo + cell * (reps + 0.5))
    inside = np.zeros(n_comp + 1, dtype=bool)
    inside[flat[first]] = ((pre[:, 0] >= x0) & (pre[:, 0] < x0 + s) &
                           (pre[:, 1] >= y0) & (pre[:, 1] < y0 + s))
    interior = inside[labels]
    ex = np.argwhere(edge)
    m = int(round(math.sqrt(per_cell)))
    g = (np.arange(m) + 0.0) / m
    gx, gy = np.meshgrid(g, g, indexing="ij")
    base = np.stack([gx.ravel(), gy.ravel()], 1)
    jit = rng.random((len(ex), m * m, 2)) / m
    pts = lo + cell * (ex[:, None, :] + base[None] + jit)
    pre = inv(pts.reshape(-1, 2)).reshape(len(ex), m * m, 2)
    hit = ((pre[..., 0] >= x0) & (pre[..., 0] < x0 + s) &
           (pre[..., 1] >= y0) & (pre[..., 1] < y0 + s))
    frac = hit.mean(axis=1)
    area = cell * cell * (interior.sum() + frac.sum())
    sigma = cell * cell * math.sqrt(float(np.sum(frac * (1 - frac))) / (m * m))
    return area, sigma


def area_preservation_check(fmap: LiftedMap, n_boxes: int = 1000, samples_per_box: int = 16,
                            seed: int = 0, box: float = 0.05, cell_frac: float = 1 / 64,
                            workers: int = 1) -> AreaReport:
    """Largest relative area change over random boxes.

    The image of each box is covered by a grid of cells.  Cells crossed by the
    densely sampled image of the box boundary are measured by stratified
    sampling through the inverse map (``samples_per_box`` points per cell).
    The remaining cells split into connected runs that the boundary does not
    enter, and one inverse evaluation decides whether a whole run is inside.
    """
    if fmap.inverse is None:
        raise UnsupportedMap("area check needs an inverse map")
    ss = np.random.SeedSequence(seed)
    corners = np.random.default_rng(ss).random((n_boxes, 2))
    rngs = [np.random.default_rng(c) for c in ss.spawn(n_boxes)]

    def one(i):
        a, sig = _box_area(fmap, fmap.inverse, corners[i, 0], corners[i, 1], box,
                           cell_frac, samples_per_box, rngs[i])
        return abs(a - box * box) / (box * box), sig / (box * box)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            res = list(pool.map(one, range(n_boxes)))
    else:
        res = [one(i) for i in range(n_boxes)]
    d = np.array([r[0] for r in res])
    i = int(d.argmax())
    return AreaReport(float(d[i]), (float(corners[i, 0]), float(corners[i, 1])),
                      float(max(r[1] for r in res)), n_boxes, box)
