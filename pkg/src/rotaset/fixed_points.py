"""Fixed points of f^q - (p, r): subdivision search, winding-number index, trivializability probe."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .geometry import Vec2
from .maps import LiftedMap, RationalVector

# corners then edge midpoints of a square cell, in units of its half side
_RING = np.array([[-1, -1], [1, -1], [1, 1], [-1, 1], [0, -1], [1, 0], [0, 1], [-1, 0]], dtype=float)
_CHILDREN = np.array([[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]], dtype=float)


class NearZeroOnCircle(RuntimeError):
    """The displacement gets too close to zero on the index circle."""


@dataclass(frozen=True)
class FixedPointRecord:
    z: Vec2
    rho: RationalVector
    residual: float
    index: Optional[int] = None


@dataclass(frozen=True)
class Cell:
    center: Vec2
    half: float


@dataclass
class FixedPointSearch:
    records: list[FixedPointRecord]
    unresolved: list[Cell]
    budget_exhausted: bool = False

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)


def displacement(fmap: LiftedMap, rho: RationalVector) -> Callable[[np.ndarray], np.ndarray]:
    """g(z) = f^q(z) - z - (p, r), vectorised.

    g is Z^2-periodic, so it is evaluated at the representative of z nearest
    the origin; that keeps full precision at points close to the lattice.
    """
    shift = rho.shift
    ev = fmap.evaluator

    def g(z):
        z = z - np.round(z)
        w = z
        for _ in range(rho.q):
            w = ev(w)
        return w - z - shift

    return g


def torus_distance(a, b) -> np.ndarray:
    d = np.asarray(a, float) - np.asarray(b, float)
    d = d - np.round(d)
    return np.hypot(d[..., 0], d[..., 1])


_AXES = np.array([[1, 0], [0, 1], [-1, 0], [0, -1]], dtype=float)


def _half_plane_score(gc: np.ndarray, gk: np.ndarray, safety: float) -> np.ndarray:
    """Best over directions n of  min <g, n>  minus  safety * max |<e, n>|.

    ``gk`` holds g at the four corners then the four edge midpoints, and the e
    are the departures of the midpoints and center from bilinear interpolation.
    A positive score means the samples sit in an open half-plane by more than
    the curvature seen along that direction.
    """
    corners, mids = gk[:, :4], gk[:, 4:]
    dev = np.concatenate([mids - 0.5 * (corners + np.roll(corners, -1, axis=1)),
                          (gc - corners.mean(axis=1))[:, None, :]], axis=1)
    allg = np.concatenate([gc[:, None, :], gk], axis=1)
    cand = np.concatenate([allg, allg.mean(axis=1, keepdims=True),
                           np.broadcast_to(_AXES, (len(gc), 4, 2))], axis=1)
    norm = np.hypot(cand[..., 0], cand[..., 1])
    n = cand / np.where(norm > 0, norm, 1.0)[..., None]
    low = np.einsum("nkd,njd->nkj", n, allg).min(axis=2)
    curv = np.abs(np.einsum("nkd,njd->nkj", n, dev)).max(axis=2)
    return (low - safety * curv).max(axis=1)


def find_fixed_points(fmap: LiftedMap, rho: RationalVector, cell: float = 0.05,
                      tol: float = 1e-9, max_cells: int = 400_000,
                      safety: float = 2.0) -> FixedPointSearch:
    """Locate zeros of g = f^q - Id - (p, r) in the fundamental domain.

    A cell is discarded when either
      * |g(center)| exceeds a Lipschitz bound times its half-diagonal (the map's
        ``lipschitz_bound`` if set, else ``safety`` times the largest sampled
        variation of g over the cell), or
      * the sampled values of g lie in an open half-plane with a margin above
        ``safety`` times their departure from bilinear interpolation, measured
        along the half-plane normal, and none of them is zero to rounding.
    The second test resolves degenerate zeros whose displacement vanishes to
    high order along some direction.  Cells refined down to diameter ``tol``
    are recorded when |g| <= tol there; the others are UNRESOLVED unless they
    lie within ``cell`` of a record.
    """
    if not 0 < cell <= 0.1:
        raise ValueError("cell must lie in (0, 0.1]")
    if not tol > 0:
        raise ValueError("tol must be positive")
    g = displacement(fmap, rho)
    eps_g = np.finfo(float).eps * rho.q
    lip_g = None
    if fmap.lipschitz_bound is not None:
        lip_g = fmap.lipschitz_bound ** rho.q + 1.0

    n0 = int(math.ceil(1.0 / cell))
    half = 0.5 / n0
    idx = (np.arange(n0) + 0.5) / n0
    cx, cy = np.meshgrid(idx, idx, indexing="ij")
    centers = np.stack([cx.ravel(), cy.ravel()], axis=1)

    found_z, found_res = [], []
    leftover: list[np.ndarray] = []
    leftover_half = half
    exhausted = False
    while len(centers):
        if len(centers) > max_cells:
            exhausted = True
            leftover.append(centers)
            leftover_half = half
            break
        gc = g(centers)
        norm_c = np.hypot(gc[:, 0], gc[:, 1])
        ring = (centers[:, None, :] + half * _RING[None]).reshape(-1, 2)
        gk = g(ring).reshape(-1, 8, 2)
        if lip_g is not None:
            bound = lip_g * half * math.sqrt(2)
        else:
            bound = safety * np.hypot(*(gk - gc[:, None, :]).transpose(2, 0, 1)).max(axis=1)
        # a sample where g is zero up to rounding may carry the wrong sign, so a
        # cell touching one is never cleared by the half-plane test
        norms = np.hypot(gk[..., 0], gk[..., 1])
        low = np.minimum(norms.min(axis=1), norm_c)
        high = np.maximum(norms.max(axis=1), norm_c)
        touching = low <= np.minimum(eps_g, 1e-6 * high)
        cleared = (_half_plane_score(gc, gk, safety) > 0) & ~touching
        alive = ~((norm_c > bound) | cleared)
        if half * math.sqrt(2) <= tol:
            hit = alive & (norm_c <= tol)
            found_z.append(centers[hit])
            found_res.append(norm_c[hit])
            leftover.append(centers[alive & ~hit])
            leftover_half = half
            break
        centers = (centers[alive][:, None, :] + half * _CHILDREN[None]).reshape(-1, 2)
        half *= 0.5

    records = _dedup(found_z, found_res, rho, cell)
    unresolved = []
    if leftover:
        rest = np.concatenate(leftover)
        if records and len(rest):
            rz = np.array([r.z for r in records])
            near = (torus_distance(rest[:, None, :], rz[None]) < cell).any(axis=1)
            rest = rest[~near]
        unresolved = [Cell(Vec2(*c), leftover_half) for c in rest.tolist()]
    return FixedPointSearch(records, unresolved, exhausted)


def _dedup(found_z, found_res, rho, radius) -> list[FixedPointRecord]:
    if not found_z:
        return []
    z = np.concatenate(found_z)
    res = np.concatenate(found_res)
    z = z - np.floor(z)
    order = np.lexsort((z[:, 1], z[:, 0], res))
    kept: list[int] = []
    for i in order:
        if all(torus_distance(z[i], z[j]) >= radius for j in kept):
            kept.append(int(i))
    kept.sort(key=lambda i: (z[i, 0], z[i, 1]))
    return [FixedPointRecord(Vec2(float(z[i, 0]), float(z[i, 1])), rho, float(res[i]))
            for i in kept]


def winding_number(g: Callable[[np.ndarray], np.ndarray], center, radius: float,
                   samples: int = 64, max_depth: int = 40, ratio: float = 0.1) -> int:
    """Degree of theta -> g(center + radius e^{i theta}) around the origin.

    Arcs are bisected until the displacement varies by at most ``ratio`` times
    its smaller endpoint norm, which keeps every angle increment far below pi/2.
    """
    c = np.asarray(center, dtype=float).reshape(2)

    def at(theta):
        pts = c + radius * np.stack([np.cos(theta), np.sin(theta)], axis=1)
        return g(pts)

    t0 = 2 * np.pi * np.arange(samples) / samples
    t1 = t0 + 2 * np.pi / samples
    g0, g1 = at(t0), at(t1)
    total = 0.0
    for _ in range(max_depth + 1):
        n0 = np.hypot(g0[:, 0], g0[:, 1])
        n1 = np.hypot(g1[:, 0], g1[:, 1])
        dg = np.hypot(*(g1 - g0).T)
        ok = dg <= ratio * np.minimum(n0, n1)
        a0 = np.arctan2(g0[ok, 1], g0[ok, 0])
        a1 = np.arctan2(g1[ok, 1], g1[ok, 0])
        total += float(np.sum(np.angle(np.exp(1j * (a1 - a0)))))
        if ok.all():
            w = total / (2 * np.pi)
            k = int(round(w))
            if abs(w - k) > 1e-6:
                raise NearZeroOnCircle(f"non-integral winding {w}")
            return k
        t0b, t1b, g0b, g1b = t0[~ok], t1[~ok], g0[~ok], g1[~ok]
        tm = 0.5 * (t0b + t1b)
        gm = at(tm)
        t0 = np.concatenate([t0b, tm])
        t1 = np.concatenate([tm, t1b])
        g0 = np.concatenate([g0b, gm])
        g1 = np.concatenate([gm, g1b])
    raise NearZeroOnCircle(
        f"displacement too close to zero on circle of radius {radius} about {tuple(c)}")


def lefschetz_index(fmap: LiftedMap, rho: RationalVector, center, radius: float,
                    samples: int = 64) -> int:
    return winding_number(displacement(fmap, rho), center, radius, samples)


@dataclass(frozen=True)
class ProbeResult:
    passed: bool
    witness: Optional[Vec2] = None
    min_gain: float = math.inf

    def __str__(self):
        return "PASS" if self.passed else f"FAIL({self.witness})"


def trivializability_probe(fmap: LiftedMap, z0, r_inner: float, r_outer: float,
                           samples: int = 64, chart=None, mask=None) -> ProbeResult:
    """Check p1(h(f(z))) > p1(h(z)) on a polar sample of the punctured disk.

    A FAIL only says the given chart (identity by default) does not trivialize
    the fixed point; another chart might.  ``mask`` restricts the sample, e.g.
    to the part of the disk off a known fixed set.
    """
    if not 0 < r_inner < r_outer:
        raise ValueError("need 0 < r_inner < r_outer")
    c = np.asarray(z0, dtype=float).reshape(1, 2)
    res = float(np.hypot(*(fmap(c) - c)[0]))
    if res > 1e-9:
        raise ValueError(f"z0 is not a fixed point (residual {res:.3g})")
    radii = np.geomspace(r_inner, r_outer, samples)
    angles = 2 * np.pi * (np.arange(4 * samples) + 0.5) / (4 * samples)
    R, A = np.meshgrid(radii, angles, indexing="ij")
    pts = c + np.stack([(R * np.cos(A)).ravel(), (R * np.sin(A)).ravel()], axis=1)
    if mask is not None:
        pts = pts[mask(pts)]
        if not len(pts):
            raise ValueError("mask leaves no sample points")
    h = chart if chart is not None else (lambda z: z)
    gain = h(fmap(pts))[:, 0] - h(pts)[:, 0]
    i = int(gain.argmin())
    if gain[i] > 0:
        return ProbeResult(True, None, float(gain[i]))
    return ProbeResult(False, Vec2(float(pts[i, 0]), float(pts[i, 1])), float(gain[i]))
