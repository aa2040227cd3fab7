"""Finite-depth rotation-set estimates, rational-vector classification, periodic realization."""
from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .fixed_points import FixedPointRecord, displacement, find_fixed_points
from .geometry import ConvexPolygon, Location, Vec2, classify_point, convex_hull, hausdorff_distance
from .maps import LiftedMap, MapDefinitionError, PeriodicHint, RationalVector

DEFAULT_BAND = 1e-2


class Verdict(enum.Enum):
    INTERIOR = "INTERIOR"
    BOUNDARY_BAND = "BOUNDARY_BAND"
    OUTSIDE = "OUTSIDE"


@dataclass(frozen=True)
class DisplacementSample:
    z0: tuple[float, float]
    n: int
    mean_displacement: tuple[float, float]


@dataclass
class RotationSetEstimate:
    hulls: list[tuple[int, ConvexPolygon]]
    grid_density: int
    seed: int
    schedule: tuple[int, ...]
    map_name: str
    displacement_hull: Optional[ConvexPolygon] = None
    n_seeds: int = 0
    hints_used: tuple[PeriodicHint, ...] = ()

    @property
    def deepest(self) -> ConvexPolygon:
        return self.hulls[-1][1]

    def hull_at(self, n: int) -> ConvexPolygon:
        return dict(self.hulls)[n]

    def hausdorff_gaps(self) -> list[tuple[int, int, float]]:
        return [(n0, n1, hausdorff_distance(h0, h1))
                for (n0, h0), (n1, h1) in zip(self.hulls, self.hulls[1:])]


def seed_points(grid_density: int, seed: int, jitter_fraction: float = 0.1) -> np.ndarray:
    t = np.arange(grid_density) / grid_density
    X, Y = np.meshgrid(t, t, indexing="ij")
    grid = np.stack([X.ravel(), Y.ravel()], axis=1)
    n_jit = int(round(jitter_fraction * grid_density ** 2))
    jit = np.random.default_rng(seed).random((n_jit, 2))
    return np.concatenate([grid, jit])


def verified_hints(fmap: LiftedMap, tol: float = 1e-9) -> list[tuple[PeriodicHint, np.ndarray]]:
    """Hints whose orbit closes to ``tol``, with their computed orbit points."""
    out = []
    for h in fmap.periodic_hints:
        orbit = [np.array([h.z], dtype=float)]
        for _ in range(h.rho.q):
            orbit.append(fmap(orbit[-1]))
        res = np.hypot(*(orbit[-1][0] - orbit[0][0] - h.rho.shift))
        if res <= tol:
            out.append((h, np.concatenate(orbit[:-1])))
    return out


def _hint_means(orbit: np.ndarray, shift: np.ndarray, n: int) -> np.ndarray:
    # exact continuation of a closed orbit: Z_m = z_{m mod q} + (m div q) shift
    q = len(orbit)
    j = np.arange(q)
    m = j + n
    end = orbit[m % q] + (m // q)[:, None] * shift
    return (end - orbit) / n


def _run_chunk(ev, z0, schedule, track):
    z = z0.copy()
    out = {}
    step_vertices = []
    depth = 0
    for n in schedule:
        while depth < n:
            w = ev(z)
            if track:
                step_vertices.append(convex_hull(w - z).array())
            z = w
            depth += 1
        bad = ~np.all(np.isfinite(z), axis=1)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise MapDefinitionError(f"non-finite orbit from seed {tuple(z0[i])}")
        out[n] = (z - z0) / n
    return out, step_vertices


def mz_estimate(fmap: LiftedMap, grid_density: int = 200, schedule: Sequence[int] = (1, 10, 100, 1000),
                seed: int = 0, jitter_fraction: float = 0.1, use_hints: bool = True,
                workers: int = 1, track_displacements: bool = False,
                chunk: int = 8192) -> RotationSetEstimate:
    """Convex hulls of mean displacements (f^n(z) - z)/n over a seeded sample.

    Verified periodic hints of the map join the sample with their exact closed
    orbit, so measure-zero orbits realizing extreme vectors are not missed.
    """
    if grid_density < 2:
        raise ValueError("grid_density must be >= 2")
    schedule = tuple(int(n) for n in schedule)
    if not schedule or any(n < 1 for n in schedule) or any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("schedule must be a non-empty increasing list of positive depths")
    z0 = seed_points(grid_density, seed, jitter_fraction)
    pieces = [z0[i:i + chunk] for i in range(0, len(z0), chunk)]
    ev = fmap.evaluator
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda p: _run_chunk(ev, p, schedule, track_displacements), pieces))
    else:
        results = [_run_chunk(ev, p, schedule, track_displacements) for p in pieces]

    hints = verified_hints(fmap) if use_hints else []
    hulls = []
    for n in schedule:
        pts = [r[0][n] for r in results]
        pts += [_hint_means(orb, h.rho.shift, n) for h, orb in hints]
        hulls.append((n, convex_hull(np.concatenate(pts))))
    disp = None
    if track_displacements:
        verts = [v for r in results for v in r[1]]
        for h, orb in hints:
            nxt = np.concatenate([orb[1:], orb[:1] + h.rho.shift])
            verts.append(nxt - orb)
        disp = convex_hull(np.concatenate(verts))
    return RotationSetEstimate(hulls, grid_density, seed, schedule, fmap.name, disp,
                               len(z0), tuple(h for h, _ in hints))


def classify_rational(est: RotationSetEstimate, rho: RationalVector,
                      tol: float = DEFAULT_BAND) -> Verdict:
    loc = classify_point(est.deepest, rho.vector, tol)
    return {Location.INSIDE: Verdict.INTERIOR, Location.BOUNDARY: Verdict.BOUNDARY_BAND,
            Location.OUTSIDE: Verdict.OUTSIDE}[loc]


def realize_rational(fmap: LiftedMap, rho: RationalVector, cell: float = 0.05,
                     tol: float = 1e-6) -> Optional[FixedPointRecord]:
    """A periodic point realizing rho, if the search finds one.

    None is not evidence that rho lies outside the rotation set.
    """
    found = find_fixed_points(fmap, rho, cell, tol)
    if found.records:
        return found.records[0]
    if not found.unresolved:
        return None
    # a fixed set with interior leaves only unresolved cells; any center on it will do
    z = np.array([c.center for c in found.unresolved])
    res = np.hypot(*displacement(fmap, rho)(z).T)
    i = int(res.argmin())
    if res[i] <= tol:
        return FixedPointRecord(Vec2(float(z[i, 0]), float(z[i, 1])), rho, float(res[i]))
    return None
