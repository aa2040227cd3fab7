"""Planar primitives: convex hulls, tolerant point classification, Hausdorff distance."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

# Every collinearity decision goes through this: a middle point within this
# distance of the line through its neighbours counts as collinear.
COLLINEAR_TOL = 1e-12


class GeometryError(ValueError):
    pass


class Vec2(NamedTuple):
    x: float
    y: float


class Location(enum.Enum):
    INSIDE = "INSIDE"
    BOUNDARY = "BOUNDARY"
    OUTSIDE = "OUTSIDE"


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


@dataclass(frozen=True)
class ConvexPolygon:
    """Counterclockwise vertex list; one vertex is a point, two a segment."""

    vertices: tuple[Vec2, ...]

    def __post_init__(self):
        if not self.vertices:
            raise GeometryError("polygon needs at least one vertex")

    def __len__(self):
        return len(self.vertices)

    @property
    def is_degenerate(self) -> bool:
        return len(self.vertices) < 3

    def array(self) -> np.ndarray:
        return np.array(self.vertices, dtype=float).reshape(-1, 2)

    def area(self) -> float:
        if self.is_degenerate:
            return 0.0
        v = self.array()
        x, y = v[:, 0], v[:, 1]
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))

    def edges(self):
        n = len(self.vertices)
        if n == 1:
            return []
        if n == 2:
            return [(self.vertices[0], self.vertices[1])]
        return [(self.vertices[i], self.vertices[(i + 1) % n]) for i in range(n)]

    def translated(self, v) -> "ConvexPolygon":
        return ConvexPolygon(tuple(Vec2(p.x + v[0], p.y + v[1]) for p in self.vertices))


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        raise GeometryError("convex_hull of an empty point set")
    pts = pts.reshape(-1, 2)
    if not np.all(np.isfinite(pts)):
        raise GeometryError("non-finite point in hull input")
    return pts


def _akl_toussaint(pts: np.ndarray) -> np.ndarray:
    # Drop points strictly inside the octagon of extreme points.
    s, d = pts[:, 0] + pts[:, 1], pts[:, 0] - pts[:, 1]
    idx = [pts[:, 0].argmin(), s.argmin(), pts[:, 1].argmin(), d.argmax(),
           pts[:, 0].argmax(), s.argmax(), pts[:, 1].argmax(), d.argmin()]
    ring = pts[idx]
    # de-duplicate consecutive octagon corners
    keep = [0] + [i for i in range(1, len(ring)) if not np.array_equal(ring[i], ring[i - 1])]
    ring = ring[keep]
    if len(ring) > 1 and np.array_equal(ring[0], ring[-1]):
        ring = ring[:-1]
    if len(ring) < 3:
        return pts
    inside = np.ones(len(pts), dtype=bool)
    for i in range(len(ring)):
        a, b = ring[i], ring[(i + 1) % len(ring)]
        cr = (b[0] - a[0]) * (pts[:, 1] - a[1]) - (b[1] - a[1]) * (pts[:, 0] - a[0])
        inside &= cr > 1e-9 * (1.0 + np.abs(pts).max())
    return pts[~inside]


def _redundant(o, a, b) -> int:
    """Which of o, a, b (0, 1, 2) the chain should lose, or -1 for a clean left turn.

    A right turn loses a.  For a nearly collinear triple the point in the
    middle along the line goes, since it lies within tolerance of the others.
    """
    c = _cross(o, a, b)
    L = math.hypot(b[0] - o[0], b[1] - o[1])
    if c > COLLINEAR_TOL * L:
        return -1
    if c < -COLLINEAR_TOL * L:
        return 1
    t = (a[0] - o[0]) * (b[0] - o[0]) + (a[1] - o[1]) * (b[1] - o[1])
    if t < 0:
        return 0
    return 2 if t > L * L else 1


def convex_hull(points: Iterable[Sequence[float]]) -> ConvexPolygon:
    """Monotone-chain hull, collinear and duplicate points removed.

    The chain itself uses the exact sign of the cross product; the tolerance
    only enters afterwards, when near-collinear or near-duplicate vertices are
    pruned.  Applying it inside the chain can discard genuine extreme points
    once two inputs sit closer than the tolerance.
    """
    pts = _as_points(points)
    if len(pts) > 64:
        pts = _akl_toussaint(pts)
    pts = np.unique(pts, axis=0)  # lexicographic sort + dedup
    plist = [tuple(p) for p in pts.tolist()]
    if len(plist) == 1:
        return ConvexPolygon((Vec2(*plist[0]),))

    def half(seq):
        chain = []
        for p in seq:
            while len(chain) >= 2 and _cross(chain[-2], chain[-1], p) <= 0:
                chain.pop()
            chain.append(p)
        return chain

    lower = half(plist)
    upper = half(reversed(plist))
    hull = _prune(lower[:-1] + upper[:-1])
    return ConvexPolygon(tuple(Vec2(*p) for p in hull))


def _prune(hull: list) -> list:
    """Drop vertices within tolerance of a neighbour or of the chord joining their neighbours."""
    changed = True
    while changed and len(hull) > 1:
        changed = False
        n = len(hull)
        for i in range(n):
            a, b = hull[i], hull[(i + 1) % n]
            if math.hypot(b[0] - a[0], b[1] - a[1]) <= COLLINEAR_TOL:
                del hull[(i + 1) % n]
                changed = True
                break
            if n >= 3 and _redundant(hull[i - 1], a, b) == 1:
                del hull[i]
                changed = True
                break
    i = hull.index(min(hull))  # start from the lexicographically smallest vertex
    return hull[i:] + hull[:i]


def _segment_distance(p, a, b) -> float:
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    L2 = dx * dx + dy * dy
    if L2 == 0.0:
        return math.hypot(p[0] - ax, p[1] - ay)
    t = ((p[0] - ax) * dx + (p[1] - ay) * dy) / L2
    t = min(1.0, max(0.0, t))
    return math.hypot(p[0] - ax - t * dx, p[1] - ay - t * dy)


def distance_to_polygon(poly: ConvexPolygon, p) -> float:
    """Euclidean distance from p to the polygon as a closed set (0 inside)."""
    verts = poly.vertices
    if len(verts) == 1:
        return math.hypot(p[0] - verts[0].x, p[1] - verts[0].y)
    if len(verts) >= 3 and min(_signed_edge_distances(poly, p)) >= 0.0:
        return 0.0
    return min(_segment_distance(p, a, b) for a, b in poly.edges())


def _signed_edge_distances(poly: ConvexPolygon, p) -> list[float]:
    out = []
    for a, b in poly.edges():
        L = math.hypot(b.x - a.x, b.y - a.y)
        out.append(_cross(a, b, p) / L)
    return out


def classify_point(poly: ConvexPolygon, p, tol: float) -> Location:
    if not tol > 0:
        raise GeometryError("tol must be positive")
    if not (math.isfinite(p[0]) and math.isfinite(p[1])):
        raise GeometryError("non-finite query point")
    if not poly.is_degenerate and min(_signed_edge_distances(poly, p)) >= tol:
        return Location.INSIDE
    if distance_to_polygon(poly, p) >= tol:
        return Location.OUTSIDE
    return Location.BOUNDARY


def hausdorff_distance(a: ConvexPolygon, b: ConvexPolygon) -> float:
    # distance-to-convex-set is convex, so the sup over a polygon sits at a vertex
    d_ab = max(distance_to_polygon(b, v) for v in a.vertices)
    d_ba = max(distance_to_polygon(a, v) for v in b.vertices)
    return max(d_ab, d_ba)


def polygon_to_csv(poly: ConvexPolygon) -> str:
    return "".join(f"{v.x:.17g},{v.y:.17g}\n" for v in poly.vertices)


def polygon_from_csv(text: str) -> ConvexPolygon:
    verts = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        x, y = line.split(",")
        verts.append(Vec2(float(x), float(y)))
    return ConvexPolygon(tuple(verts))
