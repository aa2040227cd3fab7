"""Machine-readable and SVG renderings of estimates; every number keeps 17 significant digits."""
from __future__ import annotations

from typing import Optional, Sequence

from .geometry import ConvexPolygon, polygon_to_csv
from .rotation import RotationSetEstimate

_PALETTE = ("#c6dbef", "#6baed6", "#2171b5", "#08306b", "#000000")


def g17(x: float) -> str:
    return f"{x:.17g}"


def hull_csv(n: int, poly: ConvexPolygon) -> str:
    return f"# depth {n}\nx,y\n" + polygon_to_csv(poly)


def summary_text(est: RotationSetEstimate, queries: Sequence[tuple[str, str]] = ()) -> str:
    lines = [f"map {est.map_name}",
             f"grid_density {est.grid_density}",
             f"seed {est.seed}",
             f"seed_points {est.n_seeds}",
             f"schedule {','.join(str(n) for n in est.schedule)}",
             f"periodic_hints {len(est.hints_used)}"]
    for n, h in est.hulls:
        verts = " ".join(f"({g17(v.x)} {g17(v.y)})" for v in h.vertices)
        lines.append(f"hull {n} area {g17(h.area())} vertices {verts}")
    for n0, n1, d in est.hausdorff_gaps():
        lines.append(f"hausdorff {n0} {n1} {g17(d)}")
    for rho, verdict in queries:
        lines.append(f"classify {rho} {verdict}")
    return "\n".join(lines) + "\n"


def hulls_svg(est: RotationSetEstimate, mark: Optional[tuple[float, float]] = None,
              size: int = 480) -> str:
    """Nested hulls, deepest drawn last, with an optional marker at ``mark``."""
    pts = [v for _, h in est.hulls for v in h.vertices]
    if mark is not None:
        pts.append(mark)
    xs = [p[0] for p in pts] + [0.0]
    ys = [p[1] for p in pts] + [0.0]
    lo_x, hi_x, lo_y, hi_y = min(xs), max(xs), min(ys), max(ys)
    span = max(hi_x - lo_x, hi_y - lo_y, 1e-9)
    pad = 0.08 * span
    scale = (size - 2) / (span + 2 * pad)

    def sx(x):
        return f"{(x - lo_x + pad) * scale + 1:.12g}"

    def sy(y):
        return f"{size - 1 - (y - lo_y + pad) * scale:.12g}"

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
           f'viewBox="0 0 {size} {size}">',
           f'<rect width="{size}" height="{size}" fill="white"/>',
           f'<line x1="{sx(lo_x - pad)}" y1="{sy(0)}" x2="{sx(lo_x + span + pad)}" y2="{sy(0)}" '
           'stroke="#bbbbbb" stroke-width="0.5"/>',
           f'<line x1="{sx(0)}" y1="{sy(lo_y - pad)}" x2="{sx(0)}" y2="{sy(lo_y + span + pad)}" '
           'stroke="#bbbbbb" stroke-width="0.5"/>']
    k = len(est.hulls)
    for i, (n, h) in enumerate(est.hulls):
        # deeper hulls get darker strokes
        color = _PALETTE[min(len(_PALETTE) - 1, i + max(0, len(_PALETTE) - k))]
        coords = " ".join(f"{sx(v.x)},{sy(v.y)}" for v in h.vertices)
        if len(h.vertices) == 1:
            out.append(f'<circle cx="{sx(h.vertices[0].x)}" cy="{sy(h.vertices[0].y)}" r="3" '
                       f'fill="{color}"><title>depth {n}</title></circle>')
        else:
            out.append(f'<polygon points="{coords}" fill="none" stroke="{color}" '
                       f'stroke-width="1.5"><title>depth {n}</title></polygon>')
    if mark is not None:
        mx, my = float(sx(mark[0])), float(sy(mark[1]))
        out.append(f'<path d="M{mx - 5:.12g} {my - 5:.12g}L{mx + 5:.12g} {my + 5:.12g}'
                   f'M{mx - 5:.12g} {my + 5:.12g}L{mx + 5:.12g} {my - 5:.12g}" '
                   'stroke="#d62728" stroke-width="1.5"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
