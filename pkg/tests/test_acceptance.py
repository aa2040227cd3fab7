"""End-to-end acceptance checks.  Each test prints one PASS/FAIL line."""
import time

import numpy as np
import pytest

from conftest import linear_map
from test_fixed_points import four_zero_map
from test_geometry import brute_force_vertices
from rotaset.circle import (CANONICAL, CircleVerdict, classify_rational_circle,
                            rotation_interval)
from rotaset.conservative import (ConservativeParams, area_preservation_check,
                                  build_unlocked_conservative, h_map, quad_areas, theta)
from rotaset.dissipative import lock_perturbation, swapped
from rotaset.fixed_points import find_fixed_points, lefschetz_index
from rotaset.geometry import convex_hull, distance_to_polygon
from rotaset.maps import (RationalVector, TrigProfile, check_periodicity, compose, minus, shear_x,
                          shear_y, translation)
from rotaset.report import hulls_svg, summary_text
from rotaset.rotation import Verdict, classify_rational, mz_estimate

pytestmark = pytest.mark.slow

RHO0 = RationalVector(0, 0, 1)
BAND = 1e-2
N_CIRCLE = 10_000


@pytest.fixture
def verdict(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
        assert ok, detail
    return emit


def test_criterion_1_dissipative_baseline(dissipative, verdict):
    t0 = time.perf_counter()
    est = mz_estimate(dissipative, 200, (1, 10, 100, 1000), seed=0)
    elapsed = time.perf_counter() - t0
    hull = est.deepest
    dist = {v: distance_to_polygon(hull, v) for v in [(0, 0), (1, 0), (0, 1)]}
    lo = hull.array().min(axis=0)
    ok = max(dist.values()) <= 5e-3 and lo.min() >= -5e-3 and elapsed <= 60
    verdict(1, ok, f"max vertex distance {max(dist.values()):.3g}, min coords "
                   f"({lo[0]:.3g}, {lo[1]:.3g}), {elapsed:.1f} s")


def test_criterion_2_lock(dissipative, verdict):
    t0 = time.perf_counter()
    g = lock_perturbation(dissipative, (-0.01, -0.01))
    fp = find_fixed_points(g, RHO0)
    est = mz_estimate(g, 200, (1, 10, 100, 1000), seed=0)
    v = classify_rational(est, RHO0, BAND)
    elapsed = time.perf_counter() - t0
    ok = len(fp) == 0 and not fp.unresolved and v is Verdict.OUTSIDE and elapsed <= 120
    verdict(2, ok, f"{len(fp)} fixed points, {len(fp.unresolved)} unresolved, "
                   f"(0,0) {v.value}, {elapsed:.1f} s")


def test_criterion_3_unlock(dissipative_unlocked, verdict):
    t0 = time.perf_counter()
    g, pair = dissipative_unlocked
    q, q2 = pair.q, swapped(pair).q
    est = mz_estimate(g, 200, (1, 10, 100, 1000), seed=0)
    v = classify_rational(est, RHO0, BAND)
    elapsed = time.perf_counter() - t0
    targets = [(0, 1), (1, 0), (-1 / q, 0), (0, -1 / q2)]
    worst = max(distance_to_polygon(est.deepest, p) for p in targets)
    ok = (g.params["push"].r_outer <= 0.02 and worst <= 5e-3 and v is Verdict.INTERIOR
          and elapsed <= 120)
    verdict(3, ok, f"q={q}, q'={q2}, worst target distance {worst:.3g}, (0,0) {v.value}, "
                   f"{elapsed:.1f} s")


def test_criterion_4_index(dissipative, verdict):
    fp = find_fixed_points(dissipative, RHO0)
    z = fp.records[0].z
    k = lefschetz_index(dissipative, RHO0, z, 0.05)
    src = lefschetz_index(linear_map(2, 0, 0, 2), RHO0, (0, 0), 0.1)
    saddle = lefschetz_index(linear_map(2, 0, 0, 0.5), RHO0, (0, 0), 0.1)
    f4 = four_zero_map()
    single = {(0.0, 0.0): 1, (0.5, 0.5): 1, (0.0, 0.5): -1, (0.5, 0.0): -1}
    parts = sum(lefschetz_index(f4, RHO0, c, 0.1) for c in single)
    outer = lefschetz_index(f4, RHO0, (0.25, 0.25), 0.45)
    ok = len(fp) == 1 and k == 0 and src == 1 and saddle == -1 and parts == outer
    verdict(4, ok, f"dissipative index {k}, source {src:+d}, saddle {saddle:+d}, "
                   f"sum of four {parts} vs outer {outer}")


def test_criterion_5_conservative_construction(conservative, verdict):
    alpha = 0.1
    y = np.linspace(0, 1, 1000)
    dom, img = quad_areas(y, theta(y, alpha), alpha)
    theta_res = float(np.abs(dom - img).max())
    z = np.column_stack([np.random.default_rng(0).uniform(-2, 2, 1000),
                         np.random.default_rng(1).random(1000)])
    h_def = float(np.abs(h_map(z + [1 - alpha, 0], alpha) - h_map(z, alpha) - [1, 0]).max())
    area = area_preservation_check(conservative, n_boxes=1000, seed=0)
    fp = find_fixed_points(conservative, RHO0)
    at_lattice = len(fp) == 1 and np.hypot(*(np.array(fp.records[0].z)
                                              - np.round(fp.records[0].z))) <= 1e-6
    ok = theta_res <= 1e-12 and h_def <= 1e-12 and area.max_defect <= 1e-2 and at_lattice
    verdict(5, ok, f"theta residual {theta_res:.2g}, h periodicity {h_def:.2g}, "
                   f"area defect {area.max_defect:.3g} over {area.n_boxes} boxes, "
                   f"{len(fp)} fixed point(s) at the lattice")


def test_criterion_6_conservative_lock_unlock(conservative, verdict):
    # a coarser seed grid keeps the two conservative estimates within a few minutes
    lock = minus(conservative, (-0.01, -0.01))
    fp = find_fixed_points(lock, RHO0)
    v_lock = classify_rational(mz_estimate(lock, 100, (1, 10, 100, 1000)), RHO0, BAND)
    g, _ = build_unlocked_conservative(ConservativeParams(), 0.02)
    v_unlock = classify_rational(mz_estimate(g, 100, (1, 10, 100, 1000)), RHO0, BAND)
    ok = (len(fp) == 0 and not fp.unresolved and v_lock is Verdict.OUTSIDE
          and v_unlock is Verdict.INTERIOR)
    verdict(6, ok, f"lock: {len(fp)} fixed points, (0,0) {v_lock.value}; "
                   f"unlock: (0,0) {v_unlock.value}")


def test_criterion_7_circle_trichotomy(verdict):
    expected = {"locked": CircleVerdict.SIGN_CHANGE_LOCKED,
                "excluded": CircleVerdict.NO_ZERO_EXCLUDED,
                "one_sided_upper": CircleVerdict.ONE_SIDED_UPPER}
    notes, ok = [], True
    for name, want in expected.items():
        f, p, q = CANONICAL[name]
        got = classify_rational_circle(f, p, q).verdict
        iv = rotation_interval(f, N=N_CIRCLE)
        inside = iv.contains(p / q, 2 / N_CIRCLE)
        agrees = (not inside) if got is CircleVerdict.NO_ZERO_EXCLUDED else inside
        ok = ok and got is want and agrees
        notes.append(f"{name} {got.value} [{iv.lo:.4g}, {iv.hi:.4g}]")
    verdict(7, ok, "; ".join(notes))


def test_criterion_8_infrastructure(dissipative, dissipative_unlocked, conservative, verdict):
    maps = [dissipative, dissipative_unlocked[0], conservative,
            build_unlocked_conservative(ConservativeParams(), 0.02)[0],
            lock_perturbation(dissipative, (-0.01, -0.01)),
            translation((0.3, 0.7)),
            compose(shear_x(TrigProfile(0.1, (0.2,))), shear_y(TrigProfile(0.0, (), (0.15,))))]
    worst = max(check_periodicity(f, 10_000, 1e-9).max_defect for f in maps)

    est = mz_estimate(dissipative, 40, (1, 10, 100), track_displacements=True)
    contain = max(distance_to_polygon(est.displacement_hull, v)
                  for _, h in est.hulls for v in h.vertices)

    def render(e):
        return summary_text(e, [("0,0,1", classify_rational(e, RHO0).value)]) + hulls_svg(e)
    a = render(mz_estimate(dissipative, 40, (1, 10, 100), seed=3))
    b = render(mz_estimate(dissipative, 40, (1, 10, 100), seed=3, workers=2, chunk=300))
    identical = a.encode() == b.encode()

    oracle = True
    for seed in range(100):
        pts = np.random.default_rng(seed).normal(size=(100, 2))
        want = {tuple(pts[i]) for i in brute_force_vertices(pts)}
        oracle = oracle and {tuple(v) for v in convex_hull(pts).vertices} == want

    ok = worst <= 1e-9 and contain <= 1e-9 and identical and oracle
    verdict(8, ok, f"periodicity {worst:.2g} over {len(maps)} maps, containment {contain:.2g}, "
                   f"byte-identical {identical}, hull oracle {oracle}")
