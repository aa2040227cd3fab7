import numpy as np
import pytest

from conftest import linear_map
from rotaset.conservative import (ConservativeParams, UnsupportedMap, apply_chain,
                                  area_preservation_check, build_chain, build_f1, build_fH_conservative,
                                  build_unlocked_conservative, chain_height, check_packing, f0,
                                  h_inverse, h_map, in_H, quad_areas, theta, z1_point)
from rotaset.dissipative import lock_perturbation, return_residual, swapped
from rotaset.fixed_points import find_fixed_points
from rotaset.maps import LiftedMap, MapDefinitionError, RationalVector, check_periodicity, translation

ALPHA = 0.1


@pytest.fixture(scope="module")
def fH():
    return build_fH_conservative(ConservativeParams())


def test_theta_examples():
    assert theta(0.5, ALPHA) == pytest.approx(0.5, abs=1e-15)
    # at the bottom the apex sits where the two quadrilaterals balance
    assert 0 < float(theta(0.0, ALPHA)) < 0.5
    with pytest.raises(ValueError):
        theta(1.2, ALPHA)


def test_theta_equal_areas():
    y = np.linspace(0, 1, 1001)
    t = theta(y, ALPHA)
    dom, img = quad_areas(y, t, ALPHA)
    assert np.abs(dom - img).max() <= 1e-12


def test_h_is_periodic_in_x(rng):
    z = np.column_stack([rng.uniform(-2, 2, 2000), rng.random(2000)])
    P = 1 - ALPHA
    lhs = h_map(z + [P, 0], ALPHA)
    rhs = h_map(z, ALPHA) + [1, 0]
    assert np.abs(lhs - rhs).max() <= 1e-12


def test_h_inverse_round_trip(rng):
    z = np.column_stack([rng.uniform(-1, 1, 5000), rng.random(5000)])
    back = h_inverse(h_map(z, ALPHA), ALPHA)
    assert np.abs(back - z).max() <= 1e-9


def test_h_fixes_V_and_maps_midline():
    y = np.linspace(0, 1, 41)
    w = ALPHA * (1 - np.abs(2 * y - 1))
    edge = np.column_stack([w * 0.5, y])
    assert np.abs(h_map(edge, ALPHA) - edge).max() <= 1e-15
    mid = h_map(np.column_stack([np.full_like(y, (1 - ALPHA) / 2), y]), ALPHA)
    assert np.abs(mid[:, 0] - 0.5).max() <= 1e-12
    assert np.abs(mid[:, 1] - theta(y, ALPHA)).max() <= 1e-12


def test_h_domain_errors():
    with pytest.raises(MapDefinitionError):
        h_map([[0.2, 1.5]], ALPHA)
    with pytest.raises(MapDefinitionError):
        h_inverse([[0.5, 0.0]], ALPHA)


def test_f0_examples():
    z = f0([[0.0, 0.5], [0.3, 0.0], [0.0, 0.25]], ALPHA)
    np.testing.assert_allclose(z, [[0.05, 0.5], [0.3, 0.0], [0.025, 0.25]], atol=1e-15)
    back = f0(z, ALPHA, -1.0)
    np.testing.assert_allclose(back, [[0.0, 0.5], [0.3, 0.0], [0.0, 0.25]], atol=1e-15)


def test_f1_fixes_H_and_moves_right_down(rng):
    f1 = build_f1(ALPHA)
    z = rng.random((10_000, 2))
    d = f1(z) - z
    h = in_H(z, ALPHA)
    assert np.abs(d[h]).max() == 0.0
    assert np.all(d[~h, 0] >= -1e-12)
    assert np.all(d[~h, 1] - d[~h, 0] <= 1e-12)
    assert np.abs(f1.inverse(f1(z)) - z).max() <= 1e-9


def test_chain_heights():
    assert chain_height([0, 1, 2, -1], 0.5).tolist() == [0.5, 0.25, 0.125, 0.75]


def test_chain_packing_and_rims():
    f1 = build_f1(ALPHA)
    chain = build_chain(ALPHA, 0.87, 20)
    check_packing(chain, f1)
    a, b = chain.segment(0)
    assert b.y == pytest.approx(chain.height(1))
    assert a.y == pytest.approx(chain.height(0))


def test_chain_orbit_marches_down(fH):
    p = ConservativeParams()
    f1 = build_f1(p.alpha)
    chain = build_chain(p.alpha, p.beta, p.truncation)
    f2 = apply_chain(f1, chain)
    for k in (-3, 0, 5):
        z = f2(np.array([[0.0, chain.height(k)]]))
        assert np.abs(z[0] - [0.0, chain.height(k + 1)]).max() <= 1e-9


def test_z1_goes_one_step_right(fH):
    z1 = np.array([z1_point(ConservativeParams())])
    assert np.abs(fH(z1) - z1 - [1, 0]).max() <= 1e-12


def test_origin_is_the_only_fixed_point(conservative):
    assert np.abs(conservative(np.zeros((1, 2)))).max() == 0.0
    res = find_fixed_points(conservative, RationalVector(0, 0, 1))
    assert len(res) == 1
    z = res.records[0].z
    assert np.hypot(z.x - round(z.x), z.y - round(z.y)) <= 1e-6


def test_displacement_never_along_negative_diagonal(conservative):
    z = np.random.default_rng(7).random((200_000, 2))
    d = conservative(z) - z
    n = np.hypot(d[:, 0], d[:, 1])
    both_neg = (d[:, 0] < 0) & (d[:, 1] < 0)
    near_diag = np.abs(d[:, 0] - d[:, 1]) <= 0.05 * n
    assert not np.any(both_neg & near_diag)


def test_is_lift(conservative):
    assert check_periodicity(conservative, 10_000, 1e-9).passed


def test_inverse(conservative, rng):
    z = rng.random((5000, 2))
    assert np.abs(conservative.inverse(conservative(z)) - z).max() <= 1e-8


def test_area_check_references():
    assert area_preservation_check(translation((0.3, 0.2)), n_boxes=5).max_defect <= 1e-3
    assert area_preservation_check(linear_map(2, 0, 0, 0.5), n_boxes=5).max_defect <= 1e-2
    rep = area_preservation_check(linear_map(2, 0, 0, 1), n_boxes=5)
    assert rep.max_defect == pytest.approx(1.0, abs=1e-2)
    with pytest.raises(UnsupportedMap):
        area_preservation_check(LiftedMap(lambda z: z, "noinv", {}), n_boxes=1)


def test_area_check_conservative_sample(conservative):
    assert area_preservation_check(conservative, n_boxes=20, seed=3).max_defect <= 1e-2


def test_lock_has_no_fixed_points(conservative):
    g = lock_perturbation(conservative, (-0.01, -0.01))
    res = find_fixed_points(g, RationalVector(0, 0, 1))
    assert len(res) == 0 and not res.unresolved


def test_unlock_closes_orbits():
    g, pair = build_unlocked_conservative(ConservativeParams(), 0.02)
    assert return_residual(g, pair) <= 1e-9
    assert return_residual(g, swapped(pair)) <= 1e-9
    assert check_periodicity(g, 10_000, 1e-9).passed


def test_param_validation():
    with pytest.raises(MapDefinitionError):
        ConservativeParams(alpha=0.2).validate()
    with pytest.raises(MapDefinitionError):
        ConservativeParams(beta=1.0).validate()
    with pytest.raises(MapDefinitionError):
        ConservativeParams(a=0.56).validate()
