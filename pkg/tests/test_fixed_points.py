import math

import numpy as np
import pytest

from conftest import linear_map
from rotaset.conservative import ConservativeParams, build_fH_conservative, in_H
from rotaset.fixed_points import (NearZeroOnCircle, displacement, find_fixed_points,
                                  lefschetz_index, trivializability_probe, winding_number)
from rotaset.maps import LiftedMap, RationalVector, identity, minus

RHO0 = RationalVector(0, 0, 1)


def four_zero_map():
    k = 1 / 8
    return LiftedMap(lambda z: z + k * np.sin(2 * np.pi * z), "four_zero", {}, None,
                     1 + 2 * np.pi * k)


def test_identity_is_unresolved():
    res = find_fixed_points(identity(), RHO0, 0.05, 1e-9, max_cells=20_000)
    assert not res.records
    assert res.budget_exhausted and res.unresolved
    # the unresolved cells still cover the whole domain
    centers = np.array([c.center for c in res.unresolved])
    assert centers.min() < 0.01 and centers.max() > 0.99


def test_four_zero_map_records():
    res = find_fixed_points(four_zero_map(), RHO0, 0.05, 1e-9)
    assert not res.unresolved
    got = sorted((round(r.z.x * 2) / 2 % 1, round(r.z.y * 2) / 2 % 1) for r in res.records)
    assert got == [(0.0, 0.0), (0.0, 0.5), (0.5, 0.0), (0.5, 0.5)]
    g = displacement(four_zero_map(), RHO0)
    for r in res.records:
        assert r.residual <= 1e-9
        assert np.hypot(*g(np.array([r.z]))[0]) <= 1e-9


def test_dissipative_single_record(dissipative):
    res = find_fixed_points(dissipative, RHO0, 0.05, 1e-9)
    assert len(res.records) == 1 and not res.unresolved
    z = np.asarray(res.records[0].z)
    assert np.hypot(*(z - np.round(z))) <= 1e-6


def test_dissipative_lock_fixed_point_free(dissipative):
    for v in [(-0.01, -0.01), (-0.02, -0.005), (-0.001, -0.03)]:
        res = find_fixed_points(minus(dissipative, v), RHO0, 0.05, 1e-9)
        assert not res.records and not res.unresolved


def test_search_parameter_checks():
    with pytest.raises(ValueError):
        find_fixed_points(identity(), RHO0, 0.2)
    with pytest.raises(ValueError):
        find_fixed_points(identity(), RHO0, 0.05, 0.0)


@pytest.mark.parametrize("radius", [0.01, 0.05, 0.1])
def test_linear_indices(radius):
    assert lefschetz_index(linear_map(2, 0, 0, 2), RHO0, (0, 0), radius) == 1
    assert lefschetz_index(linear_map(2, 0, 0, 0.5), RHO0, (0, 0), radius) == -1
    # rotation by a quarter turn: displacement (R - I) z has positive determinant
    assert lefschetz_index(linear_map(0, -1, 1, 0), RHO0, (0, 0), radius) == 1


def test_index_additivity_four_zero():
    f = four_zero_map()
    single = {(0.0, 0.0): 1, (0.5, 0.5): 1, (0.0, 0.5): -1, (0.5, 0.0): -1}
    for c, k in single.items():
        assert lefschetz_index(f, RHO0, c, 0.1) == k
    for center, radius, members in [
        ((0.25, 0.0), 0.4, [(0.0, 0.0), (0.5, 0.0)]),
        ((0.0, 0.25), 0.4, [(0.0, 0.0), (0.0, 0.5)]),
        ((0.25, 0.25), 0.45, list(single)),
        ((0.25, 0.25), 0.7, list(single)),
    ]:
        assert lefschetz_index(f, RHO0, center, radius) == sum(single[m] for m in members)


def test_near_zero_on_circle():
    with pytest.raises(NearZeroOnCircle):
        lefschetz_index(four_zero_map(), RHO0, (0, 0), 0.5)


def test_winding_of_explicit_fields():
    assert winding_number(lambda z: z, (0, 0), 1.0) == 1
    assert winding_number(lambda z: np.stack([z[:, 0] ** 2 - z[:, 1] ** 2,
                                              2 * z[:, 0] * z[:, 1]], axis=1), (0, 0), 1.0) == 2
    assert winding_number(lambda z: np.stack([z[:, 0], -z[:, 1]], axis=1), (0, 0), 0.3) == -1


@pytest.mark.parametrize("radius", [0.01, 0.05, 0.1])
def test_dissipative_index_zero(dissipative, radius):
    assert lefschetz_index(dissipative, RHO0, (0, 0), radius) == 0


def test_probe_pass_and_fail():
    push = LiftedMap(lambda z: z + np.stack([(z ** 2).sum(axis=1), 0 * z[:, 1]], axis=1), "push")
    assert trivializability_probe(push, (0, 0), 1e-3, 0.1).passed
    rot = linear_map(0, -1, 1, 0)
    res = trivializability_probe(rot, (0, 0), 1e-3, 0.1)
    assert not res.passed
    w = np.array([res.witness])
    assert rot(w)[0, 0] <= w[0, 0]
    assert str(res).startswith("FAIL")


def test_probe_requires_fixed_point():
    with pytest.raises(ValueError):
        trivializability_probe(minus(identity(), (0.1, 0)), (0, 0), 0.01, 0.1)


def test_probe_conservative_horizontal_factor():
    p = ConservativeParams()
    fH = build_fH_conservative(p)
    # a point of the horizontal region away from the vertical one; H itself is fixed, so mask it
    res = trivializability_probe(fH, (0.25, 0.05), 0.002, 0.02,
                                 mask=lambda z: ~in_H(z, p.alpha))
    assert res.passed and res.min_gain > 0
