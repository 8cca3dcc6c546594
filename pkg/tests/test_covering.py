import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vecproc import covering as cov
from vecproc import entropy_bounds as eb
from vecproc import function_class as fc
from vecproc.rng import substream


def brute_force_min_cover(points, delta):
    """Independent oracle: smallest subset of points covering all points."""
    n = len(points)
    dm = np.linalg.norm(points[:, None] - points[None, :], axis=2)
    for k in range(1, n + 1):
        for centers in itertools.combinations(range(n), k):
            if np.all(dm[:, centers].min(axis=1) <= delta * (1 + 1e-12)):
                return k
    return n


def test_greedy_single_point():
    cloud = cov.PointCloud(np.array([[0.3, 0.3]]))
    res = cov.greedy_cover(cloud, 0.1)
    assert res.size == 1 and res.is_valid()


def test_greedy_three_points_on_line():
    cloud = cov.PointCloud(np.array([[0.0], [0.5], [1.0]]))
    res = cov.greedy_cover(cloud, 0.5)
    assert res.is_valid()
    assert res.size <= 2
    assert cov.exact_cover_number(cloud, 0.5) == 1


def test_greedy_random_cloud_validity():
    rng = substream(0, 3)
    cloud = cov.PointCloud(rng.uniform(size=(100, 3)))
    res = cov.greedy_cover(cloud, 0.2)
    assert res.is_valid()
    # every point's assigned center really is within the radius
    for i, c in enumerate(res.assignment):
        center = cloud.points[res.center_indices[c]]
        assert np.linalg.norm(cloud.points[i] - center) <= 0.2 * (1 + 1e-12)


def test_greedy_rejects_bad_delta():
    cloud = cov.PointCloud(np.zeros((2, 1)))
    with pytest.raises(ValueError):
        cov.greedy_cover(cloud, 0.0)


def test_exact_two_points():
    cloud = cov.PointCloud(np.array([[0.0], [1.0]]))
    assert cov.exact_cover_number(cloud, 1.0) == 1
    assert cov.exact_cover_number(cloud, 0.4) == 2


def test_exact_cloud_size_cap():
    cloud = cov.PointCloud(np.zeros((21, 1)))
    with pytest.raises(ValueError):
        cov.exact_cover_number(cloud, 0.5)


def test_exact_matches_brute_force_and_bounds_greedy():
    rng = substream(1, 7)
    for trial in range(10):
        pts = rng.uniform(size=(9, 2))
        cloud = cov.PointCloud(pts)
        for delta in (0.15, 0.25, 0.4, 0.6, 0.9):
            exact = cov.exact_cover_number(cloud, delta)
            assert exact == brute_force_min_cover(pts, delta)
            assert exact <= cov.greedy_cover(cloud, delta).size


def test_packing_sandwich():
    rng = substream(2, 11)
    for trial in range(10):
        pts = rng.uniform(size=(10, 2))
        cloud = cov.PointCloud(pts)
        for delta in (0.2, 0.35, 0.5):
            n_delta = cov.exact_cover_number(cloud, delta)
            packing = cov.max_packing_size(cloud, delta)
            n_half = cov.exact_cover_number(cloud, delta / 2)
            assert n_delta <= packing <= n_half


def test_entropy_modes():
    singleton = cov.PointCloud(np.array([[0.0, 0.0]]))
    assert cov.entropy(singleton, 0.3) == 0.0
    pair = cov.PointCloud(np.array([[0.0], [1.0]]))
    assert cov.entropy(pair, 0.4, mode="exact") == pytest.approx(math.log(2))
    with pytest.raises(ValueError):
        cov.entropy(pair, 0.4, mode="nope")


def test_entropy_monotone_in_delta():
    rng = substream(3, 13)
    cloud = cov.PointCloud(rng.uniform(size=(60, 2)))
    deltas = np.geomspace(0.5, 0.02, 10)
    ent = [cov.entropy(cloud, d) for d in deltas]
    assert all(a <= b + 1e-12 for a, b in zip(ent, ent[1:]))


@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 14),
       st.floats(0.05, 1.5), st.integers(1, 3))
@settings(max_examples=60, deadline=None)
def test_greedy_cover_properties_random(seed, size, delta, dim):
    rng = np.random.default_rng(seed)
    cloud = cov.PointCloud(rng.uniform(size=(size, dim)))
    res = cov.greedy_cover(cloud, delta)
    assert res.is_valid()
    # centers are pairwise more than delta apart (greedy picks uncovered pts)
    centers = cloud.points[res.center_indices]
    if len(centers) > 1:
        dm = np.linalg.norm(centers[:, None] - centers[None, :], axis=2)
        np.fill_diagonal(dm, np.inf)
        assert dm.min() > delta
    assert cov.exact_cover_number(cloud, delta) <= res.size


@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 10), st.floats(0.1, 0.8))
@settings(max_examples=40, deadline=None)
def test_entropy_halving_sandwich_random(seed, size, delta):
    # N(delta) <= packing(delta) <= N(delta/2) for any finite metric set
    rng = np.random.default_rng(seed)
    cloud = cov.PointCloud(rng.uniform(size=(size, 2)))
    n_delta = cov.exact_cover_number(cloud, delta)
    packing = cov.max_packing_size(cloud, delta)
    n_half = cov.exact_cover_number(cloud, delta / 2)
    assert n_delta <= packing <= n_half


def test_matrix_metric_cloud():
    rng = substream(4, 17)
    pts = rng.uniform(size=(15, 3))
    direct = cov.PointCloud(pts)
    viamat = cov.PointCloud(direct.distance_matrix(), metric="matrix")
    for d in (0.2, 0.4):
        assert cov.greedy_cover(direct, d).size == cov.greedy_cover(viamat, d).size
        assert cov.exact_cover_number(direct, d) == cov.exact_cover_number(viamat, d)


# ------------------------------------------------------------ smooth covers


def test_smooth_cover_constants_example():
    k1, cap_delta, n_side, big_l = cov.smooth_cover_constants(1, 1, 1.0, 0.1)
    assert k1 == 1.0
    assert cap_delta == pytest.approx(0.025)
    assert big_l == 40
    # first level radius delta_0 = delta / (2 e^d)
    cls = fc.generate_finite_dim_ball_class(1, 1, 2, 1.0, 2, seed=0,
                                            resolution=65)
    plan = cov.build_smooth_cover(cls, 0.1)
    assert plan.level_radii[0] == pytest.approx(0.1 / (2 * math.e))
    assert plan.n_net == 40


def test_smooth_cover_single_constant_member():
    g = fc.GridFunction.from_terms(1, 1, 2, 65, np.zeros((1, 1), int),
                                   np.zeros((1, 1)), np.array([0.5]),
                                   np.array([[1.0, 0.0]]))
    cls = fc.FunctionClass(members=(g,), b_descriptor=fc.BallDescriptor(1.0),
                           d=1, m=1, d_y=2, resolution=65)
    plan = cov.build_smooth_cover(cls, 0.2)
    assert plan.occupied_cell_count() == 1


def test_smooth_cover_rejects_large_delta():
    cls = fc.generate_finite_dim_ball_class(1, 1, 2, 1.0, 2, seed=0,
                                            resolution=65)
    with pytest.raises(ValueError):
        cov.build_smooth_cover(cls, 1.0)


def _twin_class(count, seed, resolution=257, eps=1e-3):
    """Half random members, half slightly perturbed copies: guarantees
    same-signature pairs so validity is checked non-vacuously."""
    base = fc.generate_finite_dim_ball_class(1, 2, 3, 1.0, count, seed,
                                             resolution=resolution)
    members = list(base.members)
    twins = []
    for g in members[: count // 2]:
        twins.append(fc.GridFunction.from_terms(
            g.d, g.m, g.d_y, g.resolution, g.freqs, g.phases,
            g.amps * (1.0 - eps), g.dirs))
    return fc.FunctionClass(members=tuple(members + twins),
                            b_descriptor=base.b_descriptor, d=1, m=2, d_y=3,
                            resolution=resolution, seed=seed)


def test_smooth_cover_same_signature_implies_close():
    cls = _twin_class(30, seed=31)
    plan = cov.build_smooth_cover(cls, 0.1)
    report = cov.verify_cover_validity(cls, plan)
    assert report.pairs_checked > 0
    assert report.ok
    assert report.max_violation <= 1.0


def test_smooth_cover_cells_grow_as_delta_shrinks():
    cls = _twin_class(30, seed=37)
    occupied = []
    for delta in (0.2, 0.1, 0.05):
        plan = cov.build_smooth_cover(cls, delta)
        occupied.append(plan.occupied_cell_count())
        assert cov.verify_cover_validity(cls, plan).ok
    assert occupied[0] <= occupied[-1]


def test_smooth_cover_cell_assignment_is_first_cover():
    cls = fc.generate_finite_dim_ball_class(1, 2, 3, 1.0, 20, seed=41,
                                            resolution=129)
    plan = cov.build_smooth_cover(cls, 0.1)
    p_list = fc.multi_indices(1, 1)
    keys = plan.signature_keys
    for col in (0, len(keys) // 2, len(keys) - 1):
        l, p = keys[col]
        level = plan.level_covers[sum(p)]
        radius = level.radius / 2.0
        x = plan.net_points[l][None, :]
        for member, cell in enumerate(plan.signatures[:, col]):
            val = cls[member].evaluate_deriv(x, p)[0]
            dists = np.linalg.norm(level.centers - val, axis=1)
            # the assigned cell is the first ball containing the value
            assert dists[cell] <= radius * (1 + 1e-9)
            assert np.all(dists[:cell] > radius * (1 - 1e-12))


def test_smooth_cover_entropy_below_closed_form_bounds():
    cls = fc.generate_finite_dim_ball_class(1, 2, 3, 1.0, 50, seed=43,
                                            resolution=257)
    for delta in (0.1, 0.05):
        plan = cov.build_smooth_cover(cls, delta)
        log_occ = math.log(plan.occupied_cell_count())
        assert log_occ <= eb.bound_assouad(1, 2, 1.0, delta, 5.0 ** 3, 3.0)
        assert log_occ <= eb.bound_box(1, 2, 1.0, delta, 3.0)
        assert log_occ <= eb.bound_exp(1, 2, 1.0, delta, 9.0, 1.0)


def test_smooth_cover_two_dimensional_inputs():
    cls = fc.generate_finite_dim_ball_class(2, 1, 3, 1.0, 12, seed=3,
                                            resolution=17)
    k1, cap_delta, n_side, big_l = cov.smooth_cover_constants(2, 1, 1.0, 0.4)
    plan = cov.build_smooth_cover(cls, 0.4)
    assert plan.n_net == big_l == n_side ** 2
    assert cov.verify_cover_validity(cls, plan).ok
    # row-major net ordering: every net point has an axis-predecessor within
    # the net spacing (the ordering the construction relies on)
    side = 1.0 / n_side
    for l in range(1, plan.n_net):
        dists = np.linalg.norm(plan.net_points[:l] - plan.net_points[l], axis=1)
        assert dists.min() <= side + 1e-12 <= cap_delta


def test_greedy_cover_deterministic():
    rng = substream(9, 1)
    pts = rng.uniform(size=(50, 2))
    a = cov.greedy_cover(cov.PointCloud(pts), 0.2)
    b = cov.greedy_cover(cov.PointCloud(pts.copy()), 0.2)
    assert np.array_equal(a.center_indices, b.center_indices)
    assert np.array_equal(a.assignment, b.assignment)


def test_smooth_cover_with_range_set_sample():
    cls = fc.generate_finite_dim_ball_class(1, 1, 2, 1.0, 5, seed=47,
                                            resolution=65)
    plan = cov.build_smooth_cover(cls, 0.2, b_sample_count=50, sample_seed=1)
    assert cov.verify_cover_validity(cls, plan).ok
