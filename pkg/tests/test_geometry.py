import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from projdyn import sets
from projdyn.errors import DegenerateRankError, InfeasibleError, RestorationError
from projdyn.geometry import (PolyhedralCone, SmoothInequalitySet, active_set,
                              finite_difference_jacobian, project_to_set, tangent_cone)
from projdyn.metric import MetricField

from oracles import (cone_projection_generators, cone_projection_halfspaces, grid_nearest,
                     qp_enumerate, random_spd)

seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=200, deadline=None)
@given(seed=seeds, n=st.integers(2, 3), k=st.integers(1, 5))
def test_halfspace_projection_matches_enumeration(seed, n, k):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((k, n))
    G = random_spd(rng, n)
    f = rng.standard_normal(n) * 3
    res = PolyhedralCone.from_halfspaces(A).project(f, G)
    np.testing.assert_allclose(res.vector, cone_projection_halfspaces(A, G, f), atol=1e-8)
    assert np.all(A @ res.vector <= 1e-9 * (1 + np.linalg.norm(f)))
    # Moreau: the normal part is G-orthogonal to the projection.
    assert abs(res.vector @ G @ res.normal) <= 1e-9 * (1 + f @ G @ f)
    assert all(a >= 0 for _, a in res.multipliers)


@settings(max_examples=200, deadline=None)
@given(seed=seeds, n=st.integers(2, 3), k=st.integers(1, 5))
def test_generator_projection_matches_enumeration(seed, n, k):
    rng = np.random.default_rng(seed)
    D = rng.standard_normal((k, n))
    G = random_spd(rng, n)
    f = rng.standard_normal(n) * 3
    res = PolyhedralCone.from_generators(D).project(f, G)
    ref = cone_projection_generators(D, G, f)
    r1, r2 = f - res.vector, f - ref
    assert r1 @ G @ r1 <= r2 @ G @ r2 + 1e-9
    np.testing.assert_allclose(res.vector, ref, atol=1e-7)


def test_cone_forms_agree_on_quadrant():
    cone = PolyhedralCone(2, halfspace_rows=-np.eye(2), generators=np.eye(2))
    assert cone.consistency_residual() <= 1e-12
    wrong = PolyhedralCone(2, halfspace_rows=-np.eye(2), generators=[[1.0, 0.0]])
    assert wrong.consistency_residual() > 0.1


def test_cone_contains_and_whole_space():
    cone = PolyhedralCone.from_halfspaces([[1.0, 1.0]])
    assert cone.contains([1.0, -1.0])
    assert not cone.contains([1.0, 0.0])
    whole = PolyhedralCone.whole_space(2)
    assert whole.is_whole_space and whole.contains([5.0, 5.0])
    np.testing.assert_array_equal(whole.project([1.0, 2.0], np.eye(2)).vector, [1.0, 2.0])
    ray = PolyhedralCone.from_generators([[1.0, 0.0]])
    assert ray.contains([2.0, 0.0]) and not ray.contains([-1.0, 0.0])


def test_cone_rejects_bad_input():
    with pytest.raises(ValueError):
        PolyhedralCone(2)
    with pytest.raises(ValueError):
        PolyhedralCone(2, halfspace_rows=[[1.0, 0.0]], labels=(0, 1))


def test_cone_arrays_are_read_only():
    cone = PolyhedralCone.from_halfspaces([[1.0, 0.0]])
    with pytest.raises(ValueError):
        cone.halfspace_rows[0, 0] = 2.0


def test_finite_difference_jacobian():
    func = lambda x: np.array([np.sin(x[0]) * x[1], x[0] ** 3])  # noqa: E731
    x = np.array([0.7, -1.3])
    exact = np.array([[np.cos(x[0]) * x[1], np.sin(x[0])], [3 * x[0] ** 2, 0.0]])
    np.testing.assert_allclose(finite_difference_jacobian(func, x), exact, atol=1e-8)


def test_active_set_and_tolerance():
    S = sets.box([0.0, 0.0], [1.0, 1.0])
    assert S.active_set([0.5, 0.5]) == ()
    assert active_set(S, [1.0, 0.5]) == (0,)
    assert S.active_set([1.0 + 5e-9, 0.0]) == (0, 3)
    with pytest.raises(InfeasibleError) as info:
        S.active_set([1.1, 0.5])
    assert info.value.index == 0
    assert info.value.value == pytest.approx(0.1)


def test_box_corner_tangent_cone():
    S = sets.box([0.0, 0.0], [1.0, 1.0])
    (cone,) = tangent_cone(S, [1.0, 1.0])
    assert cone.contains([-1.0, -2.0])
    assert not cone.contains([0.1, -1.0])
    assert cone.labels == (0, 1)


def test_degenerate_rank_is_reported():
    S = SmoothInequalitySet(lambda x: np.array([x[0], 2.0 * x[0]]), 2)
    with pytest.raises(DegenerateRankError) as info:
        S.tangent_cone([0.0, 0.3])
    assert info.value.active == (0, 1)


def test_smooth_tangent_cone_of_disk():
    S = sets.disk()
    (cone,) = S.tangent_cone([0.0, 1.0])
    assert cone.contains([1.0, 0.0]) and cone.contains([0.0, -1.0])
    assert not cone.contains([0.0, 0.1])


@settings(max_examples=100, deadline=None)
@given(seed=seeds)
def test_box_restoration_matches_qp(seed):
    rng = np.random.default_rng(seed)
    G = random_spd(rng, 2)
    y = rng.uniform(-2.0, 3.0, 2)
    S = sets.box([0.0, 0.0], [1.0, 1.0])
    x = S.project(y, MetricField.constant(G))
    A = np.vstack([np.eye(2), -np.eye(2)])
    ref, _ = qp_enumerate(G, G @ y, A, [1.0, 1.0, 0.0, 0.0])
    np.testing.assert_allclose(x, ref, atol=1e-9)


@settings(max_examples=20, deadline=None)
@given(seed=seeds)
def test_disk_restoration_matches_grid(seed):
    rng = np.random.default_rng(seed)
    G = random_spd(rng, 2, 5.0)
    angle = rng.uniform(0, 2 * np.pi)
    y = rng.uniform(1.2, 2.0) * np.array([np.cos(angle), np.sin(angle)])
    S = sets.disk()
    x = project_to_set(S, y, MetricField.constant(G))
    ref, h = grid_nearest(lambda p: p @ p <= 1.0, y, G, [-1.1, -1.1], [1.1, 1.1], 601)
    d_x = (x - y) @ G @ (x - y)
    d_ref = (ref - y) @ G @ (ref - y)
    assert x @ x <= 1.0 + 1e-10
    assert d_x <= d_ref + 1e-12
    assert np.linalg.norm(x - ref) <= 0.05
    assert S.stationarity_residual(x, y, MetricField.constant(G)) <= 1e-8


def test_feasible_point_is_returned_unchanged():
    S = sets.disk()
    y = np.array([0.2, 0.3])
    np.testing.assert_array_equal(S.project(y, MetricField.euclidean(2)), y)


def test_restore_radius_is_enforced():
    S = sets.disk(restore_radius=0.1)
    with pytest.raises(RestorationError):
        S.project([3.0, 0.0], MetricField.euclidean(2))
    S.project([1.05, 0.0], MetricField.euclidean(2))


def test_bisection_fallback_uses_anchor():
    S = sets.disk(max_restore_iter=1)
    x = S.project([1.5, 0.0], MetricField.euclidean(2), anchor=[0.0, 0.0])
    assert x @ x <= 1.0
    assert x[0] == pytest.approx(1.0, abs=1e-9)


def test_halfplane_metric_restoration_value():
    # {x1 <= 0} with G = [[2,1],[1,2]]: (0.3, 0) restores to (0, 0.15).
    S = sets.halfplane([1.0, 0.0])
    x = S.project([0.3, 0.0], MetricField.constant([[2.0, 1.0], [1.0, 2.0]]))
    np.testing.assert_allclose(x, [0.0, 0.15], atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(seed=seeds, radius=st.floats(1e-3, 0.5))
def test_samples_are_feasible_and_in_shell(seed, radius):
    S = sets.disk()
    x = np.array([0.0, 1.0])
    pts = S.sample_neighborhood(x, radius, 64, np.random.default_rng(seed), inner=radius / 10)
    assert len(pts) > 0
    for p in pts:
        assert S.contains(p)
        assert radius / 10 * (1 - 1e-9) <= np.linalg.norm(p - x) <= radius * (1 + 1e-9)


def test_whole_space_set():
    S = SmoothInequalitySet.whole_space(3)
    assert S.active_set(np.ones(3)) == ()
    (cone,) = S.tangent_cone(np.ones(3))
    assert cone.is_whole_space
