import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from projdyn import sets
from projdyn.dynamics import IntegratorConfig
from projdyn.flows import (ScalarField, grad_field, minimal_velocity, newton_flow,
                           normal_cone_step, projected_gradient_flow, raw_flow)
from projdyn.geometry import SmoothInequalitySet
from projdyn.metric import MetricField
from projdyn.projection import project_field

from oracles import random_spd


def test_quadratic_derivatives():
    Q = np.array([[3.0, 1.0], [1.0, 2.0]])
    psi = ScalarField.quadratic(Q, [1.0, -1.0])
    x = np.array([0.3, 0.4])
    assert psi(x) == pytest.approx(0.5 * (x - [1, -1]) @ Q @ (x - [1, -1]))
    assert psi.gradient_error(x) <= 1e-9
    np.testing.assert_allclose(psi.hessian(x), Q)


def test_finite_difference_fallbacks():
    psi = ScalarField(lambda x: np.sin(x[0]) + x[0] * x[1] ** 2)
    x = np.array([0.4, -0.7])
    np.testing.assert_allclose(psi.gradient(x), [np.cos(0.4) + 0.49, 2 * 0.4 * -0.7], atol=1e-8)
    H = psi.hessian(x)
    np.testing.assert_allclose(H, H.T)
    np.testing.assert_allclose(H, [[-np.sin(0.4), -1.4], [-1.4, 0.8]], atol=1e-5)


def test_grad_field_uses_metric():
    G = np.array([[2.0, 1.0], [1.0, 2.0]])
    psi = ScalarField.quadratic(np.eye(2))
    field = grad_field(psi, MetricField.constant(G))
    x = np.array([1.0, 2.0])
    np.testing.assert_allclose(G @ field(x), x)


def test_flow_constructors():
    S = sets.box([0.0, 0.0], [1.0, 1.0])
    psi = ScalarField.quadratic([[3.0, 1.0], [1.0, 2.0]], [2.0, 0.5], name="bowl")
    g = MetricField.euclidean(2)
    assert projected_gradient_flow(S, g, psi).describe() == {
        "kind": "gradient", "metric": "euclidean", "set": "box", "potential": "bowl"}
    nf = newton_flow(S, psi)
    assert nf.kind == "newton" and nf.metric.name == "hessian:bowl"
    assert raw_flow(S, g, lambda x: x).kind == "raw-field"
    v = projected_gradient_flow(S, g, psi).project([1.0, 0.5]).primary
    # -grad = (3, 1) at (1, 0.5); the wall x1 <= 1 removes the first component.
    np.testing.assert_allclose(v, [0.0, 1.0])


def test_unconstrained_newton_flow_is_exponential():
    Q = np.array([[4.0, 1.0], [1.0, 0.5]])
    psi = ScalarField.quadratic(Q)
    flow = newton_flow(SmoothInequalitySet.whole_space(2), psi)
    x0 = np.array([1.0, -2.0])
    dt = 1e-3
    tr = flow.integrate(x0, 3.0, IntegratorConfig(dt=dt))
    err = max(np.linalg.norm(x - x0 * np.exp(-t)) for t, x in zip(tr.times, tr.states))
    assert err <= 10 * dt


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_minimal_velocity_matches_primal_projection(seed):
    # Two independent routes: scipy NNLS on whitened normal generators versus
    # the Gram-form dual NNLS over tangent-cone halfspaces.
    rng = np.random.default_rng(seed)
    V = [[0.0, 0.0], [2.0, 0.0], [2.5, 1.5], [1.0, 2.5], [-0.5, 1.2]]
    S = sets.polygon(V)
    x = np.array(V[rng.integers(5)])
    g = MetricField.constant(random_spd(rng, 2))
    f = rng.standard_normal(2)
    v1 = minimal_velocity(S, g, lambda y: f, x)
    v2 = project_field(S, g, lambda y: f, x).primary
    np.testing.assert_allclose(v1, v2, atol=1e-9)


def test_normal_cone_step_matches_tangent_step_on_polyhedron():
    S = sets.box([0.0, 0.0], [1.0, 1.0])
    g = MetricField.constant([[2.0, 0.3], [0.3, 1.0]])
    f = lambda y: np.array([1.0, 0.4])  # noqa: E731
    x = np.array([1.0, 0.2])
    y = normal_cone_step(S, g, f, x, 0.1)
    v = project_field(S, g, f, x).primary
    np.testing.assert_allclose(y, x + 0.1 * v, atol=1e-12)
