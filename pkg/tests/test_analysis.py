import numpy as np
import pytest

from projdyn import sets
from projdyn.analysis import (ProxVerdict, equivalence_residual, hausdorff, lasalle_monitor,
                              one_sided_lipschitz, prox_estimate, prox_verdict, uniqueness_probe)
from projdyn.dynamics import IntegratorConfig, integrate
from projdyn.errors import IrregularityError
from projdyn.flows import ScalarField, grad_field
from projdyn.geometry import SmoothInequalitySet
from projdyn.metric import MetricField

EUCLID = MetricField.euclidean(2)
RADII = [1e-1, 1e-2, 1e-3]


def test_prox_verdict_rule():
    assert prox_verdict(RADII, [1.0, 2.5, 6.0]) is ProxVerdict.DIVERGENCE
    assert prox_verdict(RADII, [1.0, 1.0, 1.5]) is ProxVerdict.PROX_REGULAR
    assert prox_verdict(RADII, [1.0, 3.0, 2.5]) is ProxVerdict.INCONCLUSIVE
    assert prox_verdict(RADII, [0.0, 0.0, 0.0]) is ProxVerdict.PROX_REGULAR
    # Order of the radii does not matter.
    assert prox_verdict(RADII[::-1], [6.0, 2.5, 1.0]) is ProxVerdict.DIVERGENCE
    assert prox_verdict([0.1], [1.0]) is ProxVerdict.INCONCLUSIVE


def test_prox_convex_set_has_zero_constant():
    rep = prox_estimate(sets.disk(), EUCLID, [1.0, 0.0], RADII, samples=2000, seed=0)
    assert max(rep.L_estimates) <= 1e-9
    assert rep.verdict is ProxVerdict.PROX_REGULAR
    assert all(c > 0 for c in rep.pair_counts)


def test_prox_disk_complement_has_half_inverse_radius():
    # Outside the unit disk: <-y, z - y> = |z - y|^2 / 2 for boundary pairs.
    S = SmoothInequalitySet(lambda x: np.array([1.0 - x @ x]), 2,
                            jac_h=lambda x: -2.0 * x[None, :])
    rep = prox_estimate(S, EUCLID, [1.0, 0.0], RADII, samples=2000, seed=0)
    # Points within act_tol = 1e-8 of the circle count as boundary points; at
    # pair distances near 1e-4 that offset inflates the quotient slightly.
    for L, bound in zip(rep.L_estimates, [1e-6, 1e-4, 1e-2]):
        assert 0.45 <= L <= 0.5 * (1.0 + bound)
    assert rep.verdict is ProxVerdict.PROX_REGULAR
    out = rep.to_json()
    assert out["verdict"] == "prox_regular_evidence"
    assert out["radii"] == RADII


def test_prox_is_seeded():
    a = prox_estimate(sets.x_alpha(0.6), EUCLID, [0.0, 0.0], [1e-2], samples=500, seed=3)
    b = prox_estimate(sets.x_alpha(0.6), EUCLID, [0.0, 0.0], [1e-2], samples=500, seed=3)
    assert a.L_estimates == b.L_estimates


def test_one_sided_lipschitz_linear_field():
    A = np.diag([1.0, -1.0])
    L = one_sided_lipschitz(SmoothInequalitySet.whole_space(2), EUCLID, lambda x: A @ x,
                            [0.0, 0.0], radius=0.1, samples=512)
    assert 0.9 <= L <= 1.0 + 1e-12


def test_one_sided_lipschitz_constant_field_on_halfplane():
    L = one_sided_lipschitz(sets.halfplane([0.0, -1.0]), EUCLID, lambda x: np.array([1.0, -1.0]),
                            [0.0, 0.0])
    assert L <= 1e-12


def test_one_sided_lipschitz_rejects_multivalued():
    with pytest.raises(IrregularityError):
        one_sided_lipschitz(sets.marble_run(), EUCLID, lambda x: np.array([0.0, 1.0]),
                            [0.0, 0.0])


def test_uniqueness_probe_on_halfplane():
    S = sets.halfplane([0.0, -1.0])
    rep = uniqueness_probe(S, EUCLID, lambda x: np.array([1.0, -1.0]), [0.0, 0.5], 1.0,
                           IntegratorConfig(dt=1e-2), perturbation=1e-6)
    assert not rep.flagged
    assert rep.max_divergence <= 2.0 + 1e-6
    assert rep.starts.shape[0] >= 5
    assert set(rep.to_json()) == {"max_divergence", "lipschitz", "perturbation", "flagged",
                                  "envelope_ratio", "trajectories"}


def test_lasalle_monitor_on_gradient_flow():
    S = sets.box([0.0, 0.0], [1.0, 1.0])
    psi = ScalarField.quadratic([[3.0, 1.0], [1.0, 2.0]], [2.0, 0.5])
    g = MetricField.constant([[1.5, 0.2], [0.2, 1.0]])
    f = lambda x: -grad_field(psi, g)(x)  # noqa: E731
    tr = integrate(S, g, f, [0.1, 0.9], 10.0, IntegratorConfig(dt=1e-2))
    log = lasalle_monitor(S, g, psi, tr)
    assert log.monotone
    assert np.max(log.descent_gap) <= 1e-10
    assert log.omega_speed <= 1e-6
    assert np.all(log.lie_samples <= 1e-12)


def test_hausdorff():
    assert hausdorff([[0, 0]], [[3, 4]]) == 5.0
    assert hausdorff([[0, 0], [1, 0]], [[0, 0]]) == 1.0
    assert hausdorff(np.zeros((0, 2)), [[0, 0]]) == np.inf


def test_equivalence_residual():
    f = lambda x: np.array([0.0, 1.0])  # noqa: E731
    r = equivalence_residual(sets.marble_run(), EUCLID, f, [0.0, 0.0], 0.5, 256, seed=0)
    assert r == pytest.approx(np.sqrt(0.5), abs=1e-9)
    r = equivalence_residual(sets.halfplane([0.0, -1.0]), EUCLID,
                             lambda x: np.array([1.0, -1.0]), [0.3, 0.0], 0.1, 256, seed=0)
    assert r <= 1e-12
