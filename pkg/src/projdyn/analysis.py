"""Sampling-based checks of regularity and of trajectory behaviour.

All estimators here are evidence, not certificates: a sampled supremum is
only a lower bound of the true one. Every estimator takes an explicit seed.
"""

from dataclasses import dataclass
from enum import Enum
from itertools import combinations

import numpy as np

from ._validation import as_vector, make_rng
from .dynamics import IntegratorConfig, integrate
from .errors import IrregularityError
from .projection import krasovskii_hull, normal_cone_generators, project_field


class ProxVerdict(str, Enum):
    PROX_REGULAR = "prox_regular_evidence"
    DIVERGENCE = "divergence_evidence"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class ProxReport:
    point: np.ndarray
    radii: list
    L_estimates: list
    verdict: ProxVerdict
    pair_counts: list

    def to_json(self):
        return {
            "point": self.point.tolist(),
            "radii": list(self.radii),
            "l_estimates": list(self.L_estimates),
            "verdict": self.verdict.value,
            "pair_counts": list(self.pair_counts),
        }


def prox_verdict(radii, estimates, growth=2.0):
    """Classify a sequence of proximal constants.

    Radii are sorted in decreasing order and the three smallest are
    inspected. Growth by at least ``growth`` at each shrink is divergence
    evidence; a net change of at most ``growth`` is evidence of a finite
    proximal constant; anything else is inconclusive.
    """
    order = np.argsort(radii)[::-1]
    L = np.asarray(estimates, dtype=float)[order][-3:]
    if L.size < 2:
        return ProxVerdict.INCONCLUSIVE
    if L[0] > 0 and all(b >= growth * a for a, b in zip(L, L[1:])):
        return ProxVerdict.DIVERGENCE
    if L[-1] <= growth * max(L[0], 0.0) or L[-1] <= 1e-12:
        return ProxVerdict.PROX_REGULAR
    return ProxVerdict.INCONCLUSIVE


def _unit_normal(gens, G, rng):
    weights = rng.uniform(0.0, 1.0, gens.shape[0])
    eta = weights @ gens
    norm = np.sqrt(eta @ G @ eta)
    return eta / norm if norm > 0 else None


def prox_estimate(S, g, x, radii=(1e-1, 1e-2, 1e-3), samples=10_000, seed=0):
    """Estimate the proximal constant of ``S`` near ``x`` at several radii.

    For each radius ``r`` a pool of feasible points is drawn from the shell
    ``r/10 <= |p - x| <= r`` together with ``x``. Pairs ``(y, z)`` are
    formed with ``y`` carrying a nonzero normal cone: every pool point is
    paired with ``x`` (when ``x`` has normals), and ``samples`` further pairs
    are drawn at random. The estimate is the largest quotient
    ``<eta, z - y>_G / |z - y|_G^2`` with ``eta`` a unit normal at ``y`` and
    ``G = G(y)``, clamped below at zero.
    """
    rng = make_rng(seed)
    x = as_vector(x, S.dim)
    estimates, counts = [], []
    for r in radii:
        pool = np.vstack([x[None, :], S.sample_neighborhood(x, r, samples, rng, inner=r / 10.0)])
        ys, etas, Gs = [], [], []
        for i, y in enumerate(pool):
            gens = normal_cone_generators(S, g, y).generators
            if gens.shape[0] == 0:
                continue
            G = g(y)
            eta = _unit_normal(gens, G, rng)
            if eta is not None:
                ys.append(i)
                etas.append(eta)
                Gs.append(G)
        if not ys:
            estimates.append(0.0)
            counts.append(0)
            continue
        ys = np.array(ys)
        etas, Gs = np.array(etas), np.array(Gs)
        pick_y = rng.integers(0, len(ys), samples)
        pick_z = rng.integers(0, pool.shape[0], samples)
        if ys[0] == 0:
            pick_y = np.concatenate([np.zeros(pool.shape[0], dtype=int), pick_y])
            pick_z = np.concatenate([np.arange(pool.shape[0]), pick_z])
        d = pool[pick_z] - pool[ys[pick_y]]
        G = Gs[pick_y]
        dd = np.einsum("ki,kij,kj->k", d, G, d)
        num = np.einsum("ki,kij,kj->k", etas[pick_y], G, d)
        ok = dd > 0
        L = float(np.max(num[ok] / dd[ok])) if ok.any() else 0.0
        estimates.append(max(L, 0.0))
        counts.append(int(ok.sum()))
    return ProxReport(x, list(radii), estimates, prox_verdict(radii, estimates), counts)


def one_sided_lipschitz(S, g, f, x, radius=0.1, samples=512, seed=0):
    """Largest sampled ``<Pf(y) - Pf(x), y - x>_G / |y - x|_G^2`` with ``G = G(x)``.

    Raises
    ------
    IrregularityError
        If the projected field has several branches at ``x`` or at a sample.
    """
    x = as_vector(x, S.dim)
    base = project_field(S, g, f, x)
    if not base.is_single_valued:
        raise IrregularityError(f"projected field is multi-valued at {x.tolist()}")
    G = g(x)
    best = 0.0
    pts = S.sample_neighborhood(x, radius, samples, make_rng(seed))
    first = True
    for y in pts:
        d = y - x
        dd = float(d @ G @ d)
        if dd == 0.0:
            continue
        r = project_field(S, g, f, y)
        if not r.is_single_valued:
            raise IrregularityError(f"projected field is multi-valued at {y.tolist()}")
        q = float((r.primary - base.primary) @ G @ d) / dd
        best = q if first else max(best, q)
        first = False
    return best


@dataclass(frozen=True)
class UniquenessReport:
    times: np.ndarray
    divergence: np.ndarray
    lipschitz: float
    perturbation: float
    flagged: bool
    envelope_ratio: float
    starts: np.ndarray

    @property
    def max_divergence(self):
        return float(np.max(self.divergence))

    def to_json(self):
        return {
            "max_divergence": self.max_divergence,
            "lipschitz": self.lipschitz,
            "perturbation": self.perturbation,
            "flagged": self.flagged,
            "envelope_ratio": self.envelope_ratio,
            "trajectories": int(self.starts.shape[0]),
        }


def _perturbed_starts(S, g, x0, eps, extra, rng):
    starts = [x0]
    for i in range(S.dim):
        for sign in (1.0, -1.0):
            y = x0.copy()
            y[i] += sign * eps
            starts.append(S.project(y, g))
    if extra:
        starts.extend(S.sample_neighborhood(x0, eps, extra, rng, inner=eps / 2.0))
    out = []
    for p in starts:
        if np.linalg.norm(p - x0) <= eps * (1.0 + 1e-9) and not any(
                np.array_equal(p, q) for q in out):
            out.append(p)
    return np.array(out)


def uniqueness_probe(S, g, f, x0, horizon, cfg=None, perturbation=1e-9,
                     lipschitz_radius=0.1, lipschitz_samples=512, extra=4, seed=0):
    """Compare trajectories started at ``x0`` and at nearby feasible points.

    The divergence ``D(t)`` is the largest pairwise distance at time ``t``
    divided by ``perturbation``. Under a one-sided Lipschitz bound ``L``
    Gronwall's inequality keeps ``D(t)`` below a small multiple of
    ``exp(L t)``; the report is flagged when ``D(t) > 10 exp(L t)``.
    """
    cfg = cfg or IntegratorConfig()
    rng = make_rng(seed)
    x0 = as_vector(x0, S.dim)
    if not S.contains(x0):
        x0 = S.project(x0, g)
    L = max(one_sided_lipschitz(S, g, f, x0, lipschitz_radius, lipschitz_samples, seed), 0.0)
    starts = _perturbed_starts(S, g, x0, perturbation, extra, rng)
    trajs = [integrate(S, g, f, p, horizon, cfg) for p in starts]
    n_steps = int(np.ceil(horizon / cfg.dt - 1e-9))
    times = np.minimum(np.arange(n_steps + 1) * cfg.dt, horizon)
    paths = np.array([[tr.state_at(t) for t in times] for tr in trajs])
    div = np.zeros(times.shape[0])
    for a, b in combinations(range(len(trajs)), 2):
        div = np.maximum(div, np.linalg.norm(paths[a] - paths[b], axis=1))
    div /= perturbation
    with np.errstate(divide="ignore"):
        log_ratio = np.log(np.maximum(div, 1e-300)) - (np.log(10.0) + L * times)
    ratio = float(np.exp(min(np.max(log_ratio), 700.0)))
    return UniquenessReport(times, div, L, perturbation, bool(np.max(log_ratio) > 0), ratio, starts)


@dataclass(frozen=True)
class LyapunovLog:
    """Potential along a trajectory.

    ``lie_samples[k]`` is ``D psi(x_k) v_k``; ``descent_gap[k]`` is
    ``D psi(x_k) v_k + |v_k|_G^2``, which is nonpositive for projected
    gradient flows. ``omega_speed`` is the largest ``|v|_G`` over the
    trailing window.
    """

    times: np.ndarray
    values: np.ndarray
    lie_samples: np.ndarray
    descent_gap: np.ndarray
    max_increase: float
    monotone: bool
    window_start: float
    omega_speed: float


def lasalle_monitor(S, g, psi, traj, window=0.1, tol=1e-8):
    values = np.array([psi(x) for x in traj.states])
    lie, gap, speed = [], [], []
    for x, v in zip(traj.states, traj.velocities):
        G = g(x)
        d = float(psi.gradient(x) @ v)
        vv = float(v @ G @ v)
        lie.append(d)
        gap.append(d + vv)
        speed.append(np.sqrt(max(vv, 0.0)))
    inc = float(np.max(np.diff(values))) if values.size > 1 else 0.0
    start = int(np.floor((1.0 - window) * (len(speed) - 1)))
    return LyapunovLog(
        traj.times, values, np.array(lie), np.array(gap), inc, inc <= tol,
        float(traj.times[start]), float(np.max(speed[start:])),
    )


def hausdorff(A, B):
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    if A.size == 0 or B.size == 0:
        return np.inf
    D = np.linalg.norm(A[:, None, :] - B[None, :, :], axis=-1)
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


def equivalence_residual(S, g, f, x, radius=1e-2, samples=256, seed=0):
    """Hausdorff distance between tangent hull vertices and the projected field.

    Vertices of the sampled Krasovskii hull that lie in the tangent cone at
    ``x`` are compared with the projection set at ``x``. Where the set is
    Clarke regular the two agree; an irregular point can leave extra
    vectors in the hull.
    """
    x = as_vector(x, S.dim)
    hull = krasovskii_hull(S, g, f, x, radius, samples, rng=seed)
    cones = S.tangent_cone(x)
    kept = [w for w in hull.vertices if any(c.contains(w, 1e-9) for c in cones)]
    return hausdorff(np.array(kept), np.array(project_field(S, g, f, x).projected))
