"""Metric projection of vector fields onto tangent cones.

:func:`project_field` evaluates the projected field at a point: for each
tangent-cone branch it finds the nearest cone element to ``f(x)`` in the
inner product ``G(x)`` and returns every branch that attains the minimum.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from ._validation import as_vector, make_rng
from .errors import IrregularityError, SamplerError
from .geometry import PolyhedralCone
from .nnls import nnls_gram

BRANCH_TIE_RTOL = 1e-9


@dataclass(frozen=True)
class ProjectionResult:
    """Projected field at one point.

    Attributes
    ----------
    projected : list of ndarray
        Distinct minimizers, primary branch first.
    normal_part : ndarray
        ``f(x) - projected[0]``.
    active_multipliers : list of (int, float)
        Dual weights of the primary branch's halfspace constraints.
    branch_values : list of float
        Squared metric distance from ``f(x)`` to each cone branch.
    field_value : ndarray
        ``f(x)``.
    """

    projected: list
    normal_part: np.ndarray
    active_multipliers: list
    branch_values: list
    field_value: np.ndarray
    branch_normals: list = field(default_factory=list)

    @property
    def primary(self):
        return self.projected[0]

    @property
    def is_single_valued(self):
        return len(self.projected) == 1

    def to_json(self):
        return {
            "v": self.primary.tolist(),
            "eta": self.normal_part.tolist(),
            "alpha": {str(i): a for i, a in self.active_multipliers},
            "branches": len(self.projected),
            "projected": [p.tolist() for p in self.projected],
        }


def _evaluate(f, x):
    return np.asarray(f(x), dtype=float).reshape(-1)


def project_field(S, g, f, x, f_x=None):
    """Project ``f(x)`` onto the tangent cone of ``S`` at ``x`` in metric ``g``.

    Parameters
    ----------
    S : FeasibleSet
    g : MetricField
    f : callable
        Vector field; ignored when ``f_x`` is given.
    x : array_like
        Feasible point.
    f_x : array_like, optional
        Precomputed field value.

    Returns
    -------
    ProjectionResult
    """
    x = as_vector(x, S.dim)
    fx = _evaluate(f, x) if f_x is None else as_vector(f_x, S.dim, "f_x")
    G = g(x)
    cones = S.tangent_cone(x)
    results = [cone.project(fx, G) for cone in cones]
    values = np.array([r.value for r in results])
    best = float(values.min())
    fnorm2 = float(fx @ G @ fx)
    slack = BRANCH_TIE_RTOL * best + 1e-15 * fnorm2
    winners = [i for i in np.flatnonzero(values <= best + slack)]
    projected, normals = [], []
    for i in winners:
        v = results[i].vector
        scale = 1e-12 * (1.0 + np.linalg.norm(fx))
        if any(np.linalg.norm(v - w) <= scale for w in projected):
            continue
        projected.append(v)
        normals.append(results[i].normal)
    primary = results[winners[0]]
    return ProjectionResult(
        projected=projected,
        normal_part=primary.normal,
        active_multipliers=list(primary.multipliers),
        branch_values=values.tolist(),
        field_value=fx,
        branch_normals=normals,
    )


@dataclass(frozen=True)
class MoreauReport:
    """Residuals of the Moreau identities, one entry per branch."""

    energy: list
    orthogonality: list
    tolerance: float

    @property
    def ok(self):
        return max(self.energy + self.orthogonality) <= self.tolerance


def moreau_check(r, g, x, f_x):
    """Residuals ``|<f,v>_g - |v|_g^2|`` and ``|<v, f - v>_g|`` per branch.

    Both should vanish for every branch whose cone is convex; the tolerance
    is ``1e-8 * (1 + |f|_g^2)``.
    """
    G = g(as_vector(x))
    fx = np.asarray(f_x, dtype=float)
    energy, ortho = [], []
    for v in r.projected:
        eta = fx - v
        energy.append(abs(float(fx @ G @ v - v @ G @ v)))
        ortho.append(abs(float(v @ G @ eta)))
    return MoreauReport(energy, ortho, 1e-8 * (1.0 + float(fx @ G @ fx)))


def normal_cone_generators(S, g, x):
    """Generator form of the metric normal cone at ``x``.

    The generators are ``G(x)^{-1} grad h_i(x)`` over active constraints.
    Interior points give an empty generator list, i.e. the cone ``{0}``.
    """
    x = as_vector(x, S.dim)
    if hasattr(S, "active_rows"):
        _, rows = S.active_rows(x)
    else:
        cones = S.tangent_cone(x)
        if len(cones) != 1 or cones[0].halfspace_rows is None:
            raise IrregularityError("normal cone needs a single halfspace-form tangent cone")
        rows = cones[0].halfspace_rows
    gens = np.linalg.solve(g(x), rows.T).T if rows.shape[0] else np.zeros((0, S.dim))
    return PolyhedralCone(S.dim, generators=gens)


@dataclass(frozen=True)
class KrasovskiiHull:
    """Sampled inner estimate of the Krasovskii regularization at a point.

    ``vertices`` are the extreme points of all projected vectors collected
    at the sample points; ``candidates`` keeps every collected vector.
    """

    vertices: np.ndarray
    sample_radius: float
    sample_count: int
    candidates: np.ndarray = None

    def distance(self, v):
        """Euclidean distance from ``v`` to the hull."""
        V = self.vertices
        v = np.asarray(v, dtype=float)
        if V.shape[0] == 1:
            return float(np.linalg.norm(V[0] - v))
        # Distance to the convex hull: min |V' lam - v| over the simplex,
        # with the affine constraint enforced by a heavily weighted row.
        weight = 1e4 * max(1.0, float(np.max(np.abs(V))))
        C = np.vstack([V.T, weight * np.ones(V.shape[0])])
        d = np.concatenate([v, [weight]])
        lam = nnls_gram(C.T @ C, C.T @ d)
        lam = lam / lam.sum()
        best = float(np.linalg.norm(V.T @ lam - v))
        # The penalty leaves an O(1/weight^2) error; re-solve exactly on the support.
        idx = np.flatnonzero(lam > 0.0)
        B = V[idx]
        k = idx.size
        K = np.zeros((k + 1, k + 1))
        K[:k, :k] = B @ B.T
        K[:k, k] = K[k, :k] = 1.0
        sol = np.linalg.lstsq(K, np.concatenate([B @ v, [1.0]]), rcond=None)[0]
        mu = sol[:k]
        if np.all(mu >= -1e-12) and abs(mu.sum() - 1.0) <= 1e-12:
            best = min(best, float(np.linalg.norm(B.T @ np.clip(mu, 0.0, None) - v)))
        return best

    def contains(self, v, tol=1e-9):
        return self.distance(v) <= tol * (1.0 + np.linalg.norm(v))

    def diameter(self):
        V = self.vertices
        diffs = V[:, None, :] - V[None, :, :]
        return float(np.max(np.linalg.norm(diffs, axis=-1)))


def _dedupe(points, tol):
    keys = np.round(points / tol).astype(np.int64) if tol > 0 else points
    _, first = np.unique(keys, axis=0, return_index=True)
    return points[np.sort(first)]


def hull_vertices(points, tol=1e-12):
    """Extreme points of a finite set; exact hull up to dimension 3."""
    P = np.asarray(points, dtype=float)
    scale = 1.0 + float(np.max(np.abs(P)))
    P = _dedupe(P, tol * scale)
    if P.shape[0] <= 1:
        return P
    n = P.shape[1]
    if n > 3:
        return P
    center = P.mean(axis=0)
    _, s, vt = np.linalg.svd(P - center)
    rank = int(np.sum(s > 1e-10 * scale))
    if rank == 0:
        return P[:1]
    coords = (P - center) @ vt[:rank].T
    if rank == 1:
        c = coords[:, 0]
        return P[[int(np.argmin(c)), int(np.argmax(c))]]
    try:
        hull = ConvexHull(coords)
    except QhullError:
        return P
    return P[np.sort(hull.vertices)]


def krasovskii_hull(S, g, f, x, radius, count=256, rng=0):
    """Estimate the Krasovskii regularization of the projected field at ``x``.

    Samples ``count - 1`` feasible points within ``radius`` of ``x``, adds
    ``x`` itself, evaluates every projection branch at each point and
    returns the convex hull of the collected vectors.
    """
    x = as_vector(x, S.dim)
    rng = make_rng(rng)
    pts = S.sample_neighborhood(x, radius, max(count - 1, 1), rng)
    if pts.shape[0] == 0:
        raise SamplerError(f"no samples near {x.tolist()}")
    vectors = list(project_field(S, g, f, x).projected)
    for p in pts:
        vectors.extend(project_field(S, g, f, p).projected)
    V = np.array(vectors)
    return KrasovskiiHull(hull_vertices(V), float(radius), int(pts.shape[0]) + 1, V)
