"""Feasible sets, tangent cones and feasibility restoration.

Two set representations are supported:

* :class:`SmoothInequalitySet` for ``{x | h(x) <= 0}`` with linearly
  independent active gradients. Its tangent cone at ``x`` is the polyhedral
  cone ``{v | J_I v <= 0}`` built from the active rows of the Jacobian.
* :class:`OracleSet` for irregular sets whose tangent cones are finite
  unions of polyhedral cones supplied by callbacks.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import as_rows, as_vector, make_rng
from .errors import (
    DegenerateRankError,
    InfeasibleError,
    RestorationError,
    SamplerError,
    SolverError,
)
from .nnls import nnls_gram

_CBRT_EPS = np.cbrt(np.finfo(float).eps)


@dataclass(frozen=True)
class ConeProjection:
    """Nearest point of a cone to a vector in a fixed inner product.

    ``vector`` is the projection, ``normal`` is ``f - vector`` and ``value``
    the squared distance. For halfspace cones ``multipliers`` pairs each
    constraint label with its dual weight.
    """

    vector: np.ndarray
    normal: np.ndarray
    value: float
    multipliers: tuple = ()


@dataclass(frozen=True, eq=False)
class PolyhedralCone:
    """A polyhedral cone in halfspace form, generator form, or both.

    Parameters
    ----------
    dim : int
        Ambient dimension.
    halfspace_rows : (k, n) array_like, optional
        Rows ``a_i`` of the description ``{v | A v <= 0}``.
    generators : (m, n) array_like, optional
        Rows ``d_i`` of the description ``{sum alpha_i d_i | alpha >= 0}``.
    labels : tuple of int, optional
        Constraint index attached to each halfspace row.
    """

    dim: int
    halfspace_rows: np.ndarray = None
    generators: np.ndarray = None
    labels: tuple = field(default=None)

    def __post_init__(self):
        if self.halfspace_rows is None and self.generators is None:
            raise ValueError("a cone needs halfspace rows or generators")
        if self.halfspace_rows is not None:
            rows = np.array(as_rows(self.halfspace_rows, self.dim, "halfspace_rows"))
            rows.setflags(write=False)
            object.__setattr__(self, "halfspace_rows", rows)
            labels = self.labels
            if labels is None:
                labels = tuple(range(rows.shape[0]))
            if len(labels) != rows.shape[0]:
                raise ValueError("one label per halfspace row is required")
            object.__setattr__(self, "labels", tuple(int(i) for i in labels))
        if self.generators is not None:
            gens = np.array(as_rows(self.generators, self.dim, "generators"))
            gens.setflags(write=False)
            object.__setattr__(self, "generators", gens)

    @classmethod
    def whole_space(cls, dim):
        return cls(dim, halfspace_rows=np.zeros((0, dim)))

    @classmethod
    def from_halfspaces(cls, rows, dim=None, labels=None):
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        return cls(dim or rows.shape[1], halfspace_rows=rows, labels=labels)

    @classmethod
    def from_generators(cls, generators, dim=None):
        gens = np.asarray(generators, dtype=float)
        if dim is None:
            dim = np.atleast_2d(gens).shape[1]
        return cls(dim, generators=gens)

    @property
    def is_whole_space(self):
        return self.halfspace_rows is not None and self.halfspace_rows.shape[0] == 0

    def project(self, f, G):
        """Project ``f`` onto the cone in the inner product ``G``.

        Halfspace form is solved through the dual problem over the
        metric normal generators ``G^{-1} a_i``; generator form is solved
        as a nonnegative least-squares problem in the coefficients.
        """
        f = np.asarray(f, dtype=float)
        if self.halfspace_rows is not None:
            A = self.halfspace_rows
            if A.shape[0] == 0:
                return ConeProjection(f.copy(), np.zeros_like(f), 0.0)
            D = np.linalg.solve(G, A.T)
            alpha = nnls_gram(A @ D, A @ f)
            normal = D @ alpha
            mult = tuple((lab, float(a)) for lab, a in zip(self.labels, alpha))
            return ConeProjection(f - normal, normal, float(normal @ G @ normal), mult)
        gens = self.generators
        if gens.shape[0] == 0:
            return ConeProjection(np.zeros_like(f), f.copy(), float(f @ G @ f))
        GD = G @ gens.T
        beta = nnls_gram(gens @ GD, GD.T @ f)
        v = gens.T @ beta
        normal = f - v
        return ConeProjection(v, normal, float(normal @ G @ normal))

    def contains(self, v, tol=1e-9):
        """Membership test with tolerance relative to ``1 + |v|``."""
        v = np.asarray(v, dtype=float)
        slack = tol * (1.0 + np.linalg.norm(v))
        if self.halfspace_rows is not None:
            A = self.halfspace_rows
            if A.shape[0] == 0:
                return True
            scale = np.linalg.norm(A, axis=1)
            return bool(np.all(A @ v <= slack * np.maximum(scale, 1.0)))
        proj = self.project(v, np.eye(self.dim))
        return bool(np.linalg.norm(proj.normal) <= slack)

    def consistency_residual(self):
        """Largest membership violation between the two descriptions.

        Returns 0 when only one form is present.
        """
        if self.halfspace_rows is None or self.generators is None:
            return 0.0
        A = self.halfspace_rows
        worst = 0.0
        if A.shape[0] and self.generators.shape[0]:
            worst = max(worst, float(np.max(A @ self.generators.T)))
        # Extreme rays of the halfspace form: sample directions and check
        # that their halfspace projection is reachable from the generators.
        rng = np.random.default_rng(0)
        gen_only = PolyhedralCone(self.dim, generators=self.generators)
        half_only = PolyhedralCone(self.dim, halfspace_rows=A, labels=self.labels)
        eye = np.eye(self.dim)
        for _ in range(64):
            v = half_only.project(rng.standard_normal(self.dim), eye).vector
            worst = max(worst, float(np.linalg.norm(gen_only.project(v, eye).normal)))
        return worst


def finite_difference_jacobian(func, x):
    """Central-difference Jacobian with step ``cbrt(eps) * (1 + |x_i|)``."""
    x = np.asarray(x, dtype=float)
    f0 = np.atleast_1d(func(x))
    J = np.empty((f0.shape[0], x.shape[0]))
    for i in range(x.shape[0]):
        step = _CBRT_EPS * (1.0 + abs(x[i]))
        e = np.zeros_like(x)
        e[i] = step
        J[:, i] = (np.atleast_1d(func(x + e)) - np.atleast_1d(func(x - e))) / (2.0 * step)
    return J


def _random_directions(rng, count, dim):
    d = rng.standard_normal((count, dim))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def _shell_radii(rng, count, dim, radius, inner):
    if inner > 0.0:
        return np.exp(rng.uniform(np.log(inner), np.log(radius), count))
    return radius * rng.uniform(0.0, 1.0, count) ** (1.0 / dim)


class FeasibleSet:
    """Common interface of feasible sets."""

    dim: int
    name: str

    def contains(self, x, tol=None):
        raise NotImplementedError

    def active_set(self, x):
        raise NotImplementedError

    def tangent_cone(self, x):
        raise NotImplementedError

    def sample_neighborhood(self, x, radius, count, rng=None, inner=0.0):
        raise NotImplementedError

    def project(self, y, g, anchor=None, max_iter=None):
        raise NotImplementedError


class SmoothInequalitySet(FeasibleSet):
    """The set ``{x | h(x) <= 0}`` for a smooth constraint map ``h``.

    Parameters
    ----------
    h : callable
        Maps an n-vector to an m-vector of constraint values.
    dim : int
        Ambient dimension n.
    jac_h : callable, optional
        Maps an n-vector to the (m, n) Jacobian. Central differences are
        used when omitted.
    act_tol : float
        Base active-set tolerance. Constraint ``i`` is active when
        ``h_i(x) >= -act_tol * (1 + |h_i(x)|)``.
    rank_tol : float
        Relative singular-value cutoff for the constraint qualification.
    restore_tol : float
        Feasibility and stationarity tolerance for :meth:`project`.
    restore_radius : float
        Largest displacement :meth:`project` may apply.
    max_restore_iter : int
        Iteration cap of the restoration loop.
    num_constraints : int, optional
        Length of ``h``; probed at the origin when omitted.
    """

    def __init__(self, h, dim, jac_h=None, act_tol=1e-8, rank_tol=1e-10,
                 restore_tol=1e-11, restore_radius=np.inf, max_restore_iter=50,
                 name=None, num_constraints=None):
        if act_tol < 0:
            raise ValueError("act_tol must be nonnegative")
        self._h = h
        self._jac = jac_h
        self.dim = int(dim)
        self.act_tol = float(act_tol)
        self.rank_tol = float(rank_tol)
        self.restore_tol = float(restore_tol)
        self.restore_radius = float(restore_radius)
        self.max_restore_iter = int(max_restore_iter)
        self.name = name or "smooth"
        if num_constraints is None:
            num_constraints = np.atleast_1d(h(np.zeros(self.dim))).shape[0]
        self.num_constraints = int(num_constraints)

    @classmethod
    def whole_space(cls, dim, name="whole-space"):
        return cls(lambda x: np.zeros(0), dim, jac_h=lambda x: np.zeros((0, dim)), name=name)

    def h(self, x):
        return np.atleast_1d(np.asarray(self._h(x), dtype=float))

    def jacobian(self, x):
        if self.num_constraints == 0:
            return np.zeros((0, self.dim))
        if self._jac is None:
            return finite_difference_jacobian(self._h, x)
        return np.atleast_2d(np.asarray(self._jac(x), dtype=float))

    def _tolerances(self, hx):
        return self.act_tol * (1.0 + np.abs(hx))

    def contains(self, x, tol=None):
        hx = self.h(as_vector(x, self.dim))
        bound = self._tolerances(hx) if tol is None else tol
        return bool(np.all(hx <= bound))

    def active_set(self, x):
        """Sorted indices of constraints with ``h_i(x) >= -tol``."""
        hx = self.h(as_vector(x, self.dim))
        tol = self._tolerances(hx)
        bad = np.flatnonzero(hx > tol)
        if bad.size:
            i = int(bad[np.argmax(hx[bad])])
            raise InfeasibleError(i, hx[i], tol[i])
        return tuple(int(i) for i in np.flatnonzero(hx >= -tol))

    def active_rows(self, x):
        """Active indices and the matching Jacobian rows, rank-checked."""
        active = self.active_set(x)
        if not active:
            return active, np.zeros((0, self.dim))
        rows = self.jacobian(x)[list(active)]
        sv = np.linalg.svd(rows, compute_uv=False)
        if sv.size < len(active) or sv[0] == 0.0 or sv[-1] <= self.rank_tol * sv[0]:
            raise DegenerateRankError(active, sv)
        return active, rows

    def tangent_cone(self, x):
        active, rows = self.active_rows(x)
        return [PolyhedralCone(self.dim, halfspace_rows=rows, labels=active)]

    def sample_neighborhood(self, x, radius, count, rng=None, inner=0.0):
        """Feasible points with ``inner <= |p - x| <= radius``.

        Half the budget is spent on rejection samples from the ball (or
        shell), half on points pushed onto a nearby constraint surface, so
        that boundary behaviour is represented even in thin neighborhoods.
        """
        rng = make_rng(rng)
        x = as_vector(x, self.dim)
        count = int(count)
        if count <= 0:
            return np.zeros((0, self.dim))
        n_boundary = count // 2 if self.num_constraints else 0
        pts = self._rejection_samples(x, radius, count - n_boundary, rng, inner)
        bnd = self._boundary_samples(x, radius, n_boundary, rng, inner)
        short = count - len(pts) - len(bnd)
        if short > 0 and len(bnd) < n_boundary and len(pts):
            pts += self._rejection_samples(x, radius, short, rng, inner)
        elif short > 0 and n_boundary:
            bnd += self._boundary_samples(x, radius, short, rng, inner)
        out = pts + bnd
        if not out:
            raise SamplerError(f"no feasible samples within radius {radius} of {x.tolist()}")
        return np.array(out[:count])

    def _rejection_samples(self, x, radius, count, rng, inner):
        found = []
        for _ in range(20):
            if len(found) >= count:
                break
            k = 2 * (count - len(found)) + 8
            cand = x + _shell_radii(rng, k, self.dim, radius, inner)[:, None] * _random_directions(rng, k, self.dim)
            for p in cand:
                if np.all(self.h(p) <= 0.0):
                    found.append(p)
                    if len(found) >= count:
                        break
        return found

    def _boundary_samples(self, x, radius, count, rng, inner):
        found = []
        for _ in range(20):
            if len(found) >= count:
                break
            k = 2 * (count - len(found)) + 8
            cand = x + _shell_radii(rng, k, self.dim, radius, inner)[:, None] * _random_directions(rng, k, self.dim)
            for p in cand:
                q = self._push_to_surface(p)
                if q is None:
                    continue
                dist = np.linalg.norm(q - x)
                if inner <= dist <= radius and np.all(self.h(q) <= self._tolerances(0.0) * 1e-2):
                    found.append(q)
                    if len(found) >= count:
                        break
        return found

    def _push_to_surface(self, p):
        J = self.jacobian(p)
        hp = self.h(p)
        norms = np.linalg.norm(J, axis=1)
        if not np.any(norms > 0):
            return None
        i = int(np.argmax(np.where(norms > 0, hp / np.where(norms > 0, norms, 1.0), -np.inf)))
        q = p.copy()
        for _ in range(40):
            hi = self.h(q)[i]
            gi = self.jacobian(q)[i]
            gg = gi @ gi
            if gg == 0.0:
                return None
            q = q - hi * gi / gg
            if abs(self.h(q)[i]) <= 1e-15 * (1.0 + np.linalg.norm(q)):
                break
        return q

    def project(self, y, g, anchor=None, max_iter=None):
        """Restore feasibility of ``y`` by a metric nearest-point iteration.

        Sequential quadratic programming on ``min |z - y|_G^2`` subject to
        ``h(z) <= 0``: each subproblem linearises the constraints at the
        current point, adds their multiplier-weighted curvature to ``G``
        and is solved through the dual NNLS. If the iteration fails and a
        feasible ``anchor`` is given, the result falls back to bisection on
        the segment from ``anchor`` toward the last iterate. ``max_iter``
        overrides ``max_restore_iter`` for this call.
        """
        y = as_vector(y, self.dim, "y")
        hx = self.h(y)
        if self.num_constraints == 0 or np.max(hx) <= 0.0:
            return y.copy()
        x = y.copy()
        mu = np.zeros(self.num_constraints)
        converged = False
        for _ in range(self.max_restore_iter if max_iter is None else int(max_iter)):
            J = self.jacobian(x)
            G = g(x)
            H = self._lagrangian_hessian(x, G, mu)
            D = np.linalg.solve(H, J.T)
            rhs = hx - J @ np.linalg.solve(H, G @ (x - y))
            try:
                mu = nnls_gram(J @ D, rhs)
            except SolverError as exc:
                raise RestorationError("restoration subproblem failed", x, np.max(hx)) from exc
            z = x - np.linalg.solve(H, G @ (x - y)) - D @ mu
            step = np.linalg.norm(z - x)
            x, hx = z, self.h(z)
            if np.max(hx) <= self.restore_tol and step <= 1e-13 * (1.0 + np.linalg.norm(x)):
                converged = True
                break
        if not converged and np.max(hx) > self.restore_tol:
            if anchor is not None:
                return self._bisect_from(anchor, x)
            raise RestorationError("restoration did not converge", x, np.max(hx))
        if np.linalg.norm(x - y) > self.restore_radius:
            raise RestorationError("restoration moved beyond restore_radius", x, np.max(hx))
        return x

    def _lagrangian_hessian(self, x, G, mu):
        """``G + sum_i mu_i D^2 h_i(x)``, or ``G`` if that is not positive definite."""
        if not np.any(mu > 0.0):
            return G
        idx = np.flatnonzero(mu > 0.0)
        H = np.zeros_like(G)
        for k in range(self.dim):
            step = _CBRT_EPS * (1.0 + abs(x[k]))
            e = np.zeros(self.dim)
            e[k] = step
            dJ = (self.jacobian(x + e)[idx] - self.jacobian(x - e)[idx]) / (2.0 * step)
            H[:, k] = mu[idx] @ dJ
        H = G + 0.5 * (H + H.T)
        try:
            np.linalg.cholesky(H)
        except np.linalg.LinAlgError:
            return G
        return H

    def _bisect_from(self, anchor, target):
        a = as_vector(anchor, self.dim, "anchor")
        if np.max(self.h(a)) > self.restore_tol:
            raise RestorationError("bisection anchor is infeasible", target, np.max(self.h(target)))
        lo, hi = 0.0, 1.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if np.max(self.h(a + mid * (target - a))) <= 0.0:
                lo = mid
            else:
                hi = mid
        return a + lo * (target - a)

    def stationarity_residual(self, x, y, g):
        """Metric norm of the projection of ``y - x`` onto ``T_x``.

        Zero exactly when ``x`` is a stationary point of the nearest-point
        problem for ``y``.
        """
        G = g(x)
        cone = self.tangent_cone(x)[0]
        v = cone.project(np.asarray(y) - np.asarray(x), G).vector
        return float(np.sqrt(max(v @ G @ v, 0.0)))


class OracleSet(FeasibleSet):
    """A feasible set described by callbacks.

    Parameters
    ----------
    dim : int
        Ambient dimension.
    member : callable
        ``member(x, tol) -> bool``.
    tangent_cone_at : callable
        ``x -> list[PolyhedralCone]``; the tangent cone is their union.
    neighborhood_sampler : callable
        ``(x, radius, count, rng, inner) -> (k, n) array`` of feasible points.
    projector : callable, optional
        ``(y, G) -> x`` nearest feasible point; needed for integration.
    labels : callable, optional
        ``x -> tuple`` of piece labels reported as the active set.
    tol : float
        Default membership tolerance.
    """

    def __init__(self, dim, member, tangent_cone_at, neighborhood_sampler,
                 projector=None, labels=None, tol=1e-9, name=None):
        self.dim = int(dim)
        self._member = member
        self._cones = tangent_cone_at
        self._sampler = neighborhood_sampler
        self._projector = projector
        self._labels = labels
        self.tol = float(tol)
        self.name = name or "oracle"

    def contains(self, x, tol=None):
        return bool(self._member(as_vector(x, self.dim), self.tol if tol is None else tol))

    def active_set(self, x):
        x = as_vector(x, self.dim)
        if not self.contains(x):
            raise InfeasibleError(-1, np.nan, self.tol)
        return tuple(self._labels(x)) if self._labels else ()

    def tangent_cone(self, x):
        cones = list(self._cones(as_vector(x, self.dim)))
        if not cones:
            raise ValueError("oracle returned no tangent cone branches")
        return cones

    def sample_neighborhood(self, x, radius, count, rng=None, inner=0.0):
        pts = np.asarray(self._sampler(as_vector(x, self.dim), radius, int(count),
                                       make_rng(rng), inner), dtype=float)
        if pts.size == 0:
            raise SamplerError(f"oracle sampler returned no points near {list(x)}")
        return pts.reshape(-1, self.dim)

    def project(self, y, g, anchor=None, max_iter=None):
        if self._projector is None:
            raise NotImplementedError(f"{self.name} has no nearest-point projector")
        y = as_vector(y, self.dim, "y")
        return as_vector(self._projector(y, g(y)), self.dim)


def active_set(S, x):
    return S.active_set(x)


def tangent_cone(S, x):
    return S.tangent_cone(x)


def project_to_set(S, y, g, anchor=None):
    """Nearest feasible point of ``y`` in the metric ``g`` (see ``S.project``)."""
    return S.project(y, g, anchor=anchor)
