"""Constructors for the feasible sets used by the built-in scenarios."""

import math

import numpy as np

from .geometry import OracleSet, PolyhedralCone, SmoothInequalitySet


def halfspaces(A, b, name="polyhedron", **kwargs):
    """The polyhedron ``{x | A x <= b}``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).reshape(-1)
    A.setflags(write=False)
    b.setflags(write=False)
    return SmoothInequalitySet(lambda x: A @ x - b, A.shape[1], jac_h=lambda x: A,
                               name=name, **kwargs)


def box(lower, upper, name="box", **kwargs):
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    n = lower.shape[0]
    A = np.vstack([np.eye(n), -np.eye(n)])
    b = np.concatenate([upper, -lower])
    return halfspaces(A, b, name=name, **kwargs)


def polygon(vertices, name="polygon", **kwargs):
    """Convex polygon from counter-clockwise vertices."""
    V = np.asarray(vertices, dtype=float)
    edges = np.roll(V, -1, axis=0) - V
    normals = np.column_stack([edges[:, 1], -edges[:, 0]])
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    b = np.einsum("ij,ij->i", normals, V)
    return halfspaces(normals, b, name=name, **kwargs)


def halfplane(normal, offset=0.0, name="halfplane", **kwargs):
    """``{x | normal . x <= offset}``."""
    return halfspaces([normal], [offset], name=name, **kwargs)


def disk(center=(0.0, 0.0), radius=1.0, name="disk", **kwargs):
    c = np.asarray(center, dtype=float)
    r2 = float(radius) ** 2
    return SmoothInequalitySet(
        lambda x: np.array([(x - c) @ (x - c) - r2]),
        c.shape[0],
        jac_h=lambda x: 2.0 * (x - c)[None, :],
        name=name,
        **kwargs,
    )


def x_alpha(alpha, name=None, **kwargs):
    """The cusp set ``{x | x1 <= |x2|**(1/alpha)}`` in the plane.

    For ``0 < alpha < 1`` the constraint is continuously differentiable with
    nonzero gradient, so the smooth machinery applies. At the origin the
    tangent cone is ``{v1 <= 0}``.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    p = 1.0 / alpha

    def h(x):
        return np.array([x[0] - abs(x[1]) ** p])

    def jac(x):
        return np.array([[1.0, -p * math.copysign(abs(x[1]) ** (p - 1.0), x[1])]])

    return SmoothInequalitySet(h, 2, jac_h=jac, name=name or f"x-alpha:{alpha:g}", **kwargs)


def sphere_cap_constraint(base_radius=1.3, notch_depth=0.15, notch_width=4.0, notch_angle=0.0):
    """Constraint and Jacobian of the notched disk used on the sphere.

    In north stereographic coordinates the set is ``|u| <= R(theta)`` with
    ``R(theta) = R0 * (1 - depth * exp(width * (cos(theta - theta0) - 1)))``.
    """

    def radius(theta):
        return base_radius * (1.0 - notch_depth * np.exp(notch_width * (np.cos(theta - notch_angle) - 1.0)))

    def radius_prime(theta):
        bump = np.exp(notch_width * (np.cos(theta - notch_angle) - 1.0))
        return base_radius * notch_depth * notch_width * np.sin(theta - notch_angle) * bump

    def h(u):
        theta = math.atan2(u[1], u[0])
        return np.array([u @ u - radius(theta) ** 2])

    def jac(u):
        r2 = u @ u
        if r2 < 1e-24:
            return 2.0 * u[None, :]
        theta = math.atan2(u[1], u[0])
        dtheta = np.array([-u[1], u[0]]) / r2
        return (2.0 * u - 2.0 * radius(theta) * radius_prime(theta) * dtheta)[None, :]

    return h, jac, radius


def sphere_cap(base_radius=1.3, notch_depth=0.15, notch_width=4.0, notch_angle=0.0,
               name="sphere-cap", **kwargs):
    """Notched cap of the unit sphere, expressed in the north chart."""
    h, jac, _ = sphere_cap_constraint(base_radius, notch_depth, notch_width, notch_angle)
    return SmoothInequalitySet(h, 2, jac_h=jac, name=name, **kwargs)


class MarbleRun:
    """Zigzag staircase accumulating at the origin.

    With ``c_k = 2 / 9**k`` the right half consists, for every ``k >= 0``,
    of a descending segment from ``(c/3, c/3)`` to ``(c, -c)`` and an
    ascending segment from ``(c, -c)`` to ``(3c, 3c)``. The left half is
    its mirror image in ``x1``, and the origin is added. The upper vertices
    ``(c/3, c/3)`` are equilibria of the upward field ``(0, 1)``; the
    tangent cone at the origin is the double sector ``|v2| <= |v1|``.
    """

    def __init__(self, depth_ratio=1e-9, k_max=None):
        self.depth_ratio = float(depth_ratio)
        self.k_max = k_max

    @staticmethod
    def scale(k):
        return 2.0 / 9.0 ** k

    def _k_range(self, lo, hi):
        """Indices whose segments have ``|x1|`` range meeting ``[lo, hi]``."""
        if hi <= 0.0:
            return range(0)
        k_lo = max(0, math.floor(math.log(2.0 / (3.0 * hi), 9.0)) - 1)
        floor_c = max(lo / 3.0, hi * self.depth_ratio)
        k_hi = math.ceil(math.log(2.0 / floor_c, 9.0)) + 1
        if self.k_max is not None:
            k_hi = min(k_hi, self.k_max)
        return range(k_lo, k_hi + 1)

    def segments(self, lo, hi):
        """Segments ``(a, b, label)`` whose ``|x1|`` span meets ``[lo, hi]``."""
        out = []
        for k in self._k_range(lo, hi):
            c = self.scale(k)
            if c / 3.0 > hi or 3.0 * c < lo:
                continue
            for sign, tag in ((1.0, "+"), (-1.0, "-")):
                top = np.array([sign * c / 3.0, c / 3.0])
                low = np.array([sign * c, -c])
                peak = np.array([sign * 3.0 * c, 3.0 * c])
                out.append((top, low, f"D{k}{tag}"))
                out.append((low, peak, f"A{k}{tag}"))
        return out

    @staticmethod
    def _closest(a, b, y, G):
        d = b - a
        t = float(np.clip(((y - a) @ G @ d) / (d @ G @ d), 0.0, 1.0))
        return a + t * d, t

    def _near(self, x, reach):
        ax = abs(x[0])
        return self.segments(max(0.0, ax - reach), ax + reach)

    def member(self, x, tol):
        scale = np.linalg.norm(x)
        if scale <= tol:
            return True
        eye = np.eye(2)
        for a, b, _ in self._near(x, scale):
            p, _ = self._closest(a, b, x, eye)
            if np.linalg.norm(p - x) <= tol * scale:
                return True
        return False

    def _incident(self, x, tol):
        """Segments through ``x`` with the position parameter on each."""
        scale = np.linalg.norm(x)
        eye = np.eye(2)
        hits = []
        for a, b, label in self._near(x, 0.5 * scale):
            p, t = self._closest(a, b, x, eye)
            if np.linalg.norm(p - x) <= tol * scale:
                length = np.linalg.norm(b - a)
                end_tol = tol * scale / length
                hits.append((a, b, label, t, end_tol))
        return hits

    def tangent_cones(self, x, tol):
        if np.linalg.norm(x) <= tol:
            return [
                PolyhedralCone.from_halfspaces([[-1.0, 1.0], [-1.0, -1.0]]),
                PolyhedralCone.from_halfspaces([[1.0, 1.0], [1.0, -1.0]]),
            ]
        hits = self._incident(x, tol)
        if not hits:
            raise ValueError(f"point {x.tolist()} is not on the marble run")
        rays = []
        for a, b, _, t, end_tol in hits:
            d = (b - a) / np.linalg.norm(b - a)
            if t > end_tol:
                rays.append(-d)
            if t < 1.0 - end_tol:
                rays.append(d)
        if len(hits) == 1 and len(rays) == 2:
            normal = np.array([-rays[1][1], rays[1][0]])
            return [PolyhedralCone.from_halfspaces([normal, -normal])]
        return [PolyhedralCone.from_generators([r]) for r in rays]

    def labels(self, x, tol):
        if np.linalg.norm(x) <= tol:
            return ("origin",)
        return tuple(sorted(h[2] for h in self._incident(x, tol)))

    def project(self, y, G):
        best, best_val = np.zeros(2), float(y @ G @ y)
        if best_val == 0.0:
            return best
        kappa = np.linalg.cond(G)
        reach = np.linalg.norm(y) * math.sqrt(kappa)
        for a, b, _ in self._near(y, reach):
            p, _ = self._closest(a, b, y, G)
            val = float((p - y) @ G @ (p - y))
            if val < best_val:
                best, best_val = p, val
        return best

    def sample(self, x, radius, count, rng, inner=0.0):
        """Vertices in the shell plus points spread along the clipped pieces."""
        pieces, verts = [], [np.zeros(2)]
        for a, b, _ in self._near(x, radius):
            d = b - a
            # Solve |a + t d - x| = radius for the clipped parameter interval.
            e = a - x
            qa, qb, qc = d @ d, 2.0 * (e @ d), e @ e - radius ** 2
            disc = qb * qb - 4.0 * qa * qc
            if disc <= 0.0:
                continue
            r = math.sqrt(disc)
            t0, t1 = max(0.0, (-qb - r) / (2 * qa)), min(1.0, (-qb + r) / (2 * qa))
            if t1 <= t0:
                continue
            pieces.append((a + t0 * d, a + t1 * d))
            verts.extend([a, b])
        verts = [v for v in verts if inner <= np.linalg.norm(v - x) <= radius]
        out = list(verts)
        if pieces:
            lengths = np.array([np.linalg.norm(q - p) for p, q in pieces])
            picks = rng.choice(len(pieces), size=max(count - len(out), 0),
                               p=lengths / lengths.sum())
            for i in picks:
                p, q = pieces[i]
                pt = p + rng.uniform() * (q - p)
                if inner <= np.linalg.norm(pt - x) <= radius:
                    out.append(pt)
        return np.array(out[:max(count, len(verts))]) if out else np.zeros((0, 2))


def marble_run(tol=1e-9, name="marble-run"):
    run = MarbleRun()
    return OracleSet(
        2,
        member=run.member,
        tangent_cone_at=lambda x: run.tangent_cones(x, tol),
        neighborhood_sampler=run.sample,
        projector=run.project,
        labels=lambda x: run.labels(x, tol),
        tol=tol,
        name=name,
    )


def equilibrium_point(k):
    """Upper vertex ``(2/3**(1+2k), 2/3**(1+2k))`` of the marble run."""
    c = 2.0 / 3.0 ** (1 + 2 * k)
    return np.array([c, c])
