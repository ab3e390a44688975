"""Coordinate charts, pullback metrics, pushforward fields and atlases.

A :class:`Chart` is a diffeomorphism between open subsets of the same
Euclidean space. A :class:`Parametrization` maps chart coordinates into an
ambient space (for instance stereographic coordinates onto the unit
sphere); an :class:`Atlas` glues several of them and integrates projected
dynamics across chart switches.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import as_vector
from .dynamics import Event, IntegratorConfig, integrate, step
from .errors import ChartDomainError
from .geometry import SmoothInequalitySet, finite_difference_jacobian
from .metric import MetricField


def _always(x):
    return True


class Chart:
    """A diffeomorphism ``forward`` with its ``inverse`` and Jacobian."""

    def __init__(self, forward, inverse, jacobian=None, domain_test=None,
                 image_test=None, name=None):
        self.forward = forward
        self.inverse = inverse
        self._jacobian = jacobian
        self.domain_test = domain_test or _always
        self.image_test = image_test or _always
        self.name = name or "chart"

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        if self._jacobian is None:
            return finite_difference_jacobian(self.forward, x)
        return np.asarray(self._jacobian(x), dtype=float)

    def check(self, points):
        """Round-trip, Jacobian and conditioning residuals over ``points``."""
        roundtrip = jac_err = 0.0
        min_sv = np.inf
        for x in np.atleast_2d(points):
            roundtrip = max(roundtrip, float(np.linalg.norm(self.inverse(self.forward(x)) - x)))
            J = self.jacobian(x)
            fd = finite_difference_jacobian(self.forward, x)
            jac_err = max(jac_err, float(np.max(np.abs(J - fd))))
            min_sv = min(min_sv, float(np.linalg.svd(J, compute_uv=False)[-1]))
        return {"roundtrip": roundtrip, "jacobian": jac_err, "min_singular_value": min_sv}

    @classmethod
    def identity(cls, dim):
        eye = np.eye(dim)
        return cls(lambda x: np.array(x, dtype=float), lambda y: np.array(y, dtype=float),
                   lambda x: eye, name="identity")

    @classmethod
    def linear(cls, A, name="linear"):
        A = np.asarray(A, dtype=float)
        A_inv = np.linalg.inv(A)
        return cls(lambda x: A @ x, lambda y: A_inv @ y, lambda x: A, name=name)


def shear_chart():
    """``(x1, x2) -> (x1 + x2, x2)``."""
    return Chart.linear([[1.0, 1.0], [0.0, 1.0]], name="shear")


def inversion_chart(min_norm=1e-8):
    """``u -> u / |u|^2`` on the punctured plane; its own inverse."""

    def forward(u):
        u = np.asarray(u, dtype=float)
        return u / (u @ u)

    def jac(u):
        r2 = u @ u
        return (np.eye(u.shape[0]) * r2 - 2.0 * np.outer(u, u)) / r2 ** 2

    def away_from_origin(u):
        return float(np.linalg.norm(u)) > min_norm

    return Chart(forward, forward, jac, away_from_origin, away_from_origin, name="inversion")


def pullback_metric(c, g):
    """The metric ``x -> J(x)' G(forward(x)) J(x)``."""

    def func(x):
        J = c.jacobian(x)
        return J.T @ g(c.forward(x)) @ J

    return MetricField(func, name=f"pullback:{c.name}:{g.name}")


def pushforward_field(c, f):
    """The field ``y -> J(inverse(y)) f(inverse(y))``."""

    def field(y):
        if not c.image_test(y):
            raise ChartDomainError(f"point {np.asarray(y).tolist()} outside the image of {c.name}")
        x = c.inverse(y)
        return c.jacobian(x) @ np.asarray(f(x), dtype=float)

    return field


def image_set(c, S):
    """The image of a smooth set under a chart, as a smooth set.

    Constraints become ``h(inverse(y))`` with Jacobian
    ``grad h(x) J(x)^{-1}`` at ``x = inverse(y)``.
    """

    def h(y):
        return S.h(c.inverse(y))

    def jac(y):
        x = c.inverse(y)
        return np.linalg.solve(c.jacobian(x).T, S.jacobian(x).T).T

    return SmoothInequalitySet(
        h, S.dim, jac_h=jac, act_tol=S.act_tol, rank_tol=S.rank_tol,
        restore_tol=S.restore_tol, restore_radius=S.restore_radius,
        max_restore_iter=S.max_restore_iter, name=f"{c.name}({S.name})",
        num_constraints=S.num_constraints,
    )


@dataclass(frozen=True)
class HarnessReport:
    max_divergence: float
    dt: float
    horizon: float
    times: np.ndarray
    divergence: np.ndarray

    def to_json(self):
        return {"max_divergence": self.max_divergence, "dt": self.dt, "horizon": self.horizon}


def invariance_harness(c, S, g, f, x0, horizon, cfg=None):
    """Compare a trajectory computed in two coordinate systems.

    Integrates ``(S, pullback g, f)`` from ``x0`` and maps it through the
    chart, integrates ``(image of S, g, pushforward f)`` from the image of
    ``x0``, and returns the time-aligned distances in the image coordinates.

    Raises
    ------
    ChartDomainError
        If the first trajectory leaves the chart domain; the error names
        the exit time.
    """
    cfg = cfg or IntegratorConfig()
    x0 = as_vector(x0, S.dim)
    down = integrate(S, pullback_metric(c, g), f, x0, horizon, cfg)
    for t, x in zip(down.times, down.states):
        if not c.domain_test(x):
            raise ChartDomainError(f"trajectory left the domain of {c.name}", time=float(t))
    up = integrate(image_set(c, S), g, pushforward_field(c, f), c.forward(x0), horizon, cfg)
    n_steps = int(np.ceil(horizon / cfg.dt - 1e-9))
    times = np.minimum(np.arange(n_steps + 1) * cfg.dt, horizon)
    div = np.array([np.linalg.norm(c.forward(down.state_at(t)) - up.state_at(t)) for t in times])
    return HarnessReport(float(div.max()), cfg.dt, float(horizon), times, div)


class Parametrization:
    """Chart coordinates of a submanifold of an ambient space.

    ``from_coords`` maps coordinates to ambient points and ``to_coords``
    maps ambient points (on the manifold) back.
    """

    def __init__(self, to_coords, from_coords, from_jacobian, to_jacobian,
                 domain_test=None, name=None):
        self.to_coords = to_coords
        self.from_coords = from_coords
        self.from_jacobian = from_jacobian
        self.to_jacobian = to_jacobian
        self.domain_test = domain_test or _always
        self.name = name or "parametrization"

    def induced_metric(self):
        """Pullback of the ambient Euclidean metric."""

        def func(u):
            J = self.from_jacobian(u)
            return J.T @ J

        return MetricField(func, name=f"induced:{self.name}")

    def tangent_field(self, F):
        """Chart expression of an ambient field tangent to the manifold."""

        def field(u):
            J = self.from_jacobian(u)
            return np.linalg.lstsq(J, np.asarray(F(self.from_coords(u)), dtype=float), rcond=None)[0]

        return field


def stereographic(pole=1):
    """Stereographic coordinates of the unit sphere from the pole ``(0,0,pole)``.

    ``pole=1`` projects from the north pole: ``u = (p1, p2) / (1 - p3)``.
    ``pole=-1`` projects from the south pole: ``u = (p1, p2) / (1 + p3)``.
    """
    s = float(pole)

    def to_coords(p):
        return np.array([p[0], p[1]]) / (1.0 - s * p[2])

    def from_coords(u):
        r2 = u @ u
        return np.array([2.0 * u[0], 2.0 * u[1], s * (r2 - 1.0)]) / (1.0 + r2)

    def from_jacobian(u):
        r2 = u @ u
        d = (1.0 + r2) ** 2
        top = (2.0 * (1.0 + r2) * np.eye(2) - 4.0 * np.outer(u, u)) / d
        bottom = s * 4.0 * u / d
        return np.vstack([top, bottom[None, :]])

    def to_jacobian(p):
        w = 1.0 - s * p[2]
        return np.array([[1.0 / w, 0.0, s * p[0] / w ** 2],
                         [0.0, 1.0 / w, s * p[1] / w ** 2]])

    def in_domain(p):
        return abs(1.0 - s * p[2]) > 1e-12

    return Parametrization(to_coords, from_coords, from_jacobian, to_jacobian, in_domain,
                           name="north" if s > 0 else "south")


def round_metric():
    """Sphere metric in either stereographic chart: ``4 / (1 + |u|^2)^2 I``."""
    return MetricField(lambda u: 4.0 / (1.0 + u @ u) ** 2 * np.eye(2), name="round")


@dataclass(frozen=True)
class AtlasTrajectory:
    times: np.ndarray
    ambient: np.ndarray
    charts: list
    switches: list


class Atlas:
    """Several parametrizations of one manifold.

    Parameters
    ----------
    params : dict
        Name to :class:`Parametrization`.
    tol : float
        Tolerance for the transition consistency check.
    """

    def __init__(self, params, tol=1e-10):
        self.params = dict(params)
        self.tol = float(tol)

    def transition(self, i, j):
        """The chart ``to_j o from_i`` between coordinate patches."""
        a, b = self.params[i], self.params[j]
        return Chart(
            lambda x: b.to_coords(a.from_coords(x)),
            lambda y: a.to_coords(b.from_coords(y)),
            lambda x: b.to_jacobian(a.from_coords(x)) @ a.from_jacobian(x),
            domain_test=lambda x: b.domain_test(a.from_coords(x)),
            image_test=lambda y: a.domain_test(b.from_coords(y)),
            name=f"{i}->{j}",
        )

    def transition_residual(self, i, j, points):
        """Largest round-trip error of ``i -> j -> i`` on ``points``."""
        c = self.transition(i, j)
        return max(float(np.linalg.norm(c.inverse(c.forward(x)) - x))
                   for x in np.atleast_2d(points))

    def best_chart(self, p):
        return min(self.params, key=lambda k: np.linalg.norm(self.params[k].to_coords(p))
                   if self.params[k].domain_test(p) else np.inf)

    def integrate(self, h_ambient, F, p0, horizon, cfg=None, switch_norm=2.0,
                  num_constraints=1):
        """Integrate on the manifold, switching charts when ``|u| > switch_norm``.

        ``h_ambient`` is a constraint map on ambient points and ``F`` an
        ambient field tangent to the manifold. Each chart uses its induced
        metric. A chart switch re-expresses the state through the
        transition map and restarts the integrator.
        """
        cfg = cfg or IntegratorConfig()
        p = np.asarray(p0, dtype=float)
        name = self.best_chart(p)
        problems = {}
        for key, par in self.params.items():
            S = SmoothInequalitySet(lambda u, par=par: h_ambient(par.from_coords(u)), 2,
                                    name=f"{key}-patch", num_constraints=num_constraints)
            problems[key] = (S, par.induced_metric(), par.tangent_field(F))
        times, ambient, charts, switches = [0.0], [p], [name], []
        u = self.params[name].to_coords(p)
        t = 0.0
        while horizon - t > 1e-12 * max(1.0, horizon):
            if np.linalg.norm(u) > switch_norm:
                new = self.best_chart(self.params[name].from_coords(u))
                if new != name:
                    u = self.params[new].to_coords(self.params[name].from_coords(u))
                    switches.append(Event(t, (name,), (new,)))
                    name = new
            S, g, f = problems[name]
            dt = min(cfg.dt, horizon - t)
            local = cfg if dt == cfg.dt else IntegratorConfig(
                dt=dt, scheme=cfg.scheme, equil_tol=cfg.equil_tol,
                max_restore=cfg.max_restore, dt_floor=min(cfg.dt_floor, dt))
            u, _ = step(S, g, f, u, local)
            t += dt
            times.append(t)
            ambient.append(self.params[name].from_coords(u))
            charts.append(name)
        return AtlasTrajectory(np.array(times), np.array(ambient), charts, switches)


def sphere_atlas():
    return Atlas({"north": stereographic(1), "south": stereographic(-1)})
