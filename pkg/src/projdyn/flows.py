"""Gradient-type flows built on the projected dynamics."""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls as scipy_nnls

from ._validation import as_vector
from .dynamics import IntegratorConfig, integrate
from .geometry import finite_difference_jacobian
from .metric import hessian_metric
from .projection import normal_cone_generators, project_field

_QUARTIC_ROOT_EPS = np.finfo(float).eps ** 0.25


class ScalarField:
    """A potential with optional derivatives.

    Missing gradients fall back to central differences of ``value``.
    Missing Hessians fall back to central differences of an analytic
    gradient, or to second differences of ``value`` when there is none.
    """

    def __init__(self, value, gradient=None, hessian=None, name=None):
        self._value = value
        self._gradient = gradient
        self._hessian = hessian
        self.name = name or "psi"
        # Set by constructors whose Hessian does not depend on the point.
        self.constant_hessian = None

    def __call__(self, x):
        return float(self._value(np.asarray(x, dtype=float)))

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        if self._gradient is not None:
            return np.asarray(self._gradient(x), dtype=float).reshape(-1)
        return finite_difference_jacobian(lambda y: np.array([self._value(y)]), x)[0]

    def hessian(self, x):
        x = np.asarray(x, dtype=float)
        if self._hessian is not None:
            return np.asarray(self._hessian(x), dtype=float)
        if self._gradient is not None:
            H = finite_difference_jacobian(self.gradient, x)
            return 0.5 * (H + H.T)
        n = x.shape[0]
        steps = _QUARTIC_ROOT_EPS * (1.0 + np.abs(x))
        H = np.empty((n, n))
        for i in range(n):
            for j in range(i, n):
                ei = np.zeros(n)
                ej = np.zeros(n)
                ei[i] = steps[i]
                ej[j] = steps[j]
                H[i, j] = H[j, i] = (
                    self._value(x + ei + ej) - self._value(x + ei - ej)
                    - self._value(x - ei + ej) + self._value(x - ei - ej)
                ) / (4.0 * steps[i] * steps[j])
        return H

    def gradient_error(self, x):
        """Relative mismatch between ``gradient`` and central differences."""
        grad = self.gradient(x)
        fd = finite_difference_jacobian(lambda y: np.array([self._value(y)]), x)[0]
        return float(np.linalg.norm(grad - fd) / (1.0 + np.linalg.norm(grad)))

    @classmethod
    def quadratic(cls, Q, center=None, name="quadratic"):
        """``0.5 (x - c)' Q (x - c)`` with exact derivatives."""
        Q = np.asarray(Q, dtype=float)
        c = np.zeros(Q.shape[0]) if center is None else np.asarray(center, dtype=float)
        psi = cls(
            lambda x: 0.5 * (x - c) @ Q @ (x - c),
            lambda x: Q @ (x - c),
            lambda x: Q,
            name=name,
        )
        psi.constant_hessian = Q
        return psi


def grad_field(psi, g):
    """The metric gradient ``x -> G(x)^{-1} grad psi(x)``."""

    def field(x):
        return np.linalg.solve(g(x), psi.gradient(x))

    return field


@dataclass(frozen=True)
class Flow:
    """A set, a metric and a field, with a tag naming the construction.

    The same metric serves for the gradient and for the projection.
    """

    set: object
    metric: object
    field: object
    kind: str
    potential: object = None

    def project(self, x):
        return project_field(self.set, self.metric, self.field, x)

    def integrate(self, x0, horizon, cfg=None):
        return integrate(self.set, self.metric, self.field, x0, horizon, cfg or IntegratorConfig())

    def describe(self):
        return {"kind": self.kind, "metric": self.metric.name,
                "set": getattr(self.set, "name", "set"),
                "potential": getattr(self.potential, "name", None)}


def _negated(field):
    return lambda x: -field(x)


def projected_gradient_flow(S, g, psi):
    return Flow(S, g, _negated(grad_field(psi, g)), "gradient", psi)


def newton_flow(S, psi):
    """Projected gradient flow in the Hessian metric of ``psi``."""
    g = hessian_metric(psi)
    return Flow(S, g, _negated(grad_field(psi, g)), "newton", psi)


def raw_flow(S, g, f):
    return Flow(S, g, f, "raw-field")


def minimal_velocity(S, g, f, x):
    """Minimum-norm element of ``f(x) - N_x``, computed in whitened coordinates.

    With ``G = L L'`` the problem ``min |f - D a|_G`` over ``a >= 0`` is an
    ordinary NNLS problem for ``L'D`` and ``L'f``, solved here with SciPy's
    NNLS rather than the Gram-form solver used by :func:`project_field`.
    """
    x = as_vector(x, S.dim)
    fx = np.asarray(f(x), dtype=float)
    gens = normal_cone_generators(S, g, x).generators
    if gens.shape[0] == 0:
        return fx
    L = np.linalg.cholesky(g(x))
    coef, _ = scipy_nnls(L.T @ gens.T, L.T @ fx)
    return fx - gens.T @ coef


def normal_cone_step(S, g, f, x, dt):
    """One step of the normal-cone formulation, followed by restoration."""
    x = as_vector(x, S.dim)
    v = minimal_velocity(S, g, f, x)
    return S.project(x + dt * v, g, anchor=x)
