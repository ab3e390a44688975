"""Riemannian metrics given as matrix-valued fields.

A :class:`MetricField` wraps a callable ``x -> G(x)`` and validates every
evaluation: the matrix must be symmetric and positive definite. Constant
metrics are validated once and reused.
"""

from dataclasses import dataclass
import json

import numpy as np

from ._validation import as_square
from .errors import DefinitenessError


@dataclass(frozen=True)
class MetricDiagnostics:
    """Eigenvalue bounds of ``G(x)`` at one point."""

    lambda_min: float
    lambda_max: float
    kappa: float


class MetricField:
    """A field of symmetric positive-definite matrices.

    Parameters
    ----------
    func : callable
        Maps an n-vector to an (n, n) array.
    lipschitz_hint : float, optional
        Known Lipschitz constant of ``func``, informational only.
    name : str, optional
        Label used in reports and scenario configs.
    is_constant : bool
        Declares that ``func`` ignores its argument.
    definiteness_tol : float
        Smallest admissible ratio ``lambda_min / lambda_max``.
    """

    def __init__(self, func, lipschitz_hint=None, name=None, is_constant=False,
                 definiteness_tol=1e-12):
        if lipschitz_hint is not None and lipschitz_hint < 0:
            raise ValueError("lipschitz_hint must be nonnegative")
        self._func = func
        self.lipschitz_hint = lipschitz_hint
        self.name = name or "custom"
        self.is_constant = bool(is_constant)
        self.definiteness_tol = float(definiteness_tol)
        self._fixed = None

    @classmethod
    def euclidean(cls, dim):
        eye = np.eye(dim)
        eye.setflags(write=False)
        metric = cls(lambda x: eye, lipschitz_hint=0.0, name="euclidean", is_constant=True)
        metric._fixed = eye
        return metric

    @classmethod
    def constant(cls, matrix):
        G = np.array(as_square(matrix, name="metric"), dtype=float)
        G.setflags(write=False)
        metric = cls(lambda x: G, lipschitz_hint=0.0,
                     name="constant:" + json.dumps(G.tolist()), is_constant=True)
        # A constant matrix is validated once; later evaluations return it as is.
        metric._fixed = metric(np.zeros(G.shape[0]))
        metric._fixed.setflags(write=False)
        return metric

    def __call__(self, x):
        """Evaluate and validate ``G(x)``."""
        if self._fixed is not None:
            return self._fixed
        G = np.asarray(self._func(x), dtype=float)
        n = G.shape[0] if G.ndim == 2 else -1
        if G.ndim != 2 or G.shape[1] != n:
            raise DefinitenessError(f"metric returned shape {G.shape}, expected square")
        scale = max(1.0, float(np.max(np.abs(G))))
        if np.max(np.abs(G - G.T)) > 1e-12 * scale:
            raise DefinitenessError(f"metric not symmetric at x={np.asarray(x).tolist()}")
        eig = _eigenvalue_range(G)
        if not np.all(np.isfinite(eig)) or eig[0] <= self.definiteness_tol * max(eig[-1], 0.0):
            raise DefinitenessError(
                f"metric not positive definite at x={np.asarray(x).tolist()} "
                f"(eigenvalues {eig.tolist()})"
            )
        return 0.5 * (G + G.T)

    def inner(self, x, u, v):
        return inner(self, x, u, v)

    def diagnostics(self, x):
        return diagnostics(self, x)

    def __repr__(self):
        return f"MetricField({self.name!r})"


def _eigenvalue_range(G):
    """Smallest and largest eigenvalue of a symmetric matrix."""
    if G.shape == (2, 2):
        half_trace = 0.5 * (G[0, 0] + G[1, 1])
        gap = np.hypot(0.5 * (G[0, 0] - G[1, 1]), 0.5 * (G[0, 1] + G[1, 0]))
        return np.array([half_trace - gap, half_trace + gap])
    eig = np.linalg.eigvalsh(G)
    return eig[[0, -1]]


def inner(g, x, u, v):
    """Return ``u' G(x) v``."""
    G = g(x)
    return float(np.asarray(u, dtype=float) @ G @ np.asarray(v, dtype=float))


def norm(g, x, v):
    return float(np.sqrt(max(inner(g, x, v, v), 0.0)))


def diagnostics(g, x):
    """Eigenvalue extremes and condition number of ``G(x)``.

    The bounds are eigenvalues of ``G(x)`` itself, so that
    ``lambda_min |v|^2 <= |v|_g^2 <= lambda_max |v|^2``.
    """
    eig = _eigenvalue_range(g(x))
    lo, hi = float(eig[0]), float(eig[-1])
    return MetricDiagnostics(lo, hi, hi / lo)


def hessian_metric(psi, name=None):
    """Metric given by the Hessian of a scalar field.

    ``psi`` needs a ``hessian(x)`` method (see :class:`projdyn.flows.ScalarField`).
    Evaluation raises :class:`DefinitenessError` wherever ``psi`` is not
    locally strongly convex. A constant Hessian (``psi.constant_hessian``)
    is validated once, at construction.
    """
    label = name or getattr(psi, "name", None) or "psi"
    fixed = getattr(psi, "constant_hessian", None)
    if fixed is not None:
        metric = MetricField.constant(fixed)
        metric.name = f"hessian:{label}"
        return metric
    return MetricField(psi.hessian, name=f"hessian:{label}")


def normalized(g):
    """Return the metric ``G(x) / lambda_max(x)``.

    Projections are invariant under this pointwise rescaling.
    """

    def func(x):
        G = g(x)
        return G / _eigenvalue_range(G)[-1]

    return MetricField(func, name=f"normalized:{g.name}", is_constant=g.is_constant)

