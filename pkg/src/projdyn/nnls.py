"""Lawson-Hanson active-set solver for nonnegative quadratic programs.

The solver works on the Gram form

    minimize  0.5 * lam' M lam - q' lam   subject to  lam >= 0,

with ``M`` symmetric positive semidefinite. A least-squares problem
``min ||C lam - d||`` with ``lam >= 0`` is the special case ``M = C'C``,
``q = C'd``; metric-weighted cone projections are posed directly in this
form so no square roots of the metric are ever taken.
"""

import numpy as np

from .errors import SolverError

_EPS = np.finfo(float).eps


def _solve_block(M, q):
    try:
        return np.linalg.solve(M, q)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(M, q, rcond=None)[0]


def nnls_gram(M, q, maxiter=None, tol=None):
    """Solve the nonnegative quadratic program in Gram form.

    Parameters
    ----------
    M : (m, m) array_like
        Symmetric positive semidefinite Gram matrix.
    q : (m,) array_like
        Linear term.
    maxiter : int, optional
        Cap on inner iterations. Defaults to ``50 * m``.
    tol : float, optional
        Dual feasibility tolerance on the reduced gradient ``q - M lam``.
        Defaults to a multiple of machine precision scaled by the data.

    Returns
    -------
    lam : (m,) ndarray
        Nonnegative minimizer.

    Raises
    ------
    SolverError
        If the iteration cap is exceeded. The exception carries the last
        iterate and passive set.

    Notes
    -----
    The entering index is the one with the largest reduced gradient
    ``w = q - M lam``; ``argmax`` resolves ties to the lowest index.
    """
    M = np.asarray(M, dtype=float)
    q = np.asarray(q, dtype=float)
    m = q.shape[0]
    if m == 0:
        return np.zeros(0)
    if m == 1:
        if M[0, 0] <= 0.0:
            if q[0] > 0.0:
                raise SolverError("unbounded one-dimensional problem", iterate=[0.0])
            return np.zeros(1)
        return np.array([max(q[0] / M[0, 0], 0.0)])
    if maxiter is None:
        maxiter = 50 * m
    if tol is None:
        scale = max(np.max(np.abs(M)), np.max(np.abs(q)), np.finfo(float).tiny)
        tol = 10.0 * _EPS * m * scale

    lam = np.zeros(m)
    passive = np.zeros(m, dtype=bool)
    blocked = np.zeros(m, dtype=bool)
    w = q.copy()
    iterations = 0
    while True:
        candidates = ~passive & ~blocked & (w > tol)
        if not candidates.any():
            break
        j = int(np.argmax(np.where(candidates, w, -np.inf)))
        passive[j] = True
        entering = True
        while True:
            iterations += 1
            if iterations > maxiter:
                raise SolverError(
                    f"NNLS exceeded {maxiter} iterations",
                    iterate=lam,
                    passive=np.flatnonzero(passive),
                )
            idx = np.flatnonzero(passive)
            z = np.zeros(m)
            z[idx] = _solve_block(M[np.ix_(idx, idx)], q[idx])
            if np.all(z[idx] > 0.0):
                lam = z
                blocked[:] = False
                break
            if entering and z[j] <= 0.0:
                # The entering direction is numerically useless; park it
                # until the iterate changes.
                passive[j] = False
                blocked[j] = True
                break
            entering = False
            neg = idx[z[idx] <= 0.0]
            ratios = lam[neg] / (lam[neg] - z[neg])
            k = int(np.argmin(ratios))
            step = ratios[k]
            lam = lam + step * (z - lam)
            lam[neg[k]] = 0.0
            drop = passive & (lam <= 0.0)
            passive &= ~drop
            lam[~passive] = 0.0
        w = q - M @ lam
    return np.maximum(lam, 0.0)
