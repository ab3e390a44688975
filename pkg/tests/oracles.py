"""Brute-force reference solutions, independent of the package solvers.

Nothing here calls the active-set NNLS: quadratic programs are solved by
enumerating every candidate active subset and checking KKT feasibility.
"""

from itertools import combinations

import numpy as np


def random_spd(rng, n, cond_max=20.0):
    """Random symmetric positive-definite matrix with bounded condition number."""
    Qm, _ = np.linalg.qr(rng.standard_normal((n, n)))
    eig = np.exp(rng.uniform(0.0, np.log(cond_max), n))
    return (Qm * eig) @ Qm.T


def qp_enumerate(Q, c, A, b, tol=1e-9):
    """Minimize ``0.5 x'Qx - c'x`` subject to ``A x <= b`` by active-subset enumeration.

    ``Q`` must be positive definite. Returns ``(x, value)``.
    """
    Q = np.asarray(Q, dtype=float)
    c = np.asarray(c, dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float)).reshape(-1, Q.shape[0])
    b = np.asarray(b, dtype=float).reshape(-1)
    n, m = Q.shape[0], A.shape[0]
    best_x, best_val = None, np.inf
    for k in range(min(m, n) + 1):
        for J in combinations(range(m), k):
            J = list(J)
            K = np.zeros((n + k, n + k))
            K[:n, :n] = Q
            K[:n, n:] = A[J].T
            K[n:, :n] = A[J]
            rhs = np.concatenate([c, b[J]])
            try:
                sol = np.linalg.solve(K, rhs)
            except np.linalg.LinAlgError:
                continue
            x = sol[:n]
            if m and np.any(A @ x > b + tol * (1.0 + np.abs(b))):
                continue
            val = 0.5 * x @ Q @ x - c @ x
            if val < best_val:
                best_x, best_val = x, val
    return best_x, best_val


def cone_projection_halfspaces(A, G, f):
    """Nearest point of ``{v | A v <= 0}`` to ``f`` in the ``G`` inner product."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    v, _ = qp_enumerate(G, G @ f, A, np.zeros(A.shape[0]))
    return v


def cone_projection_generators(D, G, f, tol=1e-12):
    """Nearest point of ``cone(rows of D)`` to ``f`` by enumerating independent subsets."""
    D = np.atleast_2d(np.asarray(D, dtype=float))
    n = D.shape[1]
    best_v, best_val = np.zeros(n), float(f @ G @ f)
    for k in range(1, min(D.shape[0], n) + 1):
        for J in combinations(range(D.shape[0]), k):
            B = D[list(J)].T
            M = B.T @ G @ B
            if np.linalg.matrix_rank(M) < k:
                continue
            coef = np.linalg.solve(M, B.T @ G @ f)
            if np.any(coef < -tol):
                continue
            v = B @ coef
            r = f - v
            val = float(r @ G @ r)
            if val < best_val:
                best_v, best_val = v, val
    return best_v


def grid_nearest(member, y, G, lower, upper, n=801):
    """Nearest feasible grid point to ``y`` in the ``G`` metric.

    Returns the point and the grid spacing.
    """
    xs = np.linspace(lower[0], upper[0], n)
    ys = np.linspace(lower[1], upper[1], n)
    X, Y = np.meshgrid(xs, ys)
    P = np.column_stack([X.ravel(), Y.ravel()])
    keep = np.array([member(p) for p in P])
    P = P[keep]
    d = P - y
    dist = np.einsum("ij,jk,ik->i", d, G, d)
    spacing = max((upper[0] - lower[0]), (upper[1] - lower[1])) / (n - 1)
    return P[np.argmin(dist)], spacing


def polygon_halfspaces(vertices):
    """``A, b`` with ``{A x <= b}`` equal to a counter-clockwise convex polygon."""
    V = np.asarray(vertices, dtype=float)
    A, b = [], []
    for p, q in zip(V, np.roll(V, -1, axis=0)):
        d = q - p
        normal = np.array([d[1], -d[0]])
        A.append(normal)
        b.append(normal @ p)
    return np.array(A), np.array(b)
