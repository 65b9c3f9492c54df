"""Distances and summary statistics for capped persistence diagrams."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .kernels import solve_assignment
from .persistence import DiagramError, PersistenceDiagram

__all__ = [
    "Matching",
    "ground_distance",
    "diagonal_cost",
    "diagonal_projection",
    "wasserstein",
    "bottleneck",
    "total_persistence",
    "as_points",
    "optimal_cost",
]


@dataclass(frozen=True)
class Matching:
    """Partial bijection between two diagrams; unmatched points go to the diagonal."""

    pairs: tuple[tuple[int, int], ...]
    unmatched_p: tuple[int, ...]
    unmatched_q: tuple[int, ...]


def _check_order(p) -> float:
    p = float(p)
    if not p >= 1:
        raise ValueError(f"order p must be >= 1, got {p}")
    return p


def as_points(diagram) -> np.ndarray:
    """``(n, 2)`` array of finite ``(birth, death)`` rows.

    Accepts a :class:`PersistenceDiagram` or anything array-like.
    """
    if isinstance(diagram, PersistenceDiagram):
        arr = diagram.as_array()
    else:
        arr = np.asarray(diagram, dtype=np.float64)
        if arr.size == 0:
            arr = np.empty((0, 2))
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise DiagramError(f"expected (n, 2) birth/death pairs, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise DiagramError("diagram has infinite deaths; apply cap_infinite first")
    return arr


def ground_distance(a, b, p=1) -> float:
    """``d_p`` between two diagram points; ``p=inf`` gives the max gap."""
    p = _check_order(p)
    db = abs(float(a[0]) - float(b[0]))
    dd = abs(float(a[1]) - float(b[1]))
    if math.isinf(p):
        return max(db, dd)
    if p == 1:
        return db + dd
    return (db ** p + dd ** p) ** (1.0 / p)


def diagonal_projection(a) -> tuple[float, float]:
    mid = (float(a[0]) + float(a[1])) / 2.0
    return (mid, mid)


def diagonal_cost(a, p=1) -> float:
    """``d_p`` from ``a`` to its nearest point on the diagonal."""
    p = _check_order(p)
    life = float(a[1]) - float(a[0])
    if p == 1:
        return life
    if math.isinf(p):
        return life / 2.0
    return life / 2.0 * 2.0 ** (1.0 / p)


def _diag_costs(X, p):
    life = X[:, 1] - X[:, 0]
    if p == 1:
        return life
    if math.isinf(p):
        return life / 2.0
    return 2.0 * (life / 2.0) ** p


def _cross_costs(X, Y, p):
    db = np.abs(X[:, None, 0] - Y[None, :, 0])
    dd = np.abs(X[:, None, 1] - Y[None, :, 1])
    if p == 1:
        return db + dd
    if math.isinf(p):
        return np.maximum(db, dd)
    return db ** p + dd ** p


def _augmented(X, Y, p):
    """Square cost matrix with diagonal copies; entries are ``d_p ** p`` (or ``d_inf``).

    Rows: points of X, then one diagonal slot per point of Y.
    Columns: points of Y, then one diagonal slot per point of X.
    """
    n, m = len(X), len(Y)
    C = np.full((n + m, n + m), np.inf)
    C[:n, :m] = _cross_costs(X, Y, p)
    C[np.arange(n), m + np.arange(n)] = _diag_costs(X, p)
    C[n + np.arange(m), np.arange(m)] = _diag_costs(Y, p)
    C[n:, m:] = 0.0
    return C


def optimal_cost(X: np.ndarray, Y: np.ndarray, p: float) -> tuple[float, np.ndarray]:
    """Minimum of ``sum d_p ** p`` over partial bijections of two point arrays.

    Returns the optimum and the ``col4row`` assignment on the augmented
    matrix: for row ``i < len(X)``, a column ``< len(Y)`` is its partner,
    anything else means the diagonal.
    """
    n, m = len(X), len(Y)
    if n + m == 0:
        return 0.0, np.empty(0, dtype=np.int64)
    C = _augmented(X, Y, p)
    col4row = solve_assignment(C)
    return math.fsum(C[np.arange(n + m), col4row].tolist()), col4row


def _matching(col4row, n, m) -> Matching:
    pairs, up = [], []
    matched_q = set()
    for i in range(n):
        j = int(col4row[i])
        if j < m:
            pairs.append((i, j))
            matched_q.add(j)
        else:
            up.append(i)
    uq = [j for j in range(m) if j not in matched_q]
    return Matching(tuple(pairs), tuple(up), tuple(uq))


def wasserstein(P, Q, p=1, *, return_matching: bool = False):
    """Exact ``p``-Wasserstein distance between capped diagrams.

    Solves the square assignment problem on the diagonal-augmented
    ``d_p ** p`` cost matrix. ``p=inf`` delegates to :func:`bottleneck`.
    With ``return_matching`` the optimal partial bijection (indices into the
    diagrams' canonical point order) is returned as well.
    """
    p = _check_order(p)
    if math.isinf(p):
        return bottleneck(P, Q, return_matching=return_matching)
    X, Y = as_points(P), as_points(Q)
    n, m = len(X), len(Y)
    total, col4row = optimal_cost(X, Y, p)
    dist = total if p == 1 else total ** (1.0 / p)
    if return_matching:
        return dist, _matching(col4row, n, m)
    return dist


def bottleneck(P, Q, *, return_matching: bool = False):
    """Bottleneck distance: the smallest ``t`` admitting a partial bijection
    whose matched and diagonal ``d_inf`` costs are all ``<= t``.

    Binary search over the finite entries of the augmented cost matrix, with
    a Hopcroft-Karp perfect-matching test at each threshold.
    """
    X, Y = as_points(P), as_points(Q)
    n, m = len(X), len(Y)
    if n + m == 0:
        return (0.0, Matching((), (), ())) if return_matching else 0.0
    C = _augmented(X, Y, math.inf)
    # the all-diagonal matching is always feasible, so its cost bounds the answer
    upper = max(_diag_costs(X, math.inf).max(initial=0.0), _diag_costs(Y, math.inf).max(initial=0.0))
    cand = np.unique(C[C <= upper])

    def feasible(t):
        match = maximum_bipartite_matching(csr_matrix(C <= t), perm_type="column")
        return match if (match >= 0).all() else None

    lo, hi = 0, len(cand) - 1
    best = feasible(cand[hi])
    while lo < hi:
        mid = (lo + hi) // 2
        found = feasible(cand[mid])
        if found is None:
            lo = mid + 1
        else:
            hi, best = mid, found
    dist = float(cand[hi])
    if return_matching:
        return dist, _matching(best, n, m)
    return dist


def total_persistence(P) -> float:
    """Sum of lifespans ``death - birth``; the diagram must be capped."""
    if isinstance(P, PersistenceDiagram) and not P.is_capped:
        raise DiagramError("diagram has infinite deaths; apply cap_infinite first")
    X = as_points(P)
    return math.fsum((X[:, 1] - X[:, 0]).tolist())
