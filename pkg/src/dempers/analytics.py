"""Corpus-level analysis over collections of persistence diagrams."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .geo import AttributeTable
from .metrics import wasserstein
from .persistence import PersistenceDiagram

__all__ = [
    "DiagramDistanceMatrix",
    "Embedding",
    "OutlierReport",
    "distance_matrix",
    "classical_mds",
    "lof_scores",
    "averaged_lof",
    "pearson_r",
    "dissimilarity_index",
    "read_matrix_csv",
    "write_matrix_csv",
    "write_embedding_csv",
    "read_embedding_csv",
    "write_outlier_csv",
]

REACH_FLOOR = 1e-12


@dataclass(frozen=True)
class DiagramDistanceMatrix:
    ids: tuple[str, ...]
    values: np.ndarray
    p: float = 1.0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "values", vals)
        n = len(self.ids)
        if vals.shape != (n, n):
            raise ValueError(f"matrix shape {vals.shape} does not match {n} ids")
        if len(set(self.ids)) != n:
            raise ValueError("duplicate region ids")

    def validate(self, tol: float = 1e-9) -> None:
        v = self.values
        if not np.isfinite(v).all():
            raise ValueError("distance matrix has non-finite entries")
        if (v < 0).any():
            raise ValueError("distance matrix has negative entries")
        if np.abs(v - v.T).max(initial=0.0) > tol:
            raise ValueError("distance matrix is not symmetric")
        if np.abs(np.diag(v)).max(initial=0.0) > tol:
            raise ValueError("distance matrix has a nonzero diagonal")


@dataclass(frozen=True)
class Embedding:
    ids: tuple[str, ...]
    coordinates: np.ndarray
    eigenvalues: np.ndarray | None = None


@dataclass(frozen=True)
class OutlierReport:
    ids: tuple[str, ...]
    mean_lof: np.ndarray
    threshold: float
    k_range: tuple[int, int]

    @property
    def is_outlier(self) -> np.ndarray:
        return self.mean_lof >= self.threshold

    @property
    def outliers(self) -> list[str]:
        return [i for i, f in zip(self.ids, self.is_outlier) if f]


def distance_matrix(
    diagrams: Sequence[PersistenceDiagram],
    p=1,
    ids: Sequence[str] | None = None,
    n_jobs: int = 1,
) -> DiagramDistanceMatrix:
    """Pairwise ``W_p`` matrix, one solve per unordered pair.

    ``ids`` default to the diagrams' region ids. With ``n_jobs > 1`` the
    pairs are spread over a thread pool; the result does not depend on it.
    """
    if len(diagrams) < 2:
        raise ValueError("need at least two diagrams")
    ids = [d.region_id for d in diagrams] if ids is None else list(ids)
    if len(set(ids)) != len(ids):
        dup = sorted({i for i in ids if ids.count(i) > 1})
        raise ValueError(f"duplicate region ids: {dup}")
    n = len(diagrams)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]

    def work(ij):
        i, j = ij
        return wasserstein(diagrams[i], diagrams[j], p)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            dists = list(pool.map(work, pairs))
    else:
        dists = [work(ij) for ij in pairs]
    M = np.zeros((n, n))
    for (i, j), d in zip(pairs, dists):
        M[i, j] = M[j, i] = d
    return DiagramDistanceMatrix(tuple(ids), M, float(p))


def _as_matrix(matrix) -> tuple[tuple[str, ...], np.ndarray]:
    if isinstance(matrix, DiagramDistanceMatrix):
        return matrix.ids, matrix.values
    D = np.asarray(matrix, dtype=np.float64)
    return tuple(str(i) for i in range(len(D))), D


def classical_mds(matrix, dim: int = 2) -> Embedding:
    """Torgerson scaling: top eigenvectors of ``-J D^2 J / 2``.

    Negative eigenvalues are clipped to zero. Each axis is flipped so that
    its largest-magnitude entry is nonnegative.
    """
    ids, D = _as_matrix(matrix)
    DiagramDistanceMatrix(ids, D).validate()
    n = len(D)
    if dim < 1 or n < dim + 1:
        raise ValueError(f"need at least {dim + 1} points for a {dim}-dimensional embedding")
    J = np.eye(n) - np.full((n, n), 1.0 / n)
    B = -0.5 * J @ (D ** 2) @ J
    B = (B + B.T) / 2
    evals, evecs = np.linalg.eigh(B)
    top = np.argsort(evals, kind="stable")[::-1][:dim]
    lam = np.clip(evals[top], 0.0, None)
    vecs = evecs[:, top]
    flip = np.sign(vecs[np.argmax(np.abs(vecs), axis=0), np.arange(dim)])
    flip[flip == 0] = 1.0
    coords = vecs * flip * np.sqrt(lam)
    return Embedding(ids, coords, lam)


def lof_scores(matrix, k: int) -> np.ndarray:
    """Local outlier factor of each item from a precomputed distance matrix.

    Every point at exactly the k-distance counts as a neighbour.
    Reachability distances are floored at ``1e-12`` so duplicates stay finite.
    """
    _, D = _as_matrix(matrix)
    n = len(D)
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must be in [1, {n - 1}], got {k}")
    off = D.copy()
    np.fill_diagonal(off, np.inf)
    kdist = np.partition(off, k - 1, axis=1)[:, k - 1]
    nbr = off <= kdist[:, None]
    reach = np.maximum(np.maximum(kdist[None, :], D), REACH_FLOOR)
    size = nbr.sum(axis=1)
    lrd = size / np.where(nbr, reach, 0.0).sum(axis=1)
    return (nbr @ lrd) / size / lrd


def averaged_lof(matrix, k_min: int = 10, k_max: int = 19, eps: float = 2.0) -> OutlierReport:
    """Mean LOF over ``k = k_min..k_max``; items at or above ``eps`` are outliers."""
    ids, D = _as_matrix(matrix)
    n = len(D)
    if k_min < 1 or k_max < k_min:
        raise ValueError(f"invalid k range {k_min}..{k_max}")
    if n <= k_max:
        raise ValueError(
            f"{n} items cannot support k up to {k_max}; use a k range with k_max < {n}"
        )
    scores = np.mean([lof_scores(D, k) for k in range(k_min, k_max + 1)], axis=0)
    return OutlierReport(tuple(ids), scores, float(eps), (k_min, k_max))


def pearson_r(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise ValueError("pearson_r needs two equal-length sequences of at least 2 values")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise ValueError("pearson_r is undefined for zero-variance input")
    return float(dx @ dy) / math.sqrt(sxx * syy)


def dissimilarity_index(table: AttributeTable) -> float:
    """Two-group dissimilarity ``0.5 * sum |g_i/G - w_i/W|``."""
    g = table.group_counts().astype(np.float64)
    w = table.complement_counts().astype(np.float64)
    G, W = g.sum(), w.sum()
    if G <= 0 or W <= 0:
        raise ValueError("dissimilarity index needs both groups to be present")
    return 0.5 * math.fsum(np.abs(g / G - w / W).tolist())


# --------------------------------------------------------------------------
# CSV formats
# --------------------------------------------------------------------------

def write_matrix_csv(matrix: DiagramDistanceMatrix, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["id", *matrix.ids])
        for rid, row in zip(matrix.ids, matrix.values.tolist()):
            out.writerow([rid, *(repr(v) for v in row)])


def read_matrix_csv(path: str | Path, p: float = 1.0) -> DiagramDistanceMatrix:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty matrix file")
    ids = rows[0][1:]
    body = rows[1:]
    if [r[0] for r in body] != ids:
        raise ValueError(f"{path}: row ids do not match the header")
    try:
        values = np.array([[float(v) for v in r[1:]] for r in body], dtype=np.float64)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
    return DiagramDistanceMatrix(tuple(ids), values.reshape(len(ids), len(ids)), p)


def _axis_names(dim):
    return ["x", "y"] if dim == 2 else [f"c{i + 1}" for i in range(dim)]


def write_embedding_csv(emb: Embedding, path: str | Path) -> None:
    dim = emb.coordinates.shape[1]
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["id", *_axis_names(dim)])
        for rid, row in zip(emb.ids, emb.coordinates.tolist()):
            out.writerow([rid, *(repr(v) for v in row)])


def read_embedding_csv(path: str | Path) -> Embedding:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "id":
        raise ValueError(f"{path}: not an embedding CSV")
    ids = tuple(r[0] for r in rows[1:])
    coords = np.array([[float(v) for v in r[1:]] for r in rows[1:]], dtype=np.float64)
    return Embedding(ids, coords.reshape(len(ids), len(rows[0]) - 1))


def write_outlier_csv(report: OutlierReport, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["id", "mean_lof", "is_outlier"])
        for rid, score, flag in zip(report.ids, report.mean_lof.tolist(), report.is_outlier):
            out.writerow([rid, repr(score), "true" if flag else "false"])
