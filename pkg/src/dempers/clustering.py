"""k-means in persistence-diagram space under the 2-Wasserstein metric."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .metrics import as_points, optimal_cost
from .persistence import PersistenceDiagram, diagram_to_dict

__all__ = [
    "ClusterResult",
    "frechet_mean",
    "frechet_objective",
    "kmeanspp_init",
    "kmeanspp_indices",
    "kmeans_diagrams",
    "elbow_curve",
    "derived_seed",
    "w2_squared",
]

FRECHET_MAX_ITER = 100


def w2_squared(P, Q) -> float:
    """Squared 2-Wasserstein distance."""
    return optimal_cost(as_points(P), as_points(Q), 2.0)[0]


def _partners(Y: np.ndarray, X: np.ndarray) -> tuple[int, ...]:
    """Optimal W2 partner in X for each point of Y; -1 means the diagonal."""
    _, col4row = optimal_cost(Y, X, 2.0)
    m = len(X)
    return tuple(int(c) if c < m else -1 for c in col4row[: len(Y)].tolist())


def _mean_point(contribs: list[tuple[float, float]]) -> tuple[float, float]:
    # shifted mean: exact when all contributions coincide
    b0, d0 = contribs[0]
    n = len(contribs)
    return (b0 + math.fsum(b - b0 for b, _ in contribs) / n,
            d0 + math.fsum(d - d0 for _, d in contribs) / n)


def _update(contribs: list[tuple[float, float]], m: int):
    """Best position for a mean point given its off-diagonal partners.

    The ``m - len(contribs)`` diagonal partners pull the partners' average
    toward its own diagonal projection; ``None`` means the point is dropped.
    """
    if not contribs:
        return None
    b, d = _mean_point(contribs)
    a = len(contribs)
    if a < m:
        mid = (b + d) / 2.0
        b, d = mid + (b - mid) * a / m, mid + (d - mid) * a / m
    return (b, d) if d > b else None


def _frechet(Xs: list[np.ndarray], Y: np.ndarray, max_iter: int):
    prev = None
    iterations = 0
    m = len(Xs)
    while True:
        matchings = [_partners(Y, X) for X in Xs]
        if matchings == prev or iterations >= max_iter:
            return Y, iterations
        new = []
        for j in range(len(Y)):
            contribs = [(float(X[part[j], 0]), float(X[part[j], 1]))
                        for X, part in zip(Xs, matchings) if part[j] >= 0]
            point = _update(contribs, m)
            if point is not None:
                new.append(point)
        Y = np.array(new, dtype=np.float64).reshape(-1, 2)
        prev = matchings
        iterations += 1


def frechet_objective(mean, diagrams: Sequence) -> float:
    """``sum_i W2(mean, P_i)^2``."""
    return math.fsum(w2_squared(mean, P) for P in diagrams)


def frechet_mean(
    diagrams: Sequence[PersistenceDiagram],
    initial: PersistenceDiagram | None = None,
    *,
    max_iter: int = FRECHET_MAX_ITER,
    region_id: str = "",
    return_iterations: bool = False,
):
    """Local minimiser of the summed squared W2 distance to ``diagrams``.

    Alternates optimal W2 matchings against the current mean with moving
    each mean point to the exact minimiser for those matchings: the average
    of its off-diagonal partners, shrunk toward the diagonal by the share of
    diagrams that matched it to the diagonal. Points left with no
    off-diagonal partner are dropped. Stops when no matching changes, or
    after ``max_iter`` updates. ``initial`` defaults to the first diagram.
    """
    if not diagrams:
        raise ValueError("frechet_mean of an empty collection")
    Xs = [as_points(P) for P in diagrams]
    start = diagrams[0] if initial is None else initial
    Y, iterations = _frechet(Xs, as_points(start).copy(), max_iter)
    cap = start.cap if isinstance(start, PersistenceDiagram) else None
    mean = PersistenceDiagram.from_pairs(Y.tolist(), region_id=region_id, cap=cap,
                                         essential=[False] * len(Y))
    return (mean, iterations) if return_iterations else mean


def derived_seed(seed: int, k: int) -> int:
    """Independent per-k seed for elbow sweeps."""
    return int(np.random.SeedSequence([int(seed), int(k)]).generate_state(1, np.uint32)[0])


def kmeanspp_indices(diagrams: Sequence, k: int, rng_seed: int = 0) -> list[int]:
    """Indices of k-means++ seeds: first uniform, then by squared W2 to the nearest seed.

    Randomness comes from numpy's PCG64 generator seeded with ``rng_seed``.
    """
    n = len(diagrams)
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    chosen = [int(rng.integers(n))]
    nearest = np.array([w2_squared(P, diagrams[chosen[0]]) for P in diagrams])
    nearest[chosen[0]] = 0.0
    while len(chosen) < k:
        weights = nearest.copy()
        weights[chosen] = 0.0
        total = weights.sum()
        if total > 0:
            cum = np.cumsum(weights)
            pick = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
            pick = min(pick, n - 1)
        else:
            rest = [i for i in range(n) if i not in chosen]
            pick = rest[int(rng.integers(len(rest)))]
        chosen.append(pick)
        nearest = np.minimum(nearest, [w2_squared(P, diagrams[pick]) for P in diagrams])
    return chosen


def kmeanspp_init(diagrams: Sequence[PersistenceDiagram], k: int, rng_seed: int = 0):
    return [diagrams[i] for i in kmeanspp_indices(diagrams, k, rng_seed)]


@dataclass(frozen=True)
class ClusterResult:
    labels: tuple[int, ...]
    means: tuple[PersistenceDiagram, ...]
    distortion: float
    iterations: int
    seed: int
    ids: tuple[str, ...] = ()
    history: tuple[float, ...] = field(default=(), compare=False)

    @property
    def k(self) -> int:
        return len(self.means)

    def to_dict(self) -> dict:
        ids = self.ids or tuple(str(i) for i in range(len(self.labels)))
        return {
            "k": self.k,
            "seed": self.seed,
            "distortion": self.distortion,
            "labels": {i: lab for i, lab in sorted(zip(ids, self.labels))},
            "means": [diagram_to_dict(m) for m in self.means],
        }


def _assign(Xs, means):
    d2 = np.array([[optimal_cost(X, M, 2.0)[0] for M in means] for X in Xs])
    labels = tuple(int(i) for i in np.argmin(d2, axis=1))
    distortion = math.fsum(d2[i, lab] for i, lab in enumerate(labels))
    return labels, distortion


def kmeans_diagrams(
    diagrams: Sequence[PersistenceDiagram],
    k: int,
    rng_seed: int = 0,
    max_iter: int = 50,
    *,
    init: Sequence[PersistenceDiagram] | None = None,
    ids: Sequence[str] | None = None,
) -> ClusterResult:
    """Lloyd iteration with Frechet-mean centres.

    Starts from k-means++ seeds unless ``init`` supplies the means. Ties in
    assignment go to the lowest cluster index; an empty cluster keeps its
    previous mean. Stops when labels repeat or after ``max_iter`` rounds.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if init is None:
        means = [as_points(M).copy() for M in kmeanspp_init(diagrams, k, rng_seed)]
    else:
        if len(init) != k:
            raise ValueError(f"init has {len(init)} means, expected {k}")
        means = [as_points(M).copy() for M in init]
    Xs = [as_points(P) for P in diagrams]
    if ids is None:
        ids = [getattr(P, "region_id", "") or str(i) for i, P in enumerate(diagrams)]
    labels, distortion = _assign(Xs, means)
    history = [distortion]
    iterations = 0
    for _ in range(max_iter):
        new_means = []
        for j, M in enumerate(means):
            members = [X for X, lab in zip(Xs, labels) if lab == j]
            new_means.append(_frechet(members, M, FRECHET_MAX_ITER)[0] if members else M)
        means = new_means
        new_labels, distortion = _assign(Xs, means)
        history.append(distortion)
        iterations += 1
        if new_labels == labels:
            break
        labels = new_labels

    cap = next((P.cap for P in diagrams if isinstance(P, PersistenceDiagram)), None)
    mean_dgms = tuple(
        PersistenceDiagram.from_pairs(M.tolist(), region_id=f"cluster-{j}", cap=cap,
                                      essential=[False] * len(M))
        for j, M in enumerate(means)
    )
    return ClusterResult(labels, mean_dgms, distortion, iterations, int(rng_seed),
                         tuple(ids), tuple(history))


def elbow_curve(diagrams: Sequence[PersistenceDiagram], k_values: Sequence[int],
                rng_seed: int = 0, max_iter: int = 50) -> list[tuple[int, float]]:
    """Final distortion for each k, each run seeded by :func:`derived_seed`."""
    n = len(diagrams)
    if k_values and max(k_values) > n:
        raise ValueError(f"k cannot exceed the number of diagrams ({n})")
    return [
        (int(k), kmeans_diagrams(diagrams, k, derived_seed(rng_seed, k), max_iter).distortion)
        for k in k_values
    ]
