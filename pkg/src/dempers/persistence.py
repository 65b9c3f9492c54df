"""0-dimensional sublevel-set persistence of vertex-weighted graphs."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np

from . import kernels
from .geo import DualGraph

__all__ = [
    "DiagramPoint",
    "PersistenceDiagram",
    "DiagramError",
    "sublevel_diagram",
    "diagram_from_values",
    "cap_infinite",
    "diagram_to_dict",
    "diagram_from_dict",
    "write_diagram_json",
    "read_diagram_json",
]


class DiagramError(ValueError):
    pass


@dataclass(frozen=True)
class DiagramPoint:
    birth: float
    death: float
    birth_vertex: str | None = None
    essential: bool = False

    def __post_init__(self):
        # a capped essential point may sit on the diagonal: its component
        # was born at the cap itself
        if not (self.birth < self.death or (self.essential and self.birth == self.death)):
            raise DiagramError(f"point must have birth < death, got ({self.birth}, {self.death})")
        if math.isinf(self.death) and not self.essential:
            raise DiagramError("a point with infinite death must be essential")

    @property
    def persistence(self) -> float:
        return self.death - self.birth

    def sort_key(self):
        return (self.birth, self.death, self.birth_vertex or "")


@dataclass(frozen=True)
class PersistenceDiagram:
    """Multiset of diagram points, kept in canonical ``(birth, death, vertex)`` order.

    ``cap`` is the value that replaced infinite deaths, or ``None`` while the
    diagram still carries them.
    """

    points: tuple[DiagramPoint, ...] = ()
    region_id: str = ""
    cap: float | None = None

    def __post_init__(self):
        pts = tuple(sorted(self.points, key=DiagramPoint.sort_key))
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self) -> Iterator[DiagramPoint]:
        return iter(self.points)

    @property
    def is_capped(self) -> bool:
        return all(math.isfinite(p.death) for p in self.points)

    @property
    def essential_count(self) -> int:
        return sum(p.essential for p in self.points)

    def as_array(self) -> np.ndarray:
        """``(n, 2)`` float array of ``(birth, death)`` rows."""
        if not self.points:
            return np.empty((0, 2))
        return np.array([(p.birth, p.death) for p in self.points], dtype=np.float64)

    def pairs(self) -> list[tuple[float, float]]:
        return [(p.birth, p.death) for p in self.points]

    @classmethod
    def from_pairs(cls, pairs, region_id: str = "", cap: float | None = None,
                   essential: Sequence[bool] | None = None) -> "PersistenceDiagram":
        """Build a diagram from bare ``(birth, death)`` pairs (no vertex provenance)."""
        pairs = [(float(b), float(d)) for b, d in pairs]
        if essential is None:
            essential = [math.isinf(d) for _, d in pairs]
        pts = tuple(DiagramPoint(b, d, None, bool(e)) for (b, d), e in zip(pairs, essential))
        return cls(pts, region_id, cap)


def _diagram(values, imputed, tie_rank, indptr, indices, names, region_id):
    n = values.shape[0]
    if n == 0:
        raise DiagramError("empty graph")
    if not np.isfinite(values).all():
        raise DiagramError("filtration values must be finite")
    order = np.lexsort((tie_rank, imputed.astype(np.int8), values)).astype(np.int64)
    births, deaths = kernels.sublevel_pairs(order, values, indptr, indices)
    points = []
    for b, d in zip(births.tolist(), deaths.tolist()):
        if d < 0:
            points.append(DiagramPoint(float(values[b]), math.inf, names[b], True))
        else:
            points.append(DiagramPoint(float(values[b]), float(values[d]), names[b], False))
    return PersistenceDiagram(tuple(points), region_id, None)


def sublevel_diagram(graph: DualGraph, region_id: str = "") -> PersistenceDiagram:
    """Persistence diagram of the sublevel filtration by vertex filtration value.

    Vertices enter in order of ``(filtration, imputed last, unit id)``. When
    two components merge, the one whose birth vertex entered later dies at
    the current value; merges at zero persistence emit nothing. Each
    connected component leaves one essential point with infinite death.
    """
    n = len(graph)
    values = np.array([v.filtration for v in graph.vertices], dtype=np.float64)
    imputed = np.array([v.imputed for v in graph.vertices], dtype=bool)
    indptr, indices = graph.csr() if n else (np.zeros(1, np.int64), np.empty(0, np.int64))
    return _diagram(values, imputed, np.arange(n), indptr, indices, graph.ids, region_id)


def diagram_from_values(
    values,
    edges,
    ids: Sequence[str] | None = None,
    imputed=None,
    region_id: str = "",
) -> PersistenceDiagram:
    """Same as :func:`sublevel_diagram`, from raw arrays.

    ``edges`` is an ``(m, 2)`` array of vertex positions. Ties are broken by
    ``ids`` order when given, else by position.
    """
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[0]
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if edges.size and (edges.min() < 0 or edges.max() >= n):
        raise DiagramError("edge endpoint out of range")
    edges = edges[edges[:, 0] != edges[:, 1]]
    rows = np.concatenate([edges[:, 0], edges[:, 1]])
    cols = np.concatenate([edges[:, 1], edges[:, 0]])
    perm = np.argsort(rows, kind="stable")
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
    indices = cols[perm].astype(np.int64)
    if ids is None:
        names = [str(i) for i in range(n)]
        tie_rank = np.arange(n)
    else:
        names = [str(i) for i in ids]
        if len(names) != n:
            raise DiagramError("ids and values differ in length")
        tie_rank = np.argsort(np.argsort(np.array(names, dtype=object), kind="stable"), kind="stable")
    imputed = np.zeros(n, dtype=bool) if imputed is None else np.asarray(imputed, dtype=bool)
    return _diagram(values, imputed, tie_rank, indptr, indices, names, region_id)


def cap_infinite(diagram: PersistenceDiagram, cap: float = 1.0) -> PersistenceDiagram:
    """Replace the death of every essential point by ``cap``.

    Essential flags stay set so that provenance survives serialisation, and
    every component keeps its point. A component born exactly at ``cap``
    (zero share throughout, for the default cap) becomes ``(cap, cap)``,
    which has zero persistence and costs nothing in any distance.
    """
    cap = float(cap)
    finite = [p.death for p in diagram.points if not p.essential]
    if finite and cap < max(finite):
        raise DiagramError(f"cap {cap} is below the largest finite death {max(finite)}")
    points = []
    for p in diagram.points:
        if p.essential:
            if p.birth > cap:
                raise DiagramError(f"cap {cap} is below essential birth {p.birth}")
            p = replace(p, death=cap)
        points.append(p)
    return PersistenceDiagram(tuple(points), diagram.region_id, cap)


# --------------------------------------------------------------------------
# JSON
# --------------------------------------------------------------------------

def diagram_to_dict(diagram: PersistenceDiagram) -> dict:
    return {
        "region_id": diagram.region_id,
        "cap": diagram.cap,
        "points": [
            {"birth": p.birth,
             "death": "inf" if math.isinf(p.death) else p.death,
             "birth_vertex": p.birth_vertex,
             "essential": p.essential}
            for p in diagram.points
        ],
    }


def diagram_from_dict(data: Mapping) -> PersistenceDiagram:
    try:
        points = []
        for p in data["points"]:
            death = p["death"]
            death = math.inf if death == "inf" else float(death)
            bv = p.get("birth_vertex")
            points.append(DiagramPoint(float(p["birth"]), death,
                                       None if bv is None else str(bv),
                                       bool(p.get("essential", math.isinf(death)))))
        cap = data.get("cap")
        return PersistenceDiagram(tuple(points), str(data.get("region_id", "")),
                                  None if cap is None else float(cap))
    except (KeyError, TypeError, ValueError) as exc:
        raise DiagramError(f"malformed diagram JSON ({exc})") from None


def write_diagram_json(diagram: PersistenceDiagram, path: str | Path) -> None:
    Path(path).write_text(json.dumps(diagram_to_dict(diagram), indent=1) + "\n")


def read_diagram_json(path: str | Path) -> PersistenceDiagram:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DiagramError(f"{path}: not valid JSON ({exc})") from None
    return diagram_from_dict(data)
