"""Polygon + attribute ingest, dual adjacency graphs and group shares."""

from __future__ import annotations

import csv
import json
from collections import defaultdict
from dataclasses import dataclass, field, replace
from itertools import combinations
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

__all__ = [
    "IngestError",
    "UnitRecord",
    "Vertex",
    "DualGraph",
    "AttributeTable",
    "build_dual_graph",
    "compute_shares",
    "impute_low_population",
    "read_geojson",
    "units_from_geojson",
    "write_graph_json",
    "read_graph_json",
    "DEFAULT_SNAP",
    "DEFAULT_THRESHOLD",
]

DEFAULT_SNAP = 1e-7
DEFAULT_THRESHOLD = 10

Ring = tuple[tuple[float, float], ...]


class IngestError(ValueError):
    """Bad polygon or attribute input. ``unit_id`` names the offending unit."""

    def __init__(self, message: str, unit_id: str | None = None):
        super().__init__(message if unit_id is None else f"unit {unit_id!r}: {message}")
        self.unit_id = unit_id


@dataclass(frozen=True)
class UnitRecord:
    """One geographic unit: population counts plus its boundary.

    ``polygons`` holds one entry per polygon part; each part is a sequence of
    closed rings, exterior first.
    """

    unit_id: str
    total_pop: int
    group_pop: int
    polygons: tuple[tuple[Ring, ...], ...] = ()

    def __post_init__(self):
        if self.total_pop < 0 or self.group_pop < 0:
            raise IngestError("population counts must be nonnegative", self.unit_id)
        if self.group_pop > self.total_pop:
            raise IngestError(
                f"group population {self.group_pop} exceeds total {self.total_pop}",
                self.unit_id,
            )

    @property
    def rings(self) -> list[Ring]:
        return [ring for part in self.polygons for ring in part]


@dataclass(frozen=True)
class Vertex:
    id: str
    share: float
    filtration: float
    total_pop: int
    imputed: bool = False


@dataclass(frozen=True)
class DualGraph:
    """Vertices sorted by id, edges as sorted ``(smaller_id, larger_id)`` pairs."""

    vertices: tuple[Vertex, ...]
    edges: tuple[tuple[str, str], ...]
    component_count: int = field(init=False)

    def __post_init__(self):
        verts = tuple(sorted(self.vertices, key=lambda v: v.id))
        ids = [v.id for v in verts]
        if len(set(ids)) != len(ids):
            raise IngestError("duplicate vertex ids in graph")
        known = set(ids)
        edges = set()
        for a, b in self.edges:
            if a == b:
                raise IngestError("self-loop in graph", a)
            if a not in known or b not in known:
                raise IngestError(f"edge ({a!r}, {b!r}) references an unknown vertex")
            edges.add((a, b) if a < b else (b, a))
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "edges", tuple(sorted(edges)))
        object.__setattr__(self, "component_count", self._count_components())

    def __len__(self):
        return len(self.vertices)

    @property
    def ids(self) -> list[str]:
        return [v.id for v in self.vertices]

    def index(self) -> dict[str, int]:
        return {v.id: i for i, v in enumerate(self.vertices)}

    def edge_index_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        idx = self.index()
        src = np.fromiter((idx[a] for a, _ in self.edges), dtype=np.int64, count=len(self.edges))
        dst = np.fromiter((idx[b] for _, b in self.edges), dtype=np.int64, count=len(self.edges))
        return src, dst

    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """Symmetric adjacency as ``(indptr, indices)`` over vertex positions."""
        n = len(self.vertices)
        src, dst = self.edge_index_arrays()
        rows = np.concatenate([src, dst])
        cols = np.concatenate([dst, src])
        order = np.lexsort((cols, rows))
        rows, cols = rows[order], cols[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
        return indptr, cols.astype(np.int64)

    def neighbors(self) -> dict[str, list[str]]:
        nbrs: dict[str, list[str]] = {v.id: [] for v in self.vertices}
        for a, b in self.edges:
            nbrs[a].append(b)
            nbrs[b].append(a)
        return nbrs

    def component_labels(self) -> np.ndarray:
        n = len(self.vertices)
        if n == 0:
            return np.empty(0, dtype=np.int64)
        src, dst = self.edge_index_arrays()
        adj = coo_matrix((np.ones(len(src)), (src, dst)), shape=(n, n))
        _, labels = connected_components(adj, directed=False)
        return labels

    def _count_components(self) -> int:
        labels = self.component_labels()
        return int(labels.max()) + 1 if labels.size else 0


# --------------------------------------------------------------------------
# shares and imputation
# --------------------------------------------------------------------------

def compute_shares(units: Iterable[UnitRecord]) -> dict[str, float]:
    """Group share ``group_pop / total_pop`` for every unit with people in it.

    Units with zero population are left out; imputation fills them in.
    """
    return {u.unit_id: u.group_pop / u.total_pop for u in units if u.total_pop > 0}


def impute_low_population(graph: DualGraph, threshold: int = DEFAULT_THRESHOLD) -> DualGraph:
    """Replace shares of units with fewer than ``threshold`` people.

    Each such unit takes the largest share among its neighbours. Chains of
    low-population units are resolved by sweeping them in id order until
    nothing changes, so a connected run of them ends up with the largest
    share found on its border. Runs with no populated border get share 0.
    """
    low = {v.id for v in graph.vertices if v.total_pop < threshold}
    share = {v.id: v.share for v in graph.vertices if v.id not in low}
    nbrs = graph.neighbors()
    order = sorted(low)
    changed = True
    while changed:
        changed = False
        for vid in order:
            cand = [share[u] for u in nbrs[vid] if u in share]
            if not cand:
                continue
            best = max(cand)
            if share.get(vid) != best:
                share[vid] = best
                changed = True
    vertices = []
    for v in graph.vertices:
        r = share.get(v.id, 0.0)
        vertices.append(replace(v, share=r, filtration=1.0 - r, imputed=v.id in low))
    return DualGraph(tuple(vertices), graph.edges)


# --------------------------------------------------------------------------
# adjacency
# --------------------------------------------------------------------------

def _validated_rings(unit: UnitRecord) -> list[Ring]:
    rings = unit.rings
    if not rings:
        raise IngestError("unit has no polygon rings", unit.unit_id)
    for ring in rings:
        if len(ring) < 4 or tuple(ring[0]) != tuple(ring[-1]):
            raise IngestError("polygon ring is not closed", unit.unit_id)
        if len({tuple(p) for p in ring[:-1]}) < 3:
            raise IngestError("polygon ring has fewer than 3 distinct points", unit.unit_id)
    return rings


def _snap(ring: Ring, snap: float) -> np.ndarray:
    return np.rint(np.asarray(ring, dtype=np.float64) / snap).astype(np.int64)


def _edges_by_shared_vertices(rings_per_unit, snap, rule):
    buckets: dict[tuple, set[int]] = defaultdict(set)
    for ui, rings in enumerate(rings_per_unit):
        for ring in rings:
            pts = [tuple(p) for p in _snap(ring, snap).tolist()]
            if rule == "queen":
                for p in pts:
                    buckets[p].add(ui)
            else:
                for p, q in zip(pts[:-1], pts[1:]):
                    if p != q:
                        buckets[(p, q) if p < q else (q, p)].add(ui)
    pairs = set()
    for members in buckets.values():
        if len(members) > 1:
            pairs.update(combinations(sorted(members), 2))
    return pairs


def _edges_by_geometry(units, snap, rule):
    try:
        import shapely
        from shapely.geometry import MultiPolygon, Polygon
    except ImportError as exc:  # pragma: no cover
        raise ImportError("method='geometry' requires shapely") from exc
    geoms = []
    for u in units:
        parts = []
        for part in u.polygons:
            rings = [_snap(r, snap) * snap for r in part]
            parts.append(Polygon(rings[0], rings[1:]))
        geoms.append(parts[0] if len(parts) == 1 else MultiPolygon(parts))
    tree = shapely.STRtree(geoms)
    left, right = tree.query(geoms, predicate="intersects")
    pairs = set()
    for i, j in zip(left.tolist(), right.tolist()):
        if i >= j:
            continue
        if rule == "queen":
            pairs.add((i, j))
        elif geoms[i].boundary.intersection(geoms[j].boundary).length > 0:
            pairs.add((i, j))
    return pairs


def build_dual_graph(
    units: Sequence[UnitRecord],
    adjacency_rule: str = "rook",
    *,
    snap: float = DEFAULT_SNAP,
    method: str = "vertex",
) -> DualGraph:
    """Dual graph of ``units`` with raw shares and filtration ``1 - share``.

    Coordinates are snapped to a grid of spacing ``snap``. With the default
    ``method="vertex"``, rook adjacency means two units share a snapped
    boundary segment and queen adjacency means they share a snapped boundary
    point. ``method="geometry"`` uses shapely on the snapped polygons instead,
    which also catches boundaries that meet at T-junctions.

    Imputation is a separate step, see :func:`impute_low_population`.
    """
    if adjacency_rule not in ("rook", "queen"):
        raise ValueError(f"adjacency_rule must be 'rook' or 'queen', got {adjacency_rule!r}")
    if method not in ("vertex", "geometry"):
        raise ValueError(f"method must be 'vertex' or 'geometry', got {method!r}")
    if not snap > 0:
        raise ValueError("snap must be positive")
    if not units:
        raise IngestError("no units given")
    seen = set()
    for u in units:
        if u.unit_id in seen:
            raise IngestError("duplicate unit id", u.unit_id)
        seen.add(u.unit_id)
    rings = [_validated_rings(u) for u in units]

    if method == "vertex":
        pairs = _edges_by_shared_vertices(rings, snap, adjacency_rule)
    else:
        pairs = _edges_by_geometry(units, snap, adjacency_rule)

    shares = compute_shares(units)
    vertices = []
    for u in units:
        r = shares.get(u.unit_id, 0.0)
        vertices.append(Vertex(u.unit_id, r, 1.0 - r, u.total_pop))
    edges = tuple((units[i].unit_id, units[j].unit_id) for i, j in pairs)
    return DualGraph(tuple(vertices), edges)


# --------------------------------------------------------------------------
# attribute table
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class AttributeTable:
    """Per-unit ``(unit_id, total_pop, group_pop)`` rows."""

    rows: tuple[tuple[str, int, int], ...]

    def __post_init__(self):
        ids = [r[0] for r in self.rows]
        if len(set(ids)) != len(ids):
            dup = next(i for i in ids if ids.count(i) > 1)
            raise IngestError("duplicate unit id", dup)
        for uid, total, group in self.rows:
            if total < 0 or group < 0:
                raise IngestError("population counts must be nonnegative", uid)
            if group > total:
                raise IngestError(f"group population {group} exceeds total {total}", uid)

    @classmethod
    def from_units(cls, units: Iterable[UnitRecord]) -> "AttributeTable":
        return cls(tuple((u.unit_id, u.total_pop, u.group_pop) for u in units))

    @classmethod
    def read_csv(
        cls,
        path: str | Path,
        id_field: str = "id",
        pop_field: str = "total_pop",
        group_field: str = "group_pop",
    ) -> "AttributeTable":
        rows = []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            missing = {id_field, pop_field, group_field} - set(reader.fieldnames or ())
            if missing:
                raise IngestError(f"{path}: missing columns {sorted(missing)}")
            for rec in reader:
                uid = rec[id_field]
                rows.append((uid, _count(rec[pop_field], uid, pop_field),
                             _count(rec[group_field], uid, group_field)))
        return cls(tuple(rows))

    def group_counts(self) -> np.ndarray:
        return np.array([r[2] for r in self.rows], dtype=np.int64)

    def complement_counts(self) -> np.ndarray:
        return np.array([r[1] - r[2] for r in self.rows], dtype=np.int64)


# --------------------------------------------------------------------------
# file formats
# --------------------------------------------------------------------------

def _count(value, unit_id, name) -> int:
    if isinstance(value, bool):
        raise IngestError(f"field {name!r} is not a count: {value!r}", unit_id)
    if isinstance(value, str):
        try:
            value = float(value) if value.strip() else None
        except ValueError:
            raise IngestError(f"field {name!r} is not a count: {value!r}", unit_id) from None
    if not isinstance(value, (int, float)) or value != value or value < 0 or int(value) != value:
        raise IngestError(f"field {name!r} is not a nonnegative integer: {value!r}", unit_id)
    return int(value)


def _polygon_parts(geometry, unit_id) -> tuple[tuple[Ring, ...], ...]:
    if not geometry:
        raise IngestError("feature has no geometry", unit_id)
    kind = geometry.get("type")
    coords = geometry.get("coordinates")
    if kind == "Polygon":
        parts = [coords]
    elif kind == "MultiPolygon":
        parts = coords
    else:
        raise IngestError(f"unsupported geometry type {kind!r}", unit_id)
    try:
        return tuple(
            tuple(tuple((float(p[0]), float(p[1])) for p in ring) for ring in part)
            for part in parts
        )
    except (TypeError, IndexError, ValueError):
        raise IngestError("malformed polygon coordinates", unit_id) from None


def units_from_geojson(
    data: Mapping,
    id_field: str = "id",
    pop_field: str = "total_pop",
    group_field: str = "group_pop",
) -> list[UnitRecord]:
    if data.get("type") != "FeatureCollection":
        raise IngestError("GeoJSON input must be a FeatureCollection")
    units = []
    for n, feat in enumerate(data.get("features", [])):
        props = feat.get("properties") or {}
        if id_field not in props:
            raise IngestError(f"feature #{n} has no {id_field!r} property")
        uid = str(props[id_field])
        for name in (pop_field, group_field):
            if name not in props:
                raise IngestError(f"missing property {name!r}", uid)
        units.append(UnitRecord(
            uid,
            _count(props[pop_field], uid, pop_field),
            _count(props[group_field], uid, group_field),
            _polygon_parts(feat.get("geometry"), uid),
        ))
    return units


def read_geojson(path: str | Path, **fields) -> list[UnitRecord]:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise IngestError(f"{path}: not valid JSON ({exc})") from None
    return units_from_geojson(data, **fields)


def graph_to_dict(graph: DualGraph) -> dict:
    return {
        "vertices": [
            {"id": v.id, "share": v.share, "filtration": v.filtration,
             "pop": v.total_pop, "imputed": v.imputed}
            for v in graph.vertices
        ],
        "edges": [[a, b] for a, b in graph.edges],
    }


def graph_from_dict(data: Mapping) -> DualGraph:
    try:
        vertices = tuple(
            Vertex(str(v["id"]), float(v["share"]), float(v["filtration"]),
                   int(v["pop"]), bool(v["imputed"]))
            for v in data["vertices"]
        )
        edges = tuple((str(a), str(b)) for a, b in data["edges"])
    except (KeyError, TypeError, ValueError) as exc:
        raise IngestError(f"malformed graph JSON ({exc})") from None
    return DualGraph(vertices, edges)


def write_graph_json(graph: DualGraph, path: str | Path) -> None:
    Path(path).write_text(json.dumps(graph_to_dict(graph), indent=1) + "\n")


def read_graph_json(path: str | Path) -> DualGraph:
    return graph_from_dict(json.loads(Path(path).read_text()))
