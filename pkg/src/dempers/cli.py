"""``dempers`` command line: ingest -> diagram -> metrics -> analytics -> clustering."""

from __future__ import annotations

import argparse
import contextlib
import json
import math
import os
import sys
import tempfile
from pathlib import Path

from . import analytics, clustering, geo, metrics, persistence, plotting

NOTICE = "notice"


class CLIError(Exception):
    pass


def _fmt(x: float) -> str:
    return f"{x:.12f}"


def _order(text: str) -> float:
    if text.lower() in ("inf", "infinity"):
        return math.inf
    try:
        p = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid order {text!r}") from None
    if not p >= 1:
        raise argparse.ArgumentTypeError("p must be >= 1 or 'inf'")
    return p


def _positive_int(text: str) -> int:
    try:
        k = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if k < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return k


@contextlib.contextmanager
def _staged(path: str | Path):
    """Yield a temporary path that replaces ``path`` only if the block succeeds."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    os.close(fd)
    try:
        yield tmp
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def _write_text(path, text: str) -> None:
    with _staged(path) as tmp:
        with open(tmp, "w") as fh:
            fh.write(text)


def _check_out(path) -> Path:
    out = Path(path)
    if not out.parent.exists():
        raise CLIError(f"output directory {out.parent} does not exist")
    return out


def _load_capped(path, cap: float = 1.0) -> persistence.PersistenceDiagram:
    d = persistence.read_diagram_json(path)
    if not d.region_id:
        d = persistence.PersistenceDiagram(d.points, Path(path).stem, d.cap)
    if not d.is_capped:
        print(f"{NOTICE}: {path}: infinite deaths capped at {cap:g}", file=sys.stderr)
        d = persistence.cap_infinite(d, cap)
    return d


def _load_dir(directory) -> list[persistence.PersistenceDiagram]:
    root = Path(directory)
    if not root.is_dir():
        raise CLIError(f"{root} is not a directory")
    files = sorted(root.glob("*.json"))
    diagrams = [_load_capped(f) for f in files]
    ids = [d.region_id for d in diagrams]
    dup = sorted({i for i in ids if ids.count(i) > 1})
    if dup:
        raise CLIError(f"duplicate region ids in {root}: {dup}")
    if len(diagrams) < 2:
        raise CLIError(f"{root} must contain at least two diagram JSON files")
    return sorted(diagrams, key=lambda d: d.region_id)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_ingest(args) -> None:
    out = _check_out(args.out)
    units = geo.read_geojson(args.geojson, id_field=args.id_field,
                             pop_field=args.pop_field, group_field=args.group_field)
    graph = geo.build_dual_graph(units, args.adjacency, snap=args.snap, method=args.method)
    graph = geo.impute_low_population(graph, args.threshold)
    with _staged(out) as tmp:
        geo.write_graph_json(graph, tmp)
    imputed = sum(v.imputed for v in graph.vertices)
    print(f"vertices={len(graph)} edges={len(graph.edges)} "
          f"components={graph.component_count} imputed={imputed}")


def cmd_diagram(args) -> None:
    out = _check_out(args.out)
    graph = geo.read_graph_json(args.graph)
    region = args.region_id if args.region_id is not None else Path(args.graph).stem
    dgm = persistence.sublevel_diagram(graph, region)
    if not args.no_cap:
        dgm = persistence.cap_infinite(dgm, args.cap)
    with _staged(out) as tmp:
        persistence.write_diagram_json(dgm, tmp)
    print(f"points={len(dgm)} essential={dgm.essential_count}")


def cmd_stats(args) -> None:
    print(_fmt(metrics.total_persistence(_load_capped(args.diagram))))


def cmd_distance(args) -> None:
    a, b = _load_capped(args.first), _load_capped(args.second)
    print(_fmt(metrics.wasserstein(a, b, args.p)))


def cmd_change(args) -> None:
    a, b = _load_capped(args.before), _load_capped(args.after)
    print(_fmt(metrics.wasserstein(a, b, 1)))


def cmd_matrix(args) -> None:
    out = _check_out(args.out)
    diagrams = _load_dir(args.directory)
    mat = analytics.distance_matrix(diagrams, args.p, n_jobs=args.jobs)
    with _staged(out) as tmp:
        analytics.write_matrix_csv(mat, tmp)
    print(f"diagrams={len(diagrams)} p={args.p:g}")


def cmd_mds(args) -> None:
    out = _check_out(args.out)
    mat = analytics.read_matrix_csv(args.matrix)
    emb = analytics.classical_mds(mat, args.dim)
    with _staged(out) as tmp:
        analytics.write_embedding_csv(emb, tmp)


def cmd_outliers(args) -> None:
    out = _check_out(args.out)
    mat = analytics.read_matrix_csv(args.matrix)
    n = len(mat.ids)
    if n <= args.k_max:
        raise CLIError(f"{n} diagrams cannot support --k-max {args.k_max}; "
                       f"pass a smaller range, e.g. --k-min 1 --k-max {max(1, n - 1)}")
    report = analytics.averaged_lof(mat, args.k_min, args.k_max, args.eps)
    with _staged(out) as tmp:
        analytics.write_outlier_csv(report, tmp)
    flagged = report.outliers
    print(f"outliers={len(flagged)}" + (" " + ",".join(flagged) if flagged else ""))


def cmd_cluster(args) -> None:
    out = _check_out(args.out)
    diagrams = _load_dir(args.directory)
    if args.k > len(diagrams):
        raise CLIError(f"--k {args.k} exceeds the number of diagrams ({len(diagrams)})")
    res = clustering.kmeans_diagrams(diagrams, args.k, args.seed, args.max_iter)
    _write_text(out, json.dumps(res.to_dict(), indent=1) + "\n")
    print(f"k={res.k} distortion={_fmt(res.distortion)} iterations={res.iterations}")


def cmd_elbow(args) -> None:
    out = _check_out(args.out)
    diagrams = _load_dir(args.directory)
    k_max = len(diagrams) if args.k_max is None else args.k_max
    if not 1 <= args.k_min <= k_max <= len(diagrams):
        raise CLIError(f"k range {args.k_min}..{k_max} must lie within 1..{len(diagrams)}")
    curve = clustering.elbow_curve(diagrams, range(args.k_min, k_max + 1), args.seed, args.max_iter)
    _write_text(out, "k,distortion\n" + "".join(f"{k},{d!r}\n" for k, d in curve))


def cmd_di(args) -> None:
    path = Path(args.attributes)
    fields = dict(id_field=args.id_field, pop_field=args.pop_field, group_field=args.group_field)
    if path.suffix.lower() in (".json", ".geojson"):
        table = geo.AttributeTable.from_units(geo.read_geojson(path, **fields))
    else:
        table = geo.AttributeTable.read_csv(path, **fields)
    print(_fmt(analytics.dissimilarity_index(table)))


def cmd_plot(args) -> None:
    out = _check_out(args.out)
    src = Path(args.input)
    if src.suffix.lower() == ".json":
        dgm = persistence.read_diagram_json(src)
        svg = plotting.diagram_svg(dgm, args.title)
    else:
        emb = analytics.read_embedding_csv(src)
        hot = []
        if args.highlight:
            with open(args.highlight) as fh:
                lines = fh.read().splitlines()[1:]
            hot = [ln.split(",")[0] for ln in lines if ln.rstrip().endswith(",true")]
        svg = plotting.scatter_svg(emb.ids, emb.coordinates, hot, args.title or "")
    _write_text(out, svg)


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def _field_flags(p):
    p.add_argument("--id-field", default="id", help="property holding the unit id")
    p.add_argument("--pop-field", default="total_pop", help="property holding total population")
    p.add_argument("--group-field", default="group_pop", help="property holding group population")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dempers", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="GeoJSON units -> dual graph JSON")
    p.add_argument("geojson")
    p.add_argument("-o", "--out", required=True)
    _field_flags(p)
    p.add_argument("--adjacency", choices=("rook", "queen"), default="rook")
    p.add_argument("--method", choices=("vertex", "geometry"), default="vertex",
                   help="shared snapped vertices (default) or shapely geometry tests")
    p.add_argument("--threshold", type=int, default=geo.DEFAULT_THRESHOLD,
                   help="units with fewer people are imputed (default 10)")
    p.add_argument("--snap", type=float, default=geo.DEFAULT_SNAP,
                   help="coordinate snapping grid (default 1e-7)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("diagram", help="graph JSON -> persistence diagram JSON")
    p.add_argument("graph")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--region-id", help="defaults to the graph file name")
    p.add_argument("--cap", type=float, default=1.0, help="value replacing infinite deaths")
    p.add_argument("--no-cap", action="store_true", help="keep infinite deaths")
    p.set_defaults(func=cmd_diagram)

    p = sub.add_parser("stats", help="total persistence of a diagram")
    p.add_argument("diagram")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("distance", help="W_p distance between two diagrams")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("--p", type=_order, default=1.0, help="order, a number >= 1 or 'inf'")
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("change", help="W_1 distance between two epochs of one region")
    p.add_argument("before")
    p.add_argument("after")
    p.set_defaults(func=cmd_change)

    p = sub.add_parser("matrix", help="pairwise distance matrix of a directory of diagrams")
    p.add_argument("directory")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--p", type=_order, default=1.0)
    p.add_argument("--jobs", type=_positive_int, default=1)
    p.set_defaults(func=cmd_matrix)

    p = sub.add_parser("mds", help="classical MDS of a distance matrix CSV")
    p.add_argument("matrix")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--dim", type=_positive_int, default=2)
    p.set_defaults(func=cmd_mds)

    p = sub.add_parser("outliers", help="averaged LOF outlier report")
    p.add_argument("matrix")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--k-min", type=_positive_int, default=10)
    p.add_argument("--k-max", type=_positive_int, default=19)
    p.add_argument("--eps", type=float, default=2.0)
    p.set_defaults(func=cmd_outliers)

    p = sub.add_parser("cluster", help="k-means of diagrams under W_2")
    p.add_argument("directory")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--k", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iter", type=_positive_int, default=50)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("elbow", help="distortion for a range of k")
    p.add_argument("directory")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--k-min", type=_positive_int, default=1)
    p.add_argument("--k-max", type=_positive_int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iter", type=_positive_int, default=50)
    p.set_defaults(func=cmd_elbow)

    p = sub.add_parser("di", help="dissimilarity index of an attribute CSV or GeoJSON")
    p.add_argument("attributes")
    _field_flags(p)
    p.set_defaults(func=cmd_di)

    p = sub.add_parser("plot", help="SVG of a diagram JSON or an embedding CSV")
    p.add_argument("input")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--highlight", help="outlier report CSV; flagged ids drawn in red")
    p.add_argument("--title")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (CLIError, geo.IngestError, persistence.DiagramError, ValueError, OSError) as exc:
        print(f"dempers {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
