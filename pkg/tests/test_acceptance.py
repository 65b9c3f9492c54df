"""One test per acceptance criterion; the terminal summary prints a PASS/FAIL line for each."""

import json
import math
import os
import subprocess
import sys
import textwrap
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy.spatial.distance import pdist, squareform

from conftest import dgm, jitter, random_region
from oracles import brute_wasserstein, component_count_integral, random_graph, random_pairs, sweep_diagram
from dempers import geo
from dempers.analytics import averaged_lof, classical_mds, distance_matrix
from dempers.clustering import frechet_mean, kmeans_diagrams, w2_squared
from dempers.metrics import total_persistence, wasserstein
from dempers.persistence import cap_infinite, diagram_from_values, sublevel_diagram

pytestmark = pytest.mark.acceptance
ORDERS = [1, 2, math.inf]


def triples(d):
    return sorted((p.birth, p.death, int(p.birth_vertex)) for p in d)


def test_c01_persistence_oracle(record_property, warm_kernels):
    record_property("criterion", "500 random graphs equal the sweep oracle exactly, < 10 s")
    rng = np.random.default_rng(20240101)
    start = time.perf_counter()
    for _ in range(500):
        values, edges = random_graph(rng)
        assert triples(diagram_from_values(values, edges)) == sweep_diagram(values, edges)
    assert time.perf_counter() - start < 10


def test_c02_wasserstein_oracle(record_property, warm_kernels):
    record_property("criterion", "200 pairs, W_p for p in {1,2,inf} within 1e-9 of enumeration, < 30 s")
    rng = np.random.default_rng(20240102)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        P, Q = random_pairs(rng), random_pairs(rng)
        for p in ORDERS:
            worst = max(worst, abs(wasserstein(dgm(P), dgm(Q), p) - brute_wasserstein(P, Q, p)))
    assert worst <= 1e-9
    assert time.perf_counter() - start < 30


def test_c03_metric_axioms(record_property):
    record_property("criterion", "symmetry, identity, triangle on 100 triples for p in {1,2,inf}, tol 1e-9")
    rng = np.random.default_rng(20240103)
    for _ in range(100):
        P, Q, R = (dgm(random_pairs(rng, 6)) for _ in range(3))
        for p in ORDERS:
            pq, qp = wasserstein(P, Q, p), wasserstein(Q, P, p)
            assert abs(pq - qp) <= 1e-9
            assert wasserstein(P, P, p) <= 1e-9
            assert (pq <= 1e-9) == (P.pairs() == Q.pairs())
            assert wasserstein(P, R, p) <= pq + wasserstein(Q, R, p) + 1e-9


def test_c04_integral_identity(record_property):
    record_property("criterion", "TP (cap 1) equals the component-count integral within 1e-12; TP == W1(P, {}) exactly")
    rng = np.random.default_rng(20240104)
    for i in range(100):
        values, edges = random_graph(rng, ties=bool(i % 2))
        P = cap_infinite(diagram_from_values(values, edges), 1.0)
        assert abs(total_persistence(P) - component_count_integral(values, edges)) <= 1e-12
        assert total_persistence(P) == wasserstein(P, dgm([]), 1)


def test_c05_anchored_share_values(record_property):
    record_property("criterion", "f = 1 - 2291/2319, 1 - 7603/11309, 1 - 1029/1710 within 1e-9")
    counts = {"t-a-2010": (2319, 2291), "t-b-2010": (11309, 7603), "t-a-2020": (1710, 1029)}
    printed = {"t-a-2010": 0.012074, "t-b-2010": 0.327704, "t-a-2020": 0.398246}
    ring = ((0, 0), (1, 0), (1, 1), (0, 1), (0, 0))
    units = [geo.UnitRecord(uid, t, g, ((ring,),)) for uid, (t, g) in counts.items()]
    f = {v.id: v.filtration for v in geo.build_dual_graph(units).vertices}
    for uid, (total, group) in counts.items():
        assert abs(f[uid] - float(1 - Fraction(group, total))) <= 1e-9
        assert round(f[uid], 6) == printed[uid]


def test_c06_essential_count(record_property):
    record_property("criterion", "essential points == connected components on 100 disconnected graphs")
    rng = np.random.default_rng(20240106)
    seen = 0
    while seen < 100:
        values, edges = random_graph(rng, n_max=10, p_edge=0.15)
        g = geo.DualGraph(tuple(geo.Vertex(str(i), 1 - v, v, 100) for i, v in enumerate(values)),
                          tuple((str(a), str(b)) for a, b in edges))
        if g.component_count < 2:
            continue
        seen += 1
        d = sublevel_diagram(g)
        assert d.essential_count == g.component_count
        assert cap_infinite(d).essential_count == g.component_count


def test_c07_mds_round_trip(record_property):
    record_property("criterion", "MDS of 25 planar points reproduces distances within 1e-6")
    X = np.random.default_rng(20240107).random((25, 2))
    D = squareform(pdist(X))
    emb = classical_mds(D)
    assert np.abs(squareform(pdist(emb.coordinates)) - D).max() <= 1e-6


TEMPLATE = [(0.05, 0.6), (0.1, 0.3), (0.2, 0.5), (0.3, 0.35), (0.4, 0.9)]
FAR = [(0.02, 1.0), (0.05, 0.98), (0.1, 0.95), (0.6, 0.61)]


@pytest.mark.parametrize("seed", range(5))
def test_c08_outlier_detection(record_property, seed):
    record_property("criterion", "30 diagrams, one planted far: averaged LOF k=10..19, eps=2 flags only it")
    rng = np.random.default_rng(20240108 + seed)
    planted = int(rng.integers(30))
    ds = [dgm(FAR if i == planted else jitter(rng, TEMPLATE, 0.02), f"r{i:02d}") for i in range(30)]
    report = averaged_lof(distance_matrix(ds, p=1), 10, 19, 2.0)
    assert report.outliers == [f"r{planted:02d}"]


A = [(0.05, 0.9), (0.1, 0.6), (0.3, 0.5)]
B = [(0.5, 0.55), (0.6, 0.7)]


def test_c09_clustering(record_property):
    record_property("criterion", "monotone distortion; mean of 5 identical; planted k=2 for 5 seeds; k=n gives 0")
    same = dgm(A)
    mean = frechet_mean([same] * 5)
    assert mean.pairs() == same.pairs()

    rng = np.random.default_rng(20240109)
    ds = [dgm(jitter(rng, A, 0.004), f"a{i}") for i in range(8)]
    ds += [dgm(jitter(rng, B, 0.004), f"b{i}") for i in range(8)]
    noise = max(math.sqrt(w2_squared(d, dgm(A if d.region_id[0] == "a" else B))) for d in ds)
    assert math.sqrt(w2_squared(dgm(A), dgm(B))) >= 10 * noise
    for seed in range(5):
        res = kmeans_diagrams(ds, 2, rng_seed=seed)
        assert len(set(res.labels[:8])) == 1 and len(set(res.labels[8:])) == 1
        assert res.labels[0] != res.labels[8]
        assert all(b <= a + 1e-9 for a, b in zip(res.history, res.history[1:]))

    noisy = [dgm(jitter(rng, A if rng.random() < 0.5 else B, 0.1), str(i)) for i in range(20)]
    for k in (1, 2, 3, 5):
        h = kmeans_diagrams(noisy, k, rng_seed=k).history
        assert all(b <= a + 1e-9 for a, b in zip(h, h[1:]))
    assert kmeans_diagrams(ds, len(ds), rng_seed=0).distortion == 0


PIPELINE = textwrap.dedent("""
    import sys
    from pathlib import Path
    from dempers.cli import main
    base = Path(sys.argv[1])
    (base / "dg").mkdir()
    steps = []
    for city in sorted(p.stem for p in base.glob("*.geojson")):
        steps.append(["ingest", f"{city}.geojson", "-o", f"{city}.graph.json"])
        steps.append(["diagram", f"{city}.graph.json", "-o", f"dg/{city}.json", "--region-id", city])
    steps += [
        ["matrix", "dg", "-o", "matrix.csv"],
        ["mds", "matrix.csv", "-o", "coords.csv"],
        ["outliers", "matrix.csv", "-o", "outliers.csv", "--k-min", "2", "--k-max", "4"],
        ["plot", "coords.csv", "-o", "coords.svg", "--highlight", "outliers.csv"],
        ["cluster", "dg", "-o", "clusters.json", "--k", "2", "--seed", "11"],
        ["elbow", "dg", "-o", "elbow.csv", "--seed", "11"],
    ]
    for step in steps:
        argv = [step[0]] + [str(base / a) if ("." in a and not a.startswith("-")) or a == "dg" else a
                             for a in step[1:]]
        if main(argv) != 0:
            sys.exit(1)
""")


def test_c10_determinism(record_property, tmp_path):
    record_property("criterion", "two ingest-to-cluster CLI runs with the same seed are byte-identical")
    snapshots = []
    for run, hashseed in ((0, "1"), (1, "12345")):
        base = tmp_path / f"run{run}"
        base.mkdir()
        for i in range(7):
            gj = random_region(np.random.default_rng(500 + i), 5, 5)
            (base / f"city{i}.geojson").write_text(json.dumps(gj))
        env = dict(os.environ, PYTHONHASHSEED=hashseed)
        proc = subprocess.run([sys.executable, "-c", PIPELINE, str(base)], env=env,
                              capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        snapshots.append({str(p.relative_to(base)): p.read_bytes()
                          for p in sorted(base.rglob("*")) if p.is_file()})
    assert len(snapshots[0]) == 7 * 3 + 6
    assert snapshots[0] == snapshots[1]


def _random_graph(n, m, rng):
    ids = [f"t{i:05d}" for i in range(n)]
    f = rng.random(n)
    verts = tuple(geo.Vertex(ids[i], 1 - f[i], f[i], 100) for i in range(n))
    # a spanning path plus random chords keeps it connected
    pairs = {(i, i + 1) for i in range(n - 1)}
    while len(pairs) < m:
        a, b = sorted(rng.integers(0, n, 2).tolist())
        if a != b:
            pairs.add((a, b))
    return geo.DualGraph(verts, tuple((ids[a], ids[b]) for a, b in sorted(pairs)))


def _points(rng, n):
    b = rng.random(n) * 0.9
    return dgm(list(zip(b.tolist(), (b + 0.01 + rng.random(n) * (1 - b - 0.01)).tolist())))


def test_c11_performance(record_property, warm_kernels):
    record_property("criterion", "10k/30k graph diagram < 1 s; W1 of 200-point diagrams < 5 s; "
                                 "50x50 p=1 matrix of 100-point diagrams < 60 s")
    rng = np.random.default_rng(20240111)
    g = _random_graph(10_000, 30_000, rng)
    start = time.perf_counter()
    d = sublevel_diagram(g, "big")
    t_diagram = time.perf_counter() - start
    assert d.essential_count == 1

    P, Q = _points(rng, 200), _points(rng, 200)
    start = time.perf_counter()
    wasserstein(P, Q, 1)
    t_w1 = time.perf_counter() - start

    corpus = [dgm(_points(rng, 100).pairs(), f"r{i:02d}") for i in range(50)]
    start = time.perf_counter()
    distance_matrix(corpus, p=1)
    t_matrix = time.perf_counter() - start

    record_property("timings", f"diagram={t_diagram:.3f}s w1={t_w1:.3f}s matrix={t_matrix:.2f}s")
    print(f"diagram={t_diagram:.3f}s w1={t_w1:.3f}s matrix={t_matrix:.2f}s")
    assert t_diagram < 1.0
    assert t_w1 < 5.0
    assert t_matrix < 60.0
