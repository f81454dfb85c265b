import itertools
import json

import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from geodesolve import DgpInstance, Graph, SolveReport, Status, UdgpInstance, Realization, Assignment
from geodesolve.core import InvalidInstanceError
from geodesolve.instances import (
    GRAPH_TYPES,
    MalformedFileError,
    UnknownGraphTypeError,
    gen_disk_graph,
    gen_euclidean,
    gen_graph_type,
    load_instance,
    load_solution,
    read_coordinates,
    save_instance,
    save_solution,
)
from geodesolve.metrics import mde


def to_nx(g):
    h = nx.Graph()
    h.add_nodes_from(range(1, g.n_vertices + 1))
    h.add_edges_from((u, v) for u, v, _ in g.edges)
    return h


def test_euclid_n3_is_triangle():
    for p in (0.1, 1.0):
        inst, _ = gen_euclidean(3, p, seed=0)
        assert inst.graph.n_edges == 3


@given(st.integers(3, 15), st.floats(0.05, 1.0), st.integers(0, 10**6))
def test_euclid_properties(n, p, seed):
    inst, planted = gen_euclidean(n, p, seed=seed)
    g = inst.graph
    assert inst.k == 2 and n <= g.n_edges <= n * (n - 1) // 2
    assert nx.is_biconnected(to_nx(g))
    assert mde(planted, g) <= 1e-9
    assert np.all((planted.coords >= 0) & (planted.coords <= 10))


def test_euclid_deterministic_and_validated():
    a, _ = gen_euclidean(9, 0.5, seed=3)
    b, _ = gen_euclidean(9, 0.5, seed=3)
    assert a.graph.edges == b.graph.edges
    with pytest.raises(InvalidInstanceError):
        gen_euclidean(2, 0.5)
    with pytest.raises(InvalidInstanceError):
        gen_euclidean(5, 0.0)


@pytest.mark.parametrize("kind", sorted(GRAPH_TYPES))
def test_every_type_builds_and_is_deterministic(kind):
    a = gen_graph_type(kind, seed=4)
    b = gen_graph_type(kind, seed=4)
    assert a.graph.edges == b.graph.edges
    assert a.graph.n_edges > 0
    assert all(d > 0 for _, _, d in a.graph.edges)


def test_unit_and_random_weights():
    g = gen_graph_type("random", {"n": 8, "p": 0.5}).graph
    assert set(g.weights) == {1.0}
    w = gen_graph_type("random", {"n": 8, "p": 0.5}, weighted=True).graph.weights
    assert np.all((w >= 1) & (w <= 10)) and len(set(w)) > 1


def test_unknown_type():
    with pytest.raises(UnknownGraphTypeError):
        gen_graph_type("hexagonal")


def test_mesh_side_n():
    g = gen_graph_type("mesh", {"n": 4}).graph
    assert g.n_vertices == 16
    assert nx.is_isomorphic(to_nx(g), nx.grid_2d_graph(4, 4))


def test_torus():
    g = gen_graph_type("torus", {"n": 4}).graph
    assert nx.is_isomorphic(to_nx(g), nx.grid_2d_graph(4, 4, periodic=True))


def test_dmdgp_predecessors():
    n, k = 9, 3
    g = gen_graph_type("dmdgp", {"n": n, "k": k}).graph
    keys = {(u, v) for u, v, _ in g.edges}
    for v in range(k + 1, n + 1):
        assert all((v - j, v) in keys for j in range(1, k + 1))


def test_trichain_is_chain_of_triangles():
    g = to_nx(gen_graph_type("trichain", {"n": 7}).graph)
    assert sum(nx.triangles(g).values()) // 3 == 3
    assert nx.is_connected(g)


def test_cliquechain_and_bipartite():
    g = to_nx(gen_graph_type("cliquechain", {"n": 10, "k": 4}).graph)
    assert max(len(c) for c in nx.find_cliques(g)) == 4
    b = to_nx(gen_graph_type("bipartite", {"n": 5, "p": 0.7}, seed=2).graph)
    assert nx.is_bipartite(b)


def test_local_and_norm_weights_from_points():
    inst = gen_graph_type("norm", {"n": 8, "p": 0.6, "norm": "linf"}, seed=1)
    assert len(set(inst.graph.weights)) > 1


def test_disk_examples(tmp_path):
    two = gen_disk_graph(np.array([[0, 0, 0], [3, 0, 0.0]]), 5.5)
    assert list(two.graph.edges) == [(1, 2, 3.0)] and two.k == 3
    far = gen_disk_graph(np.array([[0, 0, 0], [6, 0, 0.0]]), 5.5)
    assert far.graph.n_edges == 0 and far.graph.n_vertices == 2
    cloud = np.vstack([np.random.default_rng(0).uniform(0, 3, (6, 3)), [[100, 100, 100]]])
    f = tmp_path / "cloud.xyz"
    f.write_text("# atoms\n" + "\n".join("C " + " ".join(map(str, r)) for r in cloud) + "\n")
    inst = gen_disk_graph(f, 5.5)
    assert inst.graph.n_vertices == 7
    assert all(7 not in (u, v) for u, v, _ in inst.graph.edges)


@given(st.integers(2, 12), st.floats(0.5, 8.0), st.integers(0, 10**6))
def test_disk_matches_all_pairs(n, radius, seed):
    pts = np.random.default_rng(seed).uniform(0, 10, (n, 3))
    got = {(u, v) for u, v, _ in gen_disk_graph(pts, radius).graph.edges}
    want = {(i + 1, j + 1) for i, j in itertools.combinations(range(n), 2) if np.linalg.norm(pts[i] - pts[j]) <= radius}
    assert got == want


def test_malformed_coordinates(tmp_path):
    f = tmp_path / "bad.xyz"
    f.write_text("1 2 3\n1 2\n")
    with pytest.raises(MalformedFileError):
        read_coordinates(f)
    f.write_text("C 1 x 3\n")
    with pytest.raises(MalformedFileError):
        read_coordinates(f)
    with pytest.raises(InvalidInstanceError):
        gen_disk_graph(np.zeros((2, 3)), 0.0)


def test_instance_roundtrip(tmp_path):
    inst, _ = gen_euclidean(6, 0.5, seed=0)
    save_instance(inst, tmp_path / "a.json")
    back = load_instance(tmp_path / "a.json")
    assert back.graph.edges == inst.graph.edges and back.k == inst.k
    u = UdgpInstance(2, 4, [2.0, 2.0, 3.0])
    save_instance(u, tmp_path / "u.json")
    assert json.loads((tmp_path / "u.json").read_text()) == {"k": 2, "n": 4, "distances": [2.0, 2.0, 3.0]}
    assert load_instance(tmp_path / "u.json").distances == u.distances


def test_malformed_instance(tmp_path):
    f = tmp_path / "x.json"
    f.write_text("{not json")
    with pytest.raises(MalformedFileError):
        load_instance(f)
    f.write_text('{"k": 2, "n": 3}')
    with pytest.raises(MalformedFileError):
        load_instance(f)


def test_solution_roundtrip(tmp_path):
    rep = SolveReport(Realization(np.eye(2)), Status.OPTIMAL, 0.0, 0.0, float("nan"), 1.0, Assignment([(1, 2)]))
    save_solution(rep, tmp_path / "s.json")
    real, a, data = load_solution(tmp_path / "s.json")
    assert np.array_equal(real.coords, np.eye(2)) and a.pairs == ((1, 2),)
    assert data["lde"] is None and "cpu_seconds" not in data
