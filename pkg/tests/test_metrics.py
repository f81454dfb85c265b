import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from geodesolve import Graph, Realization
from geodesolve.instances import gen_euclidean
from geodesolve.metrics import (
    clique_sequence,
    degree_sequence,
    gphsim,
    gphsim_stages,
    is_isomorphic,
    lde,
    mde,
    spectral_similarity,
    triangle_sequence,
)


def to_nx(g):
    h = nx.Graph()
    h.add_nodes_from(range(1, g.n_vertices + 1))
    h.add_edges_from((u, v) for u, v, _ in g.edges)
    return h


def random_graph(n, p, seed):
    rng = np.random.default_rng(seed)
    return Graph(n, [(i, j, 1.0) for i in range(1, n + 1) for j in range(i + 1, n + 1) if rng.random() < p])


graphs = st.builds(random_graph, st.integers(1, 9), st.floats(0.0, 1.0), st.integers(0, 10**6))


def test_mde_single_edge():
    g = Graph(2, [(1, 2, 1.0)])
    x = np.array([[0.0, 0.0], [0.0, 2.0]])
    assert mde(x, g) == 3.0 and lde(x, g) == 3.0


def test_mde_two_edges():
    g = Graph(3, [(1, 2, 1.0), (2, 3, 1.0)])
    x = np.array([[0.0, 0.0], [2.0, 0.0], [2.0, 2.0 ** 0.5]])
    assert mde(x, g) == pytest.approx(4.0) and lde(x, g) == pytest.approx(3.0)
    assert mde(x, g, normalize=True) == pytest.approx(2.0)


def test_planted_zero():
    inst, planted = gen_euclidean(10, 0.4, seed=1)
    assert mde(planted, inst.graph) <= 1e-9 and lde(planted, inst.graph) <= 1e-9


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        mde(np.zeros((3, 2)), Graph(2, [(1, 2, 1.0)]))


@given(st.integers(2, 8), st.integers(0, 10**6))
def test_mde_lde_bounds(n, seed):
    g = random_graph(n, 0.6, seed)
    x = Realization(np.random.default_rng(seed).standard_normal((n, 2)))
    m, l = mde(x, g), lde(x, g)
    assert 0 <= l <= m + 1e-12 <= g.n_edges * l + 1e-9


@given(graphs)
def test_sequences_match_networkx(g):
    h = to_nx(g)
    assert degree_sequence(g) == sorted(d for _, d in h.degree())
    assert triangle_sequence(g) == sorted(nx.triangles(h).values())
    cliques = list(nx.find_cliques(h))
    expect = sorted(max(len(c) for c in cliques if v in c) for v in h.nodes)
    assert clique_sequence(g) == expect


@given(graphs, graphs)
def test_isomorphism_matches_networkx(g, h):
    assert is_isomorphic(g, h) == nx.is_isomorphic(to_nx(g), to_nx(h))


@given(graphs, st.integers(0, 10**6))
def test_relabeled_copy(g, seed):
    perm = tuple(int(i) + 1 for i in np.random.default_rng(seed).permutation(g.n_vertices))
    h = g.relabel(perm)
    assert is_isomorphic(g, h)
    assert gphsim(g, h) == 1.0


@given(graphs, graphs)
def test_gphsim_range_and_stage_symmetry(g, h):
    s = gphsim(g, h)
    assert -1 - 1e-12 <= s <= 1 + 1e-12
    assert gphsim_stages(g, h) == gphsim_stages(h, g)
    if g.n_vertices != h.n_vertices:
        assert s == pytest.approx(gphsim(h, g))


def test_k2_vs_k2_plus_isolated():
    g = Graph(2, [(1, 2, 1.0)])
    h = Graph(3, [(1, 2, 1.0)])
    assert gphsim(g, h) == pytest.approx(1.0)
    assert spectral_similarity(g, h) == pytest.approx(1.0)


def test_path_vs_star():
    p4 = Graph(4, [(1, 2, 1), (2, 3, 1), (3, 4, 1)])
    star = Graph(4, [(1, 2, 1), (1, 3, 1), (1, 4, 1)])
    assert gphsim_stages(p4, star) == 0
    # both adjacencies have Frobenius norm sqrt(6) and share the edge {1,2}
    assert gphsim(p4, star) == pytest.approx(0.5 * 2 / 6)


def test_spectral_branch_hand_values():
    # spectra in descending order, zero-padded: P3 -> (3,1,0), K2 -> (2,0,0)
    p3 = Graph(3, [(1, 2, 1), (2, 3, 1)])
    k2 = Graph(2, [(1, 2, 1)])
    assert np.allclose(sorted(nx.laplacian_spectrum(to_nx(p3)), reverse=True), [3, 1, 0])
    assert spectral_similarity(k2, p3) == pytest.approx(6 / (np.sqrt(10) * 2))


def test_self_similarity_generated():
    for seed in range(5):
        inst, _ = gen_euclidean(9, 0.4, seed=seed)
        assert gphsim(inst.graph, inst.graph) == 1.0
