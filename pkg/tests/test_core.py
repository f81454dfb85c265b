import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from geodesolve import (
    Assignment,
    DgpInstance,
    Graph,
    InvalidAssignmentError,
    InvalidInstanceError,
    Realization,
    SolveReport,
    Status,
    UdgpInstance,
    derive_udgp,
    reconstruct_graph,
)
from geodesolve.core import order_assignment

from conftest import KITE_DISTANCES, KITE_GRAPH


@pytest.mark.parametrize(
    "edges",
    [[(1, 1, 1.0)], [(1, 2, 1.0), (2, 1, 2.0)], [(1, 3, 1.0)], [(1, 2, 0.0)], [(1, 2, -1.0)], [(1, 2, float("nan"))]],
)
def test_graph_rejects_invalid_edges(edges):
    with pytest.raises(InvalidInstanceError):
        Graph(2, edges)


def test_graph_arrays_and_density():
    g = Graph(3, [(2, 1, 3.0), (2, 3, 4.0)])
    assert g.edges == ((1, 2, 3.0), (2, 3, 4.0))
    assert list(g.tail) == [0, 1] and list(g.head) == [1, 2]
    assert g.density() == pytest.approx(2 / 3)
    assert g.n_components() == 1
    with pytest.raises(ValueError):
        g.weights[0] = 1.0


def test_instances_validate():
    with pytest.raises(InvalidInstanceError):
        DgpInstance(0, Graph(2))
    with pytest.raises(InvalidInstanceError):
        UdgpInstance(2, 3, [1.0, 0.0])
    with pytest.raises(InvalidInstanceError):
        UdgpInstance(2, 0, [1.0])
    with pytest.raises(ValueError):
        Realization([[0.0, np.inf]])


def test_assignment_injective():
    with pytest.raises(InvalidAssignmentError):
        Assignment([(1, 2), (2, 1)])
    with pytest.raises(InvalidAssignmentError):
        Assignment([(1, 1)])
    assert Assignment([(2, 1)]).pairs == ((1, 2),)


def test_reconstruct_kite_graph():
    inst = UdgpInstance(2, 4, KITE_DISTANCES)
    a = Assignment([(1, 4), (2, 4), (1, 2), (2, 3), (1, 3)])
    g = reconstruct_graph(inst, a)
    assert g.edge_key_set() == KITE_GRAPH.edge_key_set()


def test_reconstruct_complete_triangle_and_single_edge():
    g = reconstruct_graph(UdgpInstance(2, 3, [3, 4, 5]), Assignment([(1, 2), (1, 3), (2, 3)]))
    assert g.n_edges == 3 and g.density() == 1.0
    g1 = reconstruct_graph(UdgpInstance(2, 2, [7.0]), Assignment([(1, 2)]))
    assert g1.edges == ((1, 2, 7.0),)


def test_reconstruct_rejects_bad_assignments():
    inst = UdgpInstance(2, 3, [1, 2])
    with pytest.raises(InvalidAssignmentError):
        reconstruct_graph(inst, [(1, 2), (1, 2)])
    with pytest.raises(InvalidAssignmentError):
        reconstruct_graph(inst, [(1, 2)])
    with pytest.raises(InvalidAssignmentError):
        reconstruct_graph(inst, [(1, 2), (1, 4)])


def test_derive_udgp_examples():
    u = derive_udgp(DgpInstance(2, KITE_GRAPH))
    assert sorted(u.distances) == sorted(KITE_DISTANCES)
    assert (u.k, u.n_points) == (2, 4)
    assert derive_udgp(DgpInstance(3, Graph(4))).m == 0
    assert tuple(derive_udgp(DgpInstance(3, Graph(2, [(1, 2, 7.0)]))).distances) == (7.0,)


@st.composite
def graphs(draw):
    n = draw(st.integers(2, 7))
    pairs = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs)))
    w = draw(st.lists(st.floats(0.1, 100.0), min_size=len(chosen), max_size=len(chosen)))
    return Graph(n, [(u, v, d) for (u, v), d in zip(chosen, w)])


@given(graphs())
def test_round_trip_through_udgp(g):
    u = derive_udgp(DgpInstance(2, g))
    back = reconstruct_graph(u, order_assignment(g))
    assert back.edge_key_set() == g.edge_key_set()


@given(graphs(), st.randoms(use_true_random=False))
def test_reconstruct_satisfies_graph_invariants(g, rnd):
    u = derive_udgp(DgpInstance(2, g))
    pairs = u.pairs()
    rnd.shuffle(pairs)
    if u.m <= len(pairs):
        h = reconstruct_graph(u, Assignment(pairs[: u.m]))
        assert h.n_edges == u.m and all(d > 0 for _, _, d in h.edges)


def test_infeasible_report_drops_realization():
    rep = SolveReport(Realization([[0.0]]), Status.INFEASIBLE)
    assert rep.realization is None and not rep.found
