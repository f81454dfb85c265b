import itertools

import numpy as np
import pytest

from geodesolve import Assignment, DgpInstance, Graph, Status, UdgpInstance, derive_udgp, reconstruct_graph
from geodesolve.instances import gen_euclidean
from geodesolve.metrics import gphsim, is_isomorphic, mde
from geodesolve.nlp import SolverConfig
from geodesolve.pipelines import (
    PipelineConfig,
    TooManyAssignmentsError,
    canonical_form,
    count_assignments,
    dgp_pipeline,
    reduce_to_dimension,
    udgp_bruteforce_oracle,
    udgp_pipeline,
)

from conftest import KITE_DISTANCES, KITE_GRAPH

CFG = PipelineConfig(solver=SolverConfig(restarts=5))


@pytest.mark.parametrize("relax", ["dualdd", "dd", "sdp"])
def test_refinement_never_worse(relax):
    for seed in range(3):
        inst, _ = gen_euclidean(10, 0.4, seed=seed)
        rep = dgp_pipeline(inst, relax, "quartic", CFG)
        assert rep.extras["post_mde"] <= rep.extras["pre_mde"]
        assert rep.mde == rep.extras["post_mde"]


def test_complete_graph_sdp_recovery():
    rng = np.random.default_rng(0)
    pts = rng.uniform(-5, 5, (6, 2))
    edges = [(i + 1, j + 1, float(np.linalg.norm(pts[i] - pts[j]))) for i, j in itertools.combinations(range(6), 2)]
    rep = dgp_pipeline(DgpInstance(2, Graph(6, edges)), "sdp", "quartic", CFG)
    assert rep.mde <= 1e-3


def test_reduce_to_dimension_pads():
    X = np.diag([1.0, 0.0])
    coords, _ = reduce_to_dimension(X, 3)
    assert coords.shape == (2, 3)


def test_infeasible_relaxation_reported():
    inst = DgpInstance(2, Graph(3, [(1, 2, 3.0), (1, 3, 1.0), (2, 3, 1.0)]))
    rep = dgp_pipeline(inst, "sdp", "quartic", CFG)
    assert rep.status is Status.INFEASIBLE and rep.realization is None


def test_udgp_kite_feasible_assignment():
    rep = udgp_pipeline(UdgpInstance(2, 4, KITE_DISTANCES), "dualdd", "quartic", CFG, reference=KITE_GRAPH)
    assert rep.assignment is not None
    assert rep.mde <= 1e-3
    assert -1 <= rep.extras["gphsim"] <= 1


def test_udgp_complete_graph_gphsim_one():
    inst = DgpInstance(2, Graph(3, [(1, 2, 3.0), (1, 3, 5.0), (2, 3, 4.0)]))
    rep = udgp_pipeline(derive_udgp(inst), "dualdd", "quartic", CFG, reference=inst.graph)
    assert rep.extras["gphsim"] == 1.0
    assert rep.mde <= 1e-6


def test_count_and_cap():
    u = UdgpInstance(2, 4, KITE_DISTANCES)
    assert count_assignments(u) == 720
    with pytest.raises(TooManyAssignmentsError):
        udgp_bruteforce_oracle(u, PipelineConfig(oracle_cap=100))
    assert count_assignments(UdgpInstance(2, 3, [1, 1, 1, 1])) == 0


def test_canonical_form_invariant():
    rng = np.random.default_rng(1)
    for _ in range(5):
        perm = tuple(int(i) + 1 for i in rng.permutation(4))
        assert canonical_form(KITE_GRAPH.relabel(perm)) == canonical_form(KITE_GRAPH)
    other = Graph(4, [(1, 2, 3.0), (2, 3, 4.0), (1, 3, 5.0), (1, 4, 2.0), (3, 4, 2.0)])
    assert canonical_form(other) != canonical_form(KITE_GRAPH)


def test_oracle_345_every_assignment_exact():
    res = udgp_bruteforce_oracle(UdgpInstance(2, 3, [3.0, 4.0, 5.0]), CFG)
    assert len(res.table) == 6
    assert all(v <= 1e-6 for _, v in res.table)
    assert res.distinct_graphs == 1


def test_oracle_311_floor():
    res = udgp_bruteforce_oracle(UdgpInstance(2, 3, [3.0, 1.0, 1.0]), CFG)
    assert min(v for _, v in res.table) > 0.5


def test_oracle_reports_mde_on_its_own_graph():
    res = udgp_bruteforce_oracle(UdgpInstance(2, 3, [3.0, 1.0, 1.0]), CFG)
    g = reconstruct_graph(UdgpInstance(2, 3, [3.0, 1.0, 1.0]), res.assignment)
    assert res.report.mde == pytest.approx(mde(res.report.realization, g))
    assert res.report.mde == pytest.approx(min(v for _, v in res.table))


def test_oracle_yes_means_pipeline_not_infeasible():
    for dists in ([3.0, 4.0, 5.0], [1.0, 1.0, 2.0 ** 0.5]):
        u = UdgpInstance(2, 3, dists)
        res = udgp_bruteforce_oracle(u, CFG)
        if min(v for _, v in res.table) <= 1e-6:
            assert udgp_pipeline(u, "dualdd", "quartic", CFG).status is not Status.INFEASIBLE
