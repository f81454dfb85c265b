import numpy as np
import pytest
from scipy import sparse

from geodesolve import DgpInstance, Graph, Status
from geodesolve.formulations import MIN, SmoothProgram, build_dgp, build_udgp_milp, DUAL_DD
from geodesolve.instances import gen_euclidean
from geodesolve.metrics import mde
from geodesolve.nlp import SolverConfig, UnsupportedProgramError, multistart, solve_local

from conftest import triangle


def shifted_square():
    return SmoothProgram(
        name="shifted_square",
        n_vars=1,
        objective=lambda v: (float((v[0] - 3.0) ** 2), np.array([2.0 * (v[0] - 3.0)])),
        sense=MIN,
        eq=(),
        ineq=(),
        lower=np.array([-np.inf]),
        upper=np.array([np.inf]),
        integral=np.array([False]),
        layout={"x": (slice(0, 1), (1, 1))},
        n_points=1,
        k=1,
        sampler=lambda rng: rng.uniform(-10, 10, 1),
    )


def test_shifted_square():
    rep = solve_local(shifted_square(), np.zeros(1))
    assert rep.status is Status.OPTIMAL
    assert rep.realization.coords[0, 0] == pytest.approx(3.0, abs=1e-8)


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(penalty_growth=1.0)
    with pytest.raises(ValueError):
        SolverConfig(tol_kkt=0)
    with pytest.raises(ValueError):
        SolverConfig(restarts=-1)


def test_start_dimension_checked():
    with pytest.raises(ValueError):
        solve_local(shifted_square(), np.zeros(2))


def test_system2_right_triangle():
    inst = triangle(3.0, 5.0, 4.0)
    p = build_dgp("system2", inst)
    x = np.array([[0.0, 0.0], [3.0, 0.0], [3.0, 4.0]]) + 0.05 * np.random.default_rng(0).standard_normal((3, 2))
    rep = solve_local(p, p.assemble(x - x.mean(axis=0)))
    assert rep.mde <= 1e-6


def test_pullpush_single_edge():
    p = build_dgp("pullpush", DgpInstance(2, Graph(2, [(1, 2, 1.0)])))
    rep = solve_local(p, p.assemble(np.array([[0.0, 0.0], [2.0, 1.0]])))
    assert rep.objective == pytest.approx(1.0, abs=1e-6)
    assert rep.extras["max_violation"] <= 1e-8


def test_feasible_start_never_worsened():
    inst, planted = gen_euclidean(6, 0.7, seed=3)
    p = build_dgp("pushpull", inst)
    v0 = p.assemble(planted.coords - planted.coords.mean(axis=0))
    rep = solve_local(p, v0, SolverConfig(max_outer=2, max_inner=5))
    assert rep.objective >= p.value(v0) - 1e-9 or rep.extras["max_violation"] > 1e-8
    assert rep.extras["max_violation"] <= 1e-8


def test_restarts_zero_gives_no_solution():
    rep = multistart(build_dgp("quartic", triangle(3, 4, 5)), SolverConfig(restarts=0))
    assert rep.realization is None and not rep.found


def test_planted_recovery_n8():
    inst, _ = gen_euclidean(8, 0.9, seed=1)
    rep = multistart(build_dgp("quartic", inst), SolverConfig(restarts=20, seed=7))
    assert rep.mde <= 1e-4


def test_quartic_311_bounded_away_from_zero():
    # collinear configurations minimize the quartic for (3,1,1): 25/9
    rep = multistart(build_dgp("quartic", triangle(3, 1, 1)), SolverConfig(restarts=10))
    assert rep.objective >= 25 / 9 - 1e-6
    assert rep.objective == pytest.approx(25 / 9, rel=1e-6)


@pytest.mark.parametrize("kind", ["system1", "system2", "pullpush", "cycle", "cycsys2"])
def test_violation_trace_monotone(kind):
    for seed in range(3):
        inst, _ = gen_euclidean(6, 0.6, seed=seed)
        p = build_dgp(kind, inst)
        rep = solve_local(p, p.sampler(np.random.default_rng(seed)))
        trace = rep.extras["violation_trace"]
        assert all(b <= a for a, b in zip(trace, trace[1:]))


def test_multistart_history_non_increasing():
    inst, _ = gen_euclidean(7, 0.5, seed=4)
    rep = multistart(build_dgp("quartic", inst), SolverConfig(restarts=8))
    h = rep.extras["history"]
    assert all(b <= a for a, b in zip(h, h[1:]))


def test_determinism():
    inst, _ = gen_euclidean(7, 0.5, seed=5)
    p = build_dgp("system2", inst)
    a = multistart(p, SolverConfig(restarts=4, seed=11))
    b = multistart(p, SolverConfig(restarts=4, seed=11))
    assert np.array_equal(a.realization.coords, b.realization.coords)
    assert a.objective == b.objective and a.status == b.status


def test_explicit_starts_tried_first():
    p = shifted_square()
    rep = multistart(p, SolverConfig(restarts=0), starts=[np.array([1.0])])
    assert rep.realization.coords[0, 0] == pytest.approx(3.0, abs=1e-8)


def test_integer_program_rejected():
    from geodesolve import UdgpInstance
    from geodesolve.formulations import build_udgp_minlp

    p = build_udgp_minlp("usystem2", UdgpInstance(2, 3, [3, 4, 5]))
    with pytest.raises(UnsupportedProgramError):
        solve_local(p, p.sampler(np.random.default_rng(0)))


def test_maximization_negated():
    p = shifted_square()
    q = SmoothProgram(**{**p.__dict__, "sense": "max",
                         "objective": lambda v: (-float((v[0] - 3.0) ** 2), np.array([-2.0 * (v[0] - 3.0)]))})
    rep = solve_local(q, np.zeros(1))
    assert rep.realization.coords[0, 0] == pytest.approx(3.0, abs=1e-8)


def test_time_limit_reported():
    inst, _ = gen_euclidean(30, 0.5, seed=0)
    rep = multistart(build_dgp("quartic", inst), SolverConfig(restarts=50, time_limit_s=0.05))
    assert rep.status in (Status.TIME_LIMIT,) or not rep.found
