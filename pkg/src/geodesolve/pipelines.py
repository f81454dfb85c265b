"""End-to-end processes: relax, factor, reduce and refine for the DGP;
assign, reconstruct and realize for the UDGP; and an exhaustive UDGP oracle."""
from __future__ import annotations

import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .core import (
    Assignment,
    DgpInstance,
    GeodesolveError,
    Graph,
    Realization,
    SolveReport,
    Status,
    UdgpInstance,
    reconstruct_graph,
)
from .formulations import (
    DD,
    DUAL_DD,
    build_dgp,
    build_matrix_lp,
    build_sdp,
    build_udgp_milp,
    normalize_cone,
)
from .linalg import gram_factor, pca_reduce
from .linear import MilpConfig, solve_lp, solve_milp
from .metrics import gphsim, lde, mde
from .nlp import SolverConfig, multistart, solve_local
from .psd import SdpConfig, SdpTooLargeError, solve_sdp

SDP = "SDP"
RELAXATIONS = (SDP, DD, DUAL_DD)
CANONICAL_MAX_N = 7


class TooManyAssignmentsError(GeodesolveError, ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    solver: SolverConfig = field(default_factory=SolverConfig)
    sdp: SdpConfig = field(default_factory=SdpConfig)
    milp: MilpConfig = field(default_factory=MilpConfig)
    sdp_kind: str = "trace_max"
    matrix_kind: str = "pushpull"
    # number of MILP incumbents (best first) tried for the UDGP realization
    max_incumbents: int = 5
    oracle_cap: int = 5000
    jobs: int = 1


def normalize_relax(relax: str) -> str:
    if str(relax).lower() == "sdp":
        return SDP
    return normalize_cone(relax)


def _matrix_from_lp(values, X_idx) -> np.ndarray:
    X = values[X_idx]
    return 0.5 * (X + X.T)


def relax_matrix(inst: DgpInstance, relax: str, cfg: PipelineConfig):
    """Solve the matrix relaxation; returns ``(X, status, objective, relax_used)``."""
    relax = normalize_relax(relax)
    if relax == SDP:
        try:
            res = solve_sdp(build_sdp(cfg.sdp_kind, inst), cfg.sdp)
            return res.X, res.status, res.objective, SDP
        except SdpTooLargeError:
            relax = DD
    p = build_matrix_lp(cfg.matrix_kind, relax, inst)
    sol = solve_lp(p, time_limit_s=cfg.solver.time_limit_s)
    if not sol.optimal:
        return None, sol.status, float("nan"), relax
    return _matrix_from_lp(sol.values, p.meta["X"]), Status.OPTIMAL, sol.objective, relax


def reduce_to_dimension(X: np.ndarray, k: int) -> tuple[np.ndarray, float]:
    pts, clipped = gram_factor(X)
    if k <= pts.shape[1]:
        coords = pca_reduce(pts, k).coords
    else:
        c = pts - pts.mean(axis=0)
        coords = np.hstack([c, np.zeros((c.shape[0], k - c.shape[1]))])
    return np.array(coords), clipped


def dgp_pipeline(inst: DgpInstance, relax: str = DUAL_DD, refine_kind: str = "quartic", cfg: PipelineConfig | None = None) -> SolveReport:
    cfg = cfg or PipelineConfig()
    t0 = time.process_time()
    g = inst.graph
    X, mstatus, mobj, used = relax_matrix(inst, relax, cfg)
    extras = {"relax": used, "matrix_status": str(mstatus), "matrix_objective": mobj}
    if X is None:
        status = Status.INFEASIBLE if mstatus in (Status.INFEASIBLE, Status.UNBOUNDED) else mstatus
        return SolveReport(None, status, cpu_seconds=time.process_time() - t0, extras=extras)
    x_pre, clipped = reduce_to_dimension(X, inst.k)
    pre_mde, pre_lde = mde(x_pre, g), lde(x_pre, g)
    extras.update(clipped_mass=clipped, pre_mde=pre_mde, pre_lde=pre_lde)
    prog = build_dgp(refine_kind, inst)
    rep = solve_local(prog, prog.assemble(x_pre), cfg.solver)
    extras.update({k: v for k, v in rep.extras.items() if k != "vars"})
    real, status = rep.realization, rep.status
    post_mde = rep.mde if real is not None else np.inf
    if not post_mde <= pre_mde:
        # refinement drifted away in mde terms: keep the reduced point
        real, status = Realization(x_pre), Status.FEASIBLE_POINT
        extras["refinement_kept"] = False
    else:
        extras["refinement_kept"] = True
    extras["post_mde"] = mde(real, g)
    extras["post_lde"] = lde(real, g)
    return SolveReport(
        real, status, rep.objective, extras["post_mde"], extras["post_lde"], time.process_time() - t0, None, extras
    )


def assignment_from_milp(p, values) -> Assignment:
    y = p.block(values, "y")
    pairs = p.meta["pairs"]
    return Assignment([pairs[int(np.argmax(y[:, l]))] for l in range(y.shape[1])])


def udgp_pipeline(
    inst: UdgpInstance,
    cone: str = DUAL_DD,
    refine_kind: str = "quartic",
    cfg: PipelineConfig | None = None,
    reference: Graph | None = None,
) -> SolveReport:
    cfg = cfg or PipelineConfig()
    t0 = time.process_time()
    p = build_udgp_milp(cone, inst)
    sol = solve_milp(p, cfg.milp)
    extras = {"milp_status": str(sol.status), "milp_objective": sol.objective, "milp_bound": sol.best_bound, "milp_nodes": sol.nodes}
    if sol.values is None:
        status = Status.INFEASIBLE if sol.status is Status.INFEASIBLE else sol.status
        return SolveReport(None, status, cpu_seconds=time.process_time() - t0, extras=extras)
    pool = sol.pool or [(sol.objective, sol.values)]
    # newest incumbent is the best one
    tried = []
    best = None
    best_key = None
    for _, vals in list(reversed(pool))[: cfg.max_incumbents]:
        a = assignment_from_milp(p, vals)
        if a.pairs in tried:
            continue
        tried.append(a.pairs)
        ga = reconstruct_graph(inst, a)
        rep = multistart(build_dgp(refine_kind, DgpInstance(inst.k, ga)), cfg.solver)
        if not rep.found:
            continue
        key = rep.mde
        if best_key is None or key < best_key:
            best, best_key = (a, ga, rep), key
    extras["incumbents_tried"] = len(tried)
    if best is None:
        return SolveReport(None, Status.TIME_LIMIT, cpu_seconds=time.process_time() - t0, extras=extras)
    a, ga, rep = best
    if reference is not None:
        extras["gphsim"] = gphsim(reference, ga)
    extras["graph"] = ga
    extras["restarts_done"] = rep.extras.get("restarts_done")
    return SolveReport(rep.realization, rep.status, rep.objective, rep.mde, rep.lde, time.process_time() - t0, a, extras)


def count_assignments(inst: UdgpInstance) -> int:
    P = inst.n_pairs
    return math.perm(P, inst.m) if inst.m <= P else 0


def canonical_form(g: Graph) -> tuple:
    """Label-independent key of a weighted graph (exact for small orders)."""
    n = g.n_vertices
    if n > CANONICAL_MAX_N:
        return (n, tuple(sorted(g.edges)))
    best = None
    for perm in itertools.permutations(range(1, n + 1)):
        key = tuple(sorted((min(perm[u - 1], perm[v - 1]), max(perm[u - 1], perm[v - 1]), d) for u, v, d in g.edges))
        if best is None or key < best:
            best = key
    return (n, best)


@dataclass
class OracleResult:
    assignment: Assignment | None
    report: SolveReport | None
    # (assignment, mde) for every enumerated assignment, in enumeration order
    table: list = field(default_factory=list)
    distinct_graphs: int = 0

    def __iter__(self):
        return iter((self.assignment, self.report))


def _realize(args):
    k, g, kind, cfg = args
    return multistart(build_dgp(kind, DgpInstance(k, g)), cfg)


def udgp_bruteforce_oracle(inst: UdgpInstance, cfg: PipelineConfig | None = None, kind: str = "quartic") -> OracleResult:
    """Try every injective assignment; isomorphic weighted graphs are
    realized once. Ties in mde keep the lowest enumeration index."""
    cfg = cfg or PipelineConfig()
    total = count_assignments(inst)
    if total > cfg.oracle_cap:
        raise TooManyAssignmentsError(f"{total} assignments exceed the cap of {cfg.oracle_cap}")
    if total == 0:
        return OracleResult(None, None)
    pairs = inst.pairs()
    assignments = [Assignment(c) for c in itertools.permutations(pairs, inst.m)]
    keys = []
    reps: dict[tuple, Graph] = {}
    for a in assignments:
        g = reconstruct_graph(inst, a)
        key = canonical_form(g)
        keys.append(key)
        reps.setdefault(key, g)
    order = list(reps)
    jobs = [(inst.k, reps[k], kind, cfg.solver) for k in order]
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as ex:
            results = list(ex.map(_realize, jobs))
    else:
        results = [_realize(j) for j in jobs]
    by_key = dict(zip(order, results))
    table = []
    best_i, best_mde = None, np.inf
    for i, (a, key) in enumerate(zip(assignments, keys)):
        rep = by_key[key]
        if not rep.found:
            table.append((a, float("nan")))
            continue
        # isomorphic weighted graphs share realizations up to relabeling
        value = rep.mde
        table.append((a, value))
        if value < best_mde:
            best_i, best_mde = i, value
    if best_i is None:
        return OracleResult(None, None, table, len(order))
    a = assignments[best_i]
    g = reconstruct_graph(inst, a)
    rep = by_key[keys[best_i]]
    coords = _relabeled_coords(rep.realization.coords, reps[keys[best_i]], g)
    real = Realization(coords)
    out = SolveReport(real, rep.status, rep.objective, mde(real, g), lde(real, g), rep.cpu_seconds, a, {"graph": g})
    return OracleResult(a, out, table, len(order))


def _find_isomorphism(src: Graph, dst: Graph):
    """Weighted isomorphism ``perm`` with ``src.relabel(perm) == dst`` (small orders)."""
    target = dst.edge_key_set()
    for perm in itertools.permutations(range(1, src.n_vertices + 1)):
        if src.relabel(perm).edge_key_set() == target:
            return perm
    return None


def _relabeled_coords(coords, src: Graph, dst: Graph):
    perm = _find_isomorphism(src, dst) if src.edge_key_set() != dst.edge_key_set() else None
    if perm is None:
        return np.array(coords)
    out = np.empty_like(coords)
    for i, p in enumerate(perm):
        out[p - 1] = coords[i]
    return out

