"""Matrix formulations over a symmetric ``X``: DD / dual-DD linear programs,
the assignment MILP, and SDPs."""
from __future__ import annotations

import numpy as np

from ..core import DgpInstance, UdgpInstance
from .programs import (
    MAX,
    MIN,
    LinearProgram,
    LpBuilder,
    SdpProblem,
    SdpRow,
    UnknownFormulationError,
)
from .smooth import _check_size, big_m

DD, DUAL_DD = "DD", "DualDD"
CONES = (DD, DUAL_DD)
MATRIX_LP_KINDS = ("system1", "pushpull", "pullpush")
SDP_KINDS = ("trace_max", "protein_obj", "system1")
PROTEIN_TRACE_WEIGHT = 0.1


def normalize_cone(cone: str) -> str:
    key = str(cone).lower().replace("_", "").replace("-", "")
    table = {"dd": DD, "ddp": DD, "dualdd": DUAL_DD, "dualddp": DUAL_DD}
    if key not in table:
        raise UnknownFormulationError(f"unknown cone {cone!r}")
    return table[key]


def add_symmetric(b: LpBuilder, n: int, name: str = "X", lb=-np.inf) -> np.ndarray:
    """Upper-triangular variables exposed as a full symmetric index matrix."""
    tri = b.add_vars(name, (n * (n + 1) // 2,), lb=lb)
    idx = np.empty((n, n), dtype=int)
    iu = np.triu_indices(n)
    idx[iu] = tri
    idx[(iu[1], iu[0])] = tri
    return idx


def add_cone_rows(b: LpBuilder, X: np.ndarray, cone: str) -> np.ndarray | None:
    """Append the linear description of the cone on ``X``; returns ``T`` for DD."""
    cone = normalize_cone(cone)
    n = X.shape[0]
    if cone == DD:
        n_off = n * (n - 1) // 2
        tri = b.add_vars("T", (n_off,), lb=0.0)
        T = np.full((n, n), -1, dtype=int)
        iu = np.triu_indices(n, 1)
        T[iu] = tri
        T[(iu[1], iu[0])] = tri
        for i in range(n):
            row = {int(T[i, j]): 1.0 for j in range(n) if j != i}
            row[int(X[i, i])] = row.get(int(X[i, i]), 0.0) - 1.0
            b.add_row(row, "<=", 0.0)
        for i, j in zip(*iu):
            b.add_row({X[i, j]: 1.0, T[i, j]: -1.0}, "<=", 0.0)
            b.add_row({X[i, j]: -1.0, T[i, j]: -1.0}, "<=", 0.0)
        return T
    for i in range(n):
        b.add_row({X[i, i]: 1.0}, ">=", 0.0)
    for i in range(n):
        for j in range(i + 1, n):
            b.add_row({X[i, i]: 1.0, X[j, j]: 1.0, X[i, j]: 2.0}, ">=", 0.0)
            b.add_row({X[i, i]: 1.0, X[j, j]: 1.0, X[i, j]: -2.0}, ">=", 0.0)
    return None


def edge_term(X: np.ndarray, i: int, j: int) -> dict[int, float]:
    """Coefficients of ``X_ii + X_jj - 2 X_ij`` (0-based vertices)."""
    return {X[i, i]: 1.0, X[j, j]: 1.0, X[i, j]: -2.0}


def build_cone_rows(cone: str, n: int) -> LinearProgram:
    """Feasibility LP holding only the cone description (zero objective)."""
    b = LpBuilder()
    X = add_symmetric(b, n)
    add_cone_rows(b, X, cone)
    return b.build(MIN, meta={"cone": normalize_cone(cone), "n": n, "X": X})


def build_matrix_lp(kind: str, cone: str, inst: DgpInstance) -> LinearProgram:
    if kind not in MATRIX_LP_KINDS:
        raise UnknownFormulationError(f"unknown matrix formulation {kind!r}")
    cone = normalize_cone(cone)
    g = inst.graph
    n = g.n_vertices
    b = LpBuilder()
    X = add_symmetric(b, n)
    add_cone_rows(b, X, cone)
    sense = MIN
    if kind == "system1":
        sp = b.add_vars("s_plus", (g.n_edges,), lb=0.0)
        sm = b.add_vars("s_minus", (g.n_edges,), lb=0.0)
        # the inner DD cone often cannot meet the equalities exactly
        rel = ">=" if cone == DD else "="
        for e, (u, v, d) in enumerate(g.edges):
            row = edge_term(X, u - 1, v - 1)
            row[sp[e]] = -1.0
            row[sm[e]] = 1.0
            b.add_row(row, rel, d * d)
            b.set_cost(sp[e], 1.0)
            b.set_cost(sm[e], 1.0)
    else:
        sense = MAX if kind == "pushpull" else MIN
        rel = "<=" if kind == "pushpull" else ">="
        for u, v, d in g.edges:
            row = edge_term(X, u - 1, v - 1)
            b.add_row(row, rel, d * d)
            for j, c in row.items():
                b.set_cost(j, c)
    return b.build(sense, meta={"kind": kind, "cone": cone, "n": n, "X": X})


def build_udgp_milp(cone: str, inst: UdgpInstance, literal: bool = False) -> LinearProgram:
    """Assignment MILP with big-M deactivated ℓ1 residual rows on ``X``."""
    _check_size(inst, literal)
    cone = normalize_cone(cone)
    n, m = inst.n_points, inst.m
    pairs = inst.pairs()
    M = big_m(inst)
    b = LpBuilder()
    X = add_symmetric(b, n)
    add_cone_rows(b, X, cone)
    y = b.add_vars("y", (len(pairs), m), lb=0.0, ub=1.0, integral=True)
    sp = b.add_vars("s_plus", (m,), lb=0.0)
    sm = b.add_vars("s_minus", (m,), lb=0.0)
    for l in range(m):
        b.set_cost(sp[l], 1.0)
        b.set_cost(sm[l], 1.0)
    for p, (i, j) in enumerate(pairs):
        term = edge_term(X, i - 1, j - 1)
        for l, delta in enumerate(inst.distances):
            d2 = delta * delta
            up = dict(term)
            up[sp[l]] = -1.0
            up[y[p, l]] = M
            b.add_row(up, "<=", d2 + M)
            down = dict(term)
            down[sm[l]] = 1.0
            down[y[p, l]] = -M
            b.add_row(down, ">=", d2 - M)
    each_l = ("<=" if literal else "=")
    each_p = ("=" if literal else "<=")
    for l in range(m):
        b.add_row({y[p, l]: 1.0 for p in range(len(pairs))}, each_l, 1.0)
    for p in range(len(pairs)):
        b.add_row({y[p, l]: 1.0 for l in range(m)}, each_p, 1.0)
    return b.build(MIN, meta={"cone": cone, "n": n, "X": X, "pairs": pairs, "big_m": M, "udgp": inst})


def _centering_row(n: int) -> SdpRow:
    """``sum_ij X_ij = 0``: the Gram matrix of a centered point set."""
    coefs = {(i, j): (1.0 if i == j else 2.0) for i in range(n) for j in range(i, n)}
    return SdpRow(coefs, {}, "=", 0.0)


def _edge_coefs(u: int, v: int) -> dict[tuple[int, int], float]:
    return {(u, u): 1.0, (v, v): 1.0, (min(u, v), max(u, v)): -2.0}


def build_sdp(kind: str, inst: DgpInstance, trace_weight: float = PROTEIN_TRACE_WEIGHT, centered: bool = True) -> SdpProblem:
    if kind not in SDP_KINDS:
        raise UnknownFormulationError(f"unknown SDP formulation {kind!r}")
    g = inst.graph
    n, m = g.n_vertices, g.n_edges
    rows: list[SdpRow] = []
    obj_x: dict[tuple[int, int], float] = {}
    obj_aux: dict[int, float] = {}
    n_aux = 0
    sense = MIN
    for e, (u, v, d) in enumerate(g.edges):
        coefs = _edge_coefs(u - 1, v - 1)
        if kind == "system1":
            rows.append(SdpRow(coefs, {2 * e: -1.0, 2 * e + 1: 1.0}, "=", d * d))
        else:
            rows.append(SdpRow(coefs, {}, "=", d * d))
        if kind == "protein_obj":
            for key, c in coefs.items():
                obj_x[key] = obj_x.get(key, 0.0) + c
    if kind == "trace_max":
        sense = MAX
        for i in range(n):
            obj_x[(i, i)] = 1.0
    elif kind == "protein_obj":
        for i in range(n):
            obj_x[(i, i)] = obj_x.get((i, i), 0.0) + trace_weight
    else:
        n_aux = 2 * m
        obj_aux = {a: 1.0 for a in range(n_aux)}
    if centered:
        rows.append(_centering_row(n))
    total = float(sum(d for _, _, d in g.edges))
    # a centered connected realization has trace <= n (sum d)^2 / 2
    cap = n * max(total, 1.0) ** 2
    return SdpProblem(
        n=n,
        rows=tuple(rows),
        objective_x=obj_x,
        objective_aux=obj_aux,
        n_aux=n_aux,
        sense=sense,
        psd=True,
        trace_cap=cap,
        meta={"kind": kind, "graph": g},
    )
