"""Nonlinear formulations of the DGP and the UDGP as :class:`SmoothProgram`."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .. import kernels
from ..core import Assignment, DgpInstance, UdgpInstance
from .cycles import fundamental_cycle_basis
from .programs import (
    MAX,
    MIN,
    Block,
    SmoothProgram,
    StructurallyInfeasibleError,
    UnknownFormulationError,
)

# name -> (base, cycle constraints)
DGP_KINDS = {
    "quartic": ("quartic", False),
    "system1": ("system1", False),
    "system2": ("system2", False),
    "pushpull": ("pushpull", False),
    "pullpush": ("pullpush", False),
    "cycle": ("cycle", True),
    "cyclesimple": ("cycle", False),
    "cycsys1": ("cycsystem1", True),
    "cycsimplesys1": ("cycsystem1", False),
    "cycsys2": ("cycsystem2", True),
    "cycsimplesys2": ("cycsystem2", False),
    "cycpushpull": ("cycpushpull", True),
    "cycsimplepushpull": ("cycpushpull", False),
}
DGP_ALIASES = {"cycsystem1": "cycsimplesys1", "cycsystem2": "cycsimplesys2"}

UDGP_SMOOTH_KINDS = ("uquartic", "uquartic_cont")
UDGP_MINLP_KINDS = ("upushpull", "usystem1", "usystem2", "ucycsystem1")
UDGP_ALIASES = {"uquarticcont": "uquartic_cont", "ucycsimplesys1": "ucycsystem1"}


@dataclass(frozen=True)
class DgpOptions:
    centroid: bool = True
    # None keeps the kind's own default
    cycle_constraints: bool | None = None


class _Vars:
    def __init__(self):
        self.lo: list[np.ndarray] = []
        self.hi: list[np.ndarray] = []
        self.integral: list[np.ndarray] = []
        self.layout: dict[str, tuple[slice, tuple[int, ...]]] = {}
        self.n = 0

    def add(self, name, shape, lo=-np.inf, hi=np.inf, integral=False) -> int:
        size = int(np.prod(shape))
        self.lo.append(np.broadcast_to(np.asarray(lo, dtype=float), (size,)).copy())
        self.hi.append(np.broadcast_to(np.asarray(hi, dtype=float), (size,)).copy())
        self.integral.append(np.full(size, integral))
        self.layout[name] = (slice(self.n, self.n + size), tuple(shape))
        start = self.n
        self.n += size
        return start

    def arrays(self):
        cat = lambda parts, dt: np.concatenate(parts).astype(dt) if parts else np.zeros(0, dt)
        return cat(self.lo, float), cat(self.hi, float), cat(self.integral, bool)


def _rows_csr(cols: np.ndarray, data: np.ndarray, n_vars: int) -> sparse.csr_matrix:
    """CSR matrix with a fixed number of nonzeros per row."""
    rows, width = cols.shape
    return sparse.csr_matrix(
        (data.ravel(), cols.ravel(), np.arange(0, rows * width + 1, width)), shape=(rows, n_vars)
    )


def _incidence(n: int, tail: np.ndarray, head: np.ndarray) -> sparse.csr_matrix:
    m = tail.shape[0]
    return sparse.csr_matrix(
        (np.r_[np.ones(m), -np.ones(m)], (np.r_[tail, head], np.r_[np.arange(m), np.arange(m)])),
        shape=(n, m),
    )


def _linear_block(name: str, A: sparse.csr_matrix, b: np.ndarray) -> Block:
    A = sparse.csr_matrix(A)
    b = np.asarray(b, dtype=float)

    def fn(v):
        return A @ v - b, A

    return Block(name, A.shape[0], fn)


def _centroid_block(x_off: int, n: int, k: int, n_vars: int) -> Block:
    rows = np.repeat(np.arange(k), n)
    cols = x_off + (np.arange(n)[None, :] * k + np.arange(k)[:, None]).ravel()
    A = sparse.csr_matrix((np.ones(n * k), (rows, cols)), shape=(k, n_vars))
    return _linear_block("centroid", A, np.zeros(k))


def _edge_cols(x_off, tail, head, k):
    ar = np.arange(k)
    return np.hstack([x_off + tail[:, None] * k + ar, x_off + head[:, None] * k + ar])


def _link_block(x_off, z_off, tail, head, k, n_vars) -> Block:
    """``x_u - x_v - z_uv = 0`` for every edge and coordinate."""
    m = tail.shape[0]
    r = np.arange(m * k)
    e, kk = np.divmod(r, k)
    rows = np.r_[r, r, r]
    cols = np.r_[x_off + tail[e] * k + kk, x_off + head[e] * k + kk, z_off + r]
    data = np.r_[np.ones(m * k), -np.ones(m * k), -np.ones(m * k)]
    A = sparse.csr_matrix((data, (rows, cols)), shape=(m * k, n_vars))
    return _linear_block("link", A, np.zeros(m * k))


def _cycle_block(basis, z_off, m, k, n_vars) -> Block:
    rows, cols, data = [], [], []
    for c, cyc in enumerate(basis.cycles):
        for e, s in cyc:
            for kk in range(k):
                rows.append(c * k + kk)
                cols.append(z_off + e * k + kk)
                data.append(float(s))
    A = sparse.csr_matrix((data, (rows, cols)), shape=(len(basis) * k, n_vars))
    A.sum_duplicates()
    return _linear_block("cycles", A, np.zeros(len(basis) * k))


def build_dgp(kind: str, inst: DgpInstance, opts: DgpOptions | None = None) -> SmoothProgram:
    opts = opts or DgpOptions()
    name = DGP_ALIASES.get(kind, kind)
    if name not in DGP_KINDS:
        raise UnknownFormulationError(f"unknown DGP formulation {kind!r}")
    base, with_cycles = DGP_KINDS[name]
    if opts.cycle_constraints is not None and base.startswith("cyc"):
        with_cycles = opts.cycle_constraints
    g = inst.graph
    n, k, m = g.n_vertices, inst.k, g.n_edges
    tail, head = np.asarray(g.tail), np.asarray(g.head)
    d = np.asarray(g.weights)
    d2 = d**2
    inc = _incidence(n, tail, head)
    half_width = float(d.sum()) if m else 1.0

    V = _Vars()
    x_off = V.add("x", (n, k))
    uses_z = base.startswith("cyc")
    z_off = V.add("z", (m, k), lo=-np.repeat(d, k), hi=np.repeat(d, k)) if uses_z else None
    s_off = sp_off = sm_off = None
    if base in ("system2", "cycsystem2"):
        s_off = V.add("s", (m,))
    if base in ("system1", "cycsystem1"):
        sp_off = V.add("s_plus", (m,), lo=0.0)
        sm_off = V.add("s_minus", (m,), lo=0.0)
    nv = V.n
    xs = slice(x_off, x_off + n * k)
    zs = slice(z_off, z_off + m * k) if uses_z else None
    e_idx = np.arange(m)

    def coords(v):
        return v[xs].reshape(n, k)

    # squared-length term on either x differences or z blocks
    if uses_z:
        zcols = z_off + e_idx[:, None] * k + np.arange(k)

        def sq_and_jac(v):
            z = v[zs].reshape(m, k)
            return np.einsum("ij,ij->i", z, z), zcols, 2.0 * z

        def sq_grad_full(v, w):
            z = v[zs].reshape(m, k)
            out = np.zeros(nv)
            out[zs] = (2.0 * w[:, None] * z).ravel()
            return out

    else:
        xcols = _edge_cols(x_off, tail, head, k)

        def sq_and_jac(v):
            diff, sq = kernels.edge_diff_sq(coords(v), tail, head)
            return sq, xcols, np.hstack([2.0 * diff, -2.0 * diff])

        def sq_grad_full(v, w):
            diff, _ = kernels.edge_diff_sq(coords(v), tail, head)
            out = np.zeros(nv)
            out[xs] = (inc @ (2.0 * w[:, None] * diff)).ravel()
            return out

    eq: list[Block] = []
    ineq: list[Block] = []
    sense = MIN

    if base == "quartic":

        def objective(v):
            f, gx = kernels.quartic_fg(coords(v), tail, head, d2)
            out = np.zeros(nv)
            out[xs] = gx.ravel()
            return f, out

    elif base == "cycle":

        def objective(v):
            z = v[zs].reshape(m, k)
            r = np.einsum("ij,ij->i", z, z) - d2
            out = np.zeros(nv)
            out[zs] = (4.0 * r[:, None] * z).ravel()
            return float(r @ r), out

    elif base in ("system2", "cycsystem2"):
        s_sl = slice(s_off, s_off + m)

        def objective(v):
            s = v[s_sl]
            out = np.zeros(nv)
            out[s_sl] = 2.0 * s
            return float(s @ s), out

        def residual_eq(v):
            sq, cols, data = sq_and_jac(v)
            vals = sq - d2 - v[s_sl]
            J = _rows_csr(np.hstack([cols, (s_off + e_idx)[:, None]]), np.hstack([data, -np.ones((m, 1))]), nv)
            return vals, J

        eq.append(Block("edges", m, residual_eq))

    elif base in ("system1", "cycsystem1"):
        sp_sl, sm_sl = slice(sp_off, sp_off + m), slice(sm_off, sm_off + m)
        cost = np.zeros(nv)
        cost[sp_sl] = 1.0
        cost[sm_sl] = 1.0

        def objective(v):
            return float(cost @ v), cost.copy()

        def residual_eq(v):
            sq, cols, data = sq_and_jac(v)
            vals = sq - d2 - v[sp_sl] + v[sm_sl]
            J = _rows_csr(
                np.hstack([cols, (sp_off + e_idx)[:, None], (sm_off + e_idx)[:, None]]),
                np.hstack([data, -np.ones((m, 1)), np.ones((m, 1))]),
                nv,
            )
            return vals, J

        eq.append(Block("edges", m, residual_eq))

    elif base in ("pushpull", "pullpush", "cycpushpull"):
        sense = MIN if base == "pullpush" else MAX
        ones = np.ones(m)

        def objective(v):
            sq, _, _ = sq_and_jac(v)
            return float(sq.sum()), sq_grad_full(v, ones)

        sign = -1.0 if base == "pullpush" else 1.0

        def edge_ineq(v):
            sq, cols, data = sq_and_jac(v)
            return sign * (sq - d2), _rows_csr(cols, sign * data, nv)

        ineq.append(Block("edges", m, edge_ineq))
    else:  # pragma: no cover - table and branches are kept in sync
        raise UnknownFormulationError(kind)

    if uses_z:
        eq.append(_link_block(x_off, z_off, tail, head, k, nv))
        if with_cycles:
            basis = fundamental_cycle_basis(g)
            if len(basis):
                eq.append(_cycle_block(basis, z_off, m, k, nv))
    if opts.centroid:
        eq.append(_centroid_block(x_off, n, k, nv))

    lo, hi, integral = V.arrays()

    def assemble(x, **_):
        x = np.asarray(x, dtype=float).reshape(n, k)
        v = np.zeros(nv)
        v[xs] = x.ravel()
        if uses_z:
            diff, _ = kernels.edge_diff_sq(x, tail, head)
            z = np.clip(diff, -d[:, None], d[:, None])
            v[zs] = z.ravel()
            sq = np.einsum("ij,ij->i", z, z)
        else:
            _, sq = kernels.edge_diff_sq(x, tail, head)
        r = sq - d2
        if s_off is not None:
            v[s_off : s_off + m] = r
        if sp_off is not None:
            v[sp_off : sp_off + m] = np.maximum(r, 0.0)
            v[sm_off : sm_off + m] = np.maximum(-r, 0.0)
        return v

    def sampler(rng):
        x = rng.uniform(-half_width, half_width, size=(n, k))
        return assemble(x - x.mean(axis=0) if opts.centroid else x)

    return SmoothProgram(
        name=name,
        n_vars=nv,
        objective=objective,
        sense=sense,
        eq=tuple(eq),
        ineq=tuple(ineq),
        lower=lo,
        upper=hi,
        integral=integral,
        layout=V.layout,
        n_points=n,
        k=k,
        graph=g,
        assemble=assemble,
        sampler=sampler,
        meta={"base": base, "cycle_constraints": bool(uses_z and with_cycles), "centroid": opts.centroid},
    )


def big_m(inst: UdgpInstance) -> float:
    """Deactivation constant: squared sum of all distances."""
    return float(sum(inst.distances)) ** 2


def _assignment_rows(P, m, y_off, nv, literal: bool) -> tuple[list[Block], list[Block]]:
    """Rows of the assignment set on the ``y`` block (``y[p, l]`` at ``y_off + p*m + l``)."""
    idx = y_off + np.arange(P * m).reshape(P, m)
    per_l = sparse.csr_matrix(
        (np.ones(P * m), (np.tile(np.arange(m), P), idx.ravel())), shape=(m, nv)
    )
    per_p = sparse.csr_matrix(
        (np.ones(P * m), (np.repeat(np.arange(P), m), idx.ravel())), shape=(P, nv)
    )
    function_rows = _linear_block("assign_function", per_l, np.ones(m))
    inject_rows = _linear_block("assign_injective", per_p, np.ones(P))
    if literal:
        # as printed: each distance used at most once, each pair exactly once
        return [inject_rows], [function_rows]
    return [function_rows], [inject_rows]


def _check_size(inst: UdgpInstance, literal: bool = False):
    if inst.m > inst.n_pairs:
        raise StructurallyInfeasibleError(
            f"{inst.m} distances cannot be assigned injectively to {inst.n_pairs} pairs"
        )
    if literal and inst.m < inst.n_pairs:
        raise StructurallyInfeasibleError(
            "literal assignment rows require one distance per pair (m = n(n-1)/2)"
        )


def build_udgp_smooth(kind: str, inst: UdgpInstance, centroid: bool = True, literal: bool = False) -> SmoothProgram:
    """``uquartic`` (binary ``y``, not locally solvable) or ``uquartic_cont``."""
    name = UDGP_ALIASES.get(kind, kind)
    if name not in UDGP_SMOOTH_KINDS:
        raise UnknownFormulationError(f"unknown UDGP smooth formulation {kind!r}")
    return _build_udgp(name, inst, centroid, literal)


def build_udgp_minlp(kind: str, inst: UdgpInstance, centroid: bool = True, literal: bool = False) -> SmoothProgram:
    """Big-M formulations with binary ``y``; fix ``y`` (see :meth:`SmoothProgram.fix`)
    to obtain a continuous program."""
    name = UDGP_ALIASES.get(kind, kind)
    if name not in UDGP_MINLP_KINDS:
        raise UnknownFormulationError(f"unknown UDGP MINLP formulation {kind!r}")
    return _build_udgp(name, inst, centroid, literal)


def _build_udgp(name: str, inst: UdgpInstance, centroid: bool, literal: bool) -> SmoothProgram:
    _check_size(inst, literal)
    n, k, m = inst.n_points, inst.k, inst.m
    pairs = inst.pairs()
    P = len(pairs)
    tail = np.array([i - 1 for i, _ in pairs], dtype=np.intp)
    head = np.array([j - 1 for _, j in pairs], dtype=np.intp)
    delta = np.array(inst.distances, dtype=float)
    delta2 = delta**2
    M = big_m(inst)
    inc = _incidence(n, tail, head)
    half_width = float(delta.sum()) if m else 1.0
    continuous = name == "uquartic_cont"

    V = _Vars()
    x_off = V.add("x", (n, k))
    y_off = V.add("y", (P, m), lo=0.0, hi=1.0, integral=not continuous)
    t_off = V.add("t", (1,)) if continuous else None
    s_off = V.add("s", (m,), lo=0.0) if name == "usystem2" else None
    sp_off = sm_off = None
    if name in ("usystem1", "ucycsystem1"):
        sp_off = V.add("s_plus", (m,), lo=0.0)
        sm_off = V.add("s_minus", (m,), lo=0.0)
    z_off = V.add("z", (P, k), lo=-half_width, hi=half_width) if name == "ucycsystem1" else None
    nv = V.n
    xs = slice(x_off, x_off + n * k)
    ys = slice(y_off, y_off + P * m)
    y_idx = y_off + np.arange(P * m).reshape(P, m)

    def coords(v):
        return v[xs].reshape(n, k)

    eq: list[Block] = []
    ineq: list[Block] = []
    sense = MIN

    def penalty_parts(v):
        diff, sq = kernels.edge_diff_sq(coords(v), tail, head)
        R = sq[:, None] - delta2[None, :]  # (P, m)
        y = v[ys].reshape(P, m)
        return diff, R, y

    def penalty_grad(v, diff, R, y):
        out = np.zeros(nv)
        w = (2.0 * y * R).sum(axis=1)  # d/d(sq_p)
        out[xs] = (inc @ (2.0 * w[:, None] * diff)).ravel()
        out[ys] = (R**2).ravel()
        return out

    if name == "uquartic":

        def objective(v):
            diff, R, y = penalty_parts(v)
            return float(np.sum(y * R**2)), penalty_grad(v, diff, R, y)

    elif name == "uquartic_cont":
        ts = t_off

        def objective(v):
            y = v[ys]
            out = np.zeros(nv)
            out[ys] = -2.0 * y
            out[ts] = 1.0
            return float(v[ts] - y @ y), out

        def penalty_eq(v):
            diff, R, y = penalty_parts(v)
            grad = penalty_grad(v, diff, R, y)
            grad[ts] = -1.0
            return np.array([np.sum(y * R**2) - v[ts]]), sparse.csr_matrix(grad[None, :])

        eq.append(Block("penalty", 1, penalty_eq))

    elif name in ("usystem2", "usystem1", "ucycsystem1", "upushpull"):
        ar = np.arange(k)
        if name == "ucycsystem1":
            zs = slice(z_off, z_off + P * k)
            zcols = z_off + np.arange(P)[:, None] * k + ar

            def sq_jac(v):
                z = v[zs].reshape(P, k)
                return np.einsum("ij,ij->i", z, z), zcols, 2.0 * z

        else:
            xcols = np.hstack([x_off + tail[:, None] * k + ar, x_off + head[:, None] * k + ar])

            def sq_jac(v):
                diff, sq = kernels.edge_diff_sq(coords(v), tail, head)
                return sq, xcols, np.hstack([2.0 * diff, -2.0 * diff])

        # rows ordered (p, l) with l fastest
        p_of = np.repeat(np.arange(P), m)
        l_of = np.tile(np.arange(m), P)
        yrow = y_idx.ravel()[:, None]

        if name == "upushpull":
            sense = MAX

            def objective(v):
                diff, sq = kernels.edge_diff_sq(coords(v), tail, head)
                y = v[ys].reshape(P, m)
                out = np.zeros(nv)
                w = y.sum(axis=1)
                out[xs] = (inc @ (2.0 * w[:, None] * diff)).ravel()
                out[ys] = np.repeat(sq, m)
                return float(np.sum(y * sq[:, None])), out

            def upper(v):
                sq, cols, data = sq_jac(v)
                vals = sq[p_of] - delta2[l_of] - M * (1.0 - v[ys])
                J = _rows_csr(np.hstack([cols[p_of], yrow]), np.hstack([data[p_of], np.full((P * m, 1), M)]), nv)
                return vals, J

            ineq.append(Block("edges_upper", P * m, upper))
        else:
            if name == "usystem2":
                up_cols = down_cols = (s_off + l_of)[:, None]
                s_sl = slice(s_off, s_off + m)

                def objective(v):
                    s = v[s_sl]
                    out = np.zeros(nv)
                    out[s_sl] = 2.0 * s
                    return float(s @ s), out

                def up_slack(v):
                    return v[s_sl][l_of]

                down_slack = up_slack
            else:
                up_cols = (sp_off + l_of)[:, None]
                down_cols = (sm_off + l_of)[:, None]
                sp_sl, sm_sl = slice(sp_off, sp_off + m), slice(sm_off, sm_off + m)
                cost = np.zeros(nv)
                cost[sp_sl] = 1.0
                cost[sm_sl] = 1.0

                def objective(v):
                    return float(cost @ v), cost.copy()

                def up_slack(v):
                    return v[sp_sl][l_of]

                def down_slack(v):
                    return v[sm_sl][l_of]

            minus1 = -np.ones((P * m, 1))
            Mcol = np.full((P * m, 1), M)

            def upper(v):
                sq, cols, data = sq_jac(v)
                vals = sq[p_of] - delta2[l_of] - up_slack(v) - M * (1.0 - v[ys])
                J = _rows_csr(np.hstack([cols[p_of], up_cols, yrow]), np.hstack([data[p_of], minus1, Mcol]), nv)
                return vals, J

            def lower(v):
                sq, cols, data = sq_jac(v)
                vals = -(sq[p_of] - delta2[l_of]) - down_slack(v) - M * (1.0 - v[ys])
                J = _rows_csr(np.hstack([cols[p_of], down_cols, yrow]), np.hstack([-data[p_of], minus1, Mcol]), nv)
                return vals, J

            ineq.append(Block("edges_upper", P * m, upper))
            ineq.append(Block("edges_lower", P * m, lower))
        if name == "ucycsystem1":
            eq.append(_link_block(x_off, z_off, tail, head, k, nv))
    else:  # pragma: no cover
        raise UnknownFormulationError(name)

    rows_eq, rows_ineq = _assignment_rows(P, m, y_off, nv, literal)
    eq.extend(rows_eq)
    ineq.extend(rows_ineq)
    if centroid:
        eq.append(_centroid_block(x_off, n, k, nv))

    lo, hi, integral = V.arrays()
    pair_index = {p: i for i, p in enumerate(pairs)}

    def assemble(x, assignment: Assignment | None = None, y=None, **_):
        x = np.asarray(x, dtype=float).reshape(n, k)
        v = np.zeros(nv)
        v[xs] = x.ravel()
        if assignment is not None:
            yy = np.zeros((P, m))
            for l, pr in enumerate(assignment.pairs):
                yy[pair_index[pr], l] = 1.0
        elif y is not None:
            yy = np.asarray(y, dtype=float).reshape(P, m)
        else:
            yy = np.zeros((P, m))
        v[ys] = yy.ravel()
        diff, sq = kernels.edge_diff_sq(x, tail, head)
        R = sq[:, None] - delta2[None, :]
        if t_off is not None:
            v[t_off] = float(np.sum(yy * R**2))
        # slack of distance l: residual on its (weighted) assigned pair
        r_l = (yy * R).sum(axis=0)
        if s_off is not None:
            v[s_off : s_off + m] = np.abs(r_l)
        if sp_off is not None:
            v[sp_off : sp_off + m] = np.maximum(r_l, 0.0)
            v[sm_off : sm_off + m] = np.maximum(-r_l, 0.0)
        if z_off is not None:
            v[z_off : z_off + P * k] = np.clip(diff, -half_width, half_width).ravel()
        return v

    def sampler(rng):
        x = rng.uniform(-half_width, half_width, size=(n, k))
        if centroid:
            x = x - x.mean(axis=0)
        y = rng.uniform(0.0, 1.0, size=(P, m)) if continuous else None
        return assemble(x, y=y)

    return SmoothProgram(
        name=name,
        n_vars=nv,
        objective=objective,
        sense=sense,
        eq=tuple(eq),
        ineq=tuple(ineq),
        lower=lo,
        upper=hi,
        integral=integral,
        layout=V.layout,
        n_points=n,
        k=k,
        graph=None,
        assemble=assemble,
        sampler=sampler,
        meta={"pairs": pairs, "big_m": M, "udgp": inst, "literal": literal, "centroid": centroid},
    )


def assignment_from_y(prog: SmoothProgram, v, tol: float = 1e-6) -> Assignment | None:
    """Read an assignment off a near-binary ``y`` block; ``None`` if ``y`` is
    fractional or does not encode an injective total assignment."""
    y = prog.block(v, "y")
    if np.any(np.minimum(np.abs(y), np.abs(1.0 - y)) > tol):
        return None
    yb = np.rint(y)
    if np.any(yb.sum(axis=0) != 1) or np.any(yb.sum(axis=1) > 1):
        return None
    pairs = prog.meta["pairs"]
    return Assignment([pairs[int(np.argmax(yb[:, l]))] for l in range(yb.shape[1])])


def fix_assignment(prog: SmoothProgram, a: Assignment) -> SmoothProgram:
    """Fix the ``y`` block to the binary encoding of ``a``."""
    pairs = prog.meta["pairs"]
    P = len(pairs)
    m = len(a)
    yy = np.zeros((P, m))
    index = {p: i for i, p in enumerate(pairs)}
    for l, pr in enumerate(a.pairs):
        yy[index[pr], l] = 1.0
    values = np.zeros(prog.n_vars)
    mask = np.zeros(prog.n_vars, dtype=bool)
    sl, _ = prog.layout["y"]
    values[sl] = yy.ravel()
    mask[sl] = True
    return prog.fix(values, mask=mask)
