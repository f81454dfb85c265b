"""Dense bounded-variable revised simplex and best-bound branch-and-bound."""
from __future__ import annotations

import heapq
import itertools
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .core import Status
from .formulations.programs import MAX, LinearProgram

FEAS_TOL = 1e-9
COST_TOL = 1e-9
PIVOT_TOL = 1e-11
CHECK_TOL = 1e-8
REFACTOR_EVERY = 50
BLAND_AFTER = 50
INT_TOL = 1e-6

_AT_LOWER, _AT_UPPER, _FREE_ZERO, _BASIC = 0, 1, 2, 3


@dataclass
class LpSolution:
    values: np.ndarray | None
    objective: float
    status: Status
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


@dataclass
class MilpSolution(LpSolution):
    best_bound: float = float("nan")
    nodes: int = 0
    # improving incumbents in the order they were found: (objective, values)
    pool: list = field(default_factory=list)


@dataclass(frozen=True)
class MilpConfig:
    time_limit_s: float = 60.0
    gap_tol: float = 1e-6
    node_limit: int = 100_000
    collect_pool: bool = True
    # LP solves spent diving for an early incumbent at the root (0 disables)
    dive_steps: int = 200


class _Simplex:
    """Minimize ``c.x`` subject to ``A x = 0`` and ``lo <= x <= hi``."""

    def __init__(self, A, c, lo, hi, basis, x, deadline):
        self.A = A
        self.c = c
        self.lo = lo
        self.hi = hi
        self.basis = list(basis)
        self.x = x
        self.m = A.shape[0]
        # nonbasic state follows where the variable currently sits
        self.state = np.where(
            np.isfinite(hi) & (x >= hi),
            _AT_UPPER,
            np.where(np.isfinite(lo), _AT_LOWER, np.where(np.isfinite(hi), _AT_UPPER, _FREE_ZERO)),
        )
        nb_free = (self.state == _FREE_ZERO)
        x[nb_free] = 0.0
        self.state[self.basis] = _BASIC
        self.deadline = deadline
        self.iterations = 0
        self.refactor()

    def refactor(self):
        B = self.A[:, self.basis]
        self.Binv = np.linalg.inv(B)
        nb = self.state != _BASIC
        rhs = -(self.A[:, nb] @ self.x[nb])
        self.x[self.basis] = self.Binv @ rhs

    def run(self) -> str:
        bland = False
        degenerate = 0
        since_refactor = 0
        n = self.A.shape[1]
        max_iter = 50 * (n + self.m) + 1000
        movable = self.lo < self.hi
        while True:
            if self.iterations > max_iter:
                return "stalled"
            if self.iterations % 64 == 0 and time.process_time() > self.deadline:
                return "time"
            y = self.c[self.basis] @ self.Binv
            d = self.c - y @ self.A
            st = self.state
            cand = np.zeros(n, dtype=bool)
            cand |= (st == _AT_LOWER) & (d < -COST_TOL)
            cand |= (st == _AT_UPPER) & (d > COST_TOL)
            cand |= (st == _FREE_ZERO) & (np.abs(d) > COST_TOL)
            cand &= movable
            idx = np.flatnonzero(cand)
            if idx.size == 0:
                return "optimal"
            j = int(idx[0]) if bland else int(idx[np.argmax(np.abs(d[idx]))])
            direction = 1.0 if d[j] < 0 else -1.0
            w = self.Binv @ self.A[:, j]
            dx = -direction * w  # change of basic variables per unit step
            theta = self.hi[j] - self.lo[j]
            leave = -1
            xb = self.x[self.basis]
            lob = self.lo[self.basis]
            hib = self.hi[self.basis]
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.full(self.m, np.inf)
                dec = dx < -PIVOT_TOL
                inc = dx > PIVOT_TOL
                ratio[dec] = (xb[dec] - lob[dec]) / -dx[dec]
                ratio[inc] = (hib[inc] - xb[inc]) / dx[inc]
            ratio = np.maximum(ratio, 0.0)
            rmin = ratio.min() if self.m else np.inf
            if rmin < theta:
                ties = np.flatnonzero(ratio <= rmin + 1e-12)
                if bland:
                    leave = min(ties, key=lambda r: self.basis[r])
                else:
                    leave = int(ties[np.argmax(np.abs(dx[ties]))])
                theta = ratio[leave]
            if not np.isfinite(theta):
                return "unbounded"
            self.iterations += 1
            if theta <= 1e-12:
                degenerate += 1
                if degenerate > BLAND_AFTER:
                    bland = True
            else:
                degenerate = 0
            self.x[j] += direction * theta
            self.x[self.basis] = xb + theta * dx
            if leave < 0:
                # bound flip of the entering variable
                self.state[j] = _AT_UPPER if direction > 0 else _AT_LOWER
                continue
            out = self.basis[leave]
            if dx[leave] < 0:
                self.x[out] = self.lo[out]
                self.state[out] = _AT_LOWER
            else:
                self.x[out] = self.hi[out]
                self.state[out] = _AT_UPPER
            self.basis[leave] = j
            self.state[j] = _BASIC
            piv = w[leave]
            eta = -w / piv
            eta[leave] = 1.0 / piv
            row = self.Binv[leave].copy()
            self.Binv += np.outer(eta, row)
            self.Binv[leave] = eta[leave] * row
            since_refactor += 1
            if since_refactor >= REFACTOR_EVERY:
                self.refactor()
                since_refactor = 0


def _bounds_for_rows(p: LinearProgram):
    lo = np.full(p.n_rows, -np.inf)
    hi = np.full(p.n_rows, np.inf)
    for i, r in enumerate(p.rel):
        if r in ("<=", "="):
            hi[i] = p.b[i]
        if r in (">=", "="):
            lo[i] = p.b[i]
    return lo, hi


def solve_lp(p: LinearProgram, time_limit_s: float = 60.0) -> LpSolution:
    """Two-phase revised simplex. Optimal solutions are replay-checked
    against every row and bound."""
    if np.any(p.integral):
        raise ValueError("program has integrality marks; use solve_milp")
    deadline = time.process_time() + time_limit_s
    n, m = p.n_vars, p.n_rows
    if np.any(p.lb > p.ub):
        return LpSolution(None, float("nan"), Status.INFEASIBLE)
    sign = -1.0 if p.sense == MAX else 1.0
    rlo, rhi = _bounds_for_rows(p)
    x = np.where(np.isfinite(p.lb), p.lb, np.where(np.isfinite(p.ub), p.ub, 0.0)).astype(float)
    act = p.A @ x if m else np.zeros(0)
    # rows: A x - r - s_i a_i = 0 with row activity r in [rlo, rhi]
    target = np.clip(act, rlo, rhi)
    gap = act - target
    need = np.flatnonzero(np.abs(gap) > FEAS_TOL)
    n_art = need.size
    A_full = np.zeros((m, n + m + n_art))
    A_full[:, :n] = p.A
    A_full[:, n : n + m] = -np.eye(m)
    for k, i in enumerate(need):
        A_full[i, n + m + k] = -np.sign(gap[i])
    lo = np.r_[p.lb, rlo, np.zeros(n_art)]
    hi = np.r_[p.ub, rhi, np.full(n_art, np.inf)]
    xf = np.r_[x, target, np.abs(gap[need])]
    basis = [n + i for i in range(m)]
    for k, i in enumerate(need):
        basis[i] = n + m + k
    iters = 0
    if n_art:
        c1 = np.r_[np.zeros(n + m), np.ones(n_art)]
        sx = _Simplex(A_full, c1, lo, hi, basis, xf, deadline)
        outcome = sx.run()
        iters += sx.iterations
        if outcome == "time":
            return LpSolution(None, float("nan"), Status.TIME_LIMIT, iters)
        if outcome == "stalled":
            return LpSolution(None, float("nan"), Status.NUMERIC_FAILURE, iters)
        infeas = float(sx.x[n + m :].sum())
        if infeas > 1e-7 * max(1.0, float(np.abs(p.b).max(initial=0.0))):
            return LpSolution(None, float("nan"), Status.INFEASIBLE, iters)
        basis, xf = sx.basis, sx.x
        hi = hi.copy()
        hi[n + m :] = 0.0
        xf[n + m :] = np.minimum(xf[n + m :], 0.0)
    c2 = np.r_[sign * p.c, np.zeros(m + n_art)]
    sx = _Simplex(A_full, c2, lo, hi, basis, xf, deadline)
    outcome = sx.run()
    iters += sx.iterations
    if outcome == "time":
        return LpSolution(None, float("nan"), Status.TIME_LIMIT, iters)
    if outcome == "unbounded":
        return LpSolution(None, float("-inf") * sign, Status.UNBOUNDED, iters)
    if outcome == "stalled":
        return LpSolution(None, float("nan"), Status.NUMERIC_FAILURE, iters)
    values = sx.x[:n].copy()
    scale = max(1.0, float(np.abs(p.b).max(initial=0.0)))
    if p.max_violation(values) > CHECK_TOL * scale:
        sx.refactor()
        values = sx.x[:n].copy()
        if p.max_violation(values) > CHECK_TOL * scale:
            return LpSolution(values, p.objective_value(values), Status.NUMERIC_FAILURE, iters)
    return LpSolution(values, p.objective_value(values), Status.OPTIMAL, iters)


def _most_fractional(values, int_idx):
    v = values[int_idx]
    frac = np.abs(v - np.rint(v))
    if frac.size == 0 or frac.max() <= INT_TOL:
        return -1
    # closest to one half; argmax keeps the lowest index among ties
    score = 0.5 - np.abs(v - np.floor(v) - 0.5)
    return int(int_idx[np.argmax(np.round(score, 12))])


def solve_milp(p: LinearProgram, cfg: MilpConfig | None = None) -> MilpSolution:
    """Best-bound branch-and-bound branching on the most fractional
    integral variable. Every improving incumbent is kept in ``pool``."""
    cfg = cfg or MilpConfig()
    t0 = time.process_time()
    deadline = t0 + cfg.time_limit_s
    sign = -1.0 if p.sense == MAX else 1.0
    int_idx = np.flatnonzero(p.integral)
    relaxed = replace(p, integral=np.zeros(p.n_vars, dtype=bool))
    lb0 = p.lb.copy()
    ub0 = p.ub.copy()
    lb0[int_idx] = np.ceil(lb0[int_idx] - INT_TOL)
    ub0[int_idx] = np.floor(ub0[int_idx] + INT_TOL)
    counter = itertools.count()
    heap: list = []
    nodes = 0
    iters = 0
    incumbent = None
    inc_val = np.inf  # in minimization terms
    pool: list = []
    timed_out = False

    def remaining():
        return deadline - time.process_time()

    def cutoff():
        if not np.isfinite(inc_val):
            return np.inf
        return inc_val - cfg.gap_tol * max(1.0, abs(inc_val))

    def solve_node(lb, ub):
        nonlocal nodes, iters
        nodes += 1
        sol = solve_lp(replace(relaxed, lb=lb, ub=ub), time_limit_s=max(remaining(), 1e-3))
        iters += sol.iterations
        return sol

    def try_incumbent(sol, lb, ub):
        nonlocal incumbent, inc_val
        vals = sol.values.copy()
        vals[int_idx] = np.rint(vals[int_idx])
        # polish the continuous part with the integers fixed
        flb, fub = lb.copy(), ub.copy()
        flb[int_idx] = vals[int_idx]
        fub[int_idx] = vals[int_idx]
        pol = solve_lp(replace(relaxed, lb=flb, ub=fub), time_limit_s=max(remaining(), 1e-3))
        if pol.optimal:
            vals = pol.values
            vals[int_idx] = np.rint(vals[int_idx])
        elif p.max_violation(vals) > CHECK_TOL * max(1.0, float(np.abs(p.b).max(initial=0.0))):
            return
        val = sign * p.objective_value(vals)
        if val < inc_val - 1e-12:
            incumbent, inc_val = vals, val
            if cfg.collect_pool:
                pool.append((p.objective_value(vals), vals.copy()))

    def dive(lb, ub, sol):
        """Fractional diving: fix the integral-valued variables and round the
        least fractional one, until the LP is integral or infeasible."""
        lb, ub = lb.copy(), ub.copy()
        for _ in range(cfg.dive_steps):
            if remaining() <= 0:
                return
            v = sol.values[int_idx]
            frac = np.abs(v - np.rint(v))
            if frac.max(initial=0.0) <= INT_TOL:
                try_incumbent(sol, lb, ub)
                return
            done = frac <= INT_TOL
            lb[int_idx[done]] = ub[int_idx[done]] = np.rint(v[done])
            masked = np.where(done, np.inf, frac)
            j = int(np.argmin(masked))
            lb[int_idx[j]] = ub[int_idx[j]] = np.rint(v[j])
            sol = solve_node(lb, ub)
            if not sol.optimal or sign * sol.objective >= cutoff():
                return

    root = solve_node(lb0, ub0)
    if root.optimal and cfg.dive_steps:
        dive(lb0, ub0, root)
    status = None
    if root.status is Status.INFEASIBLE:
        status = Status.INFEASIBLE
    elif root.status is Status.UNBOUNDED:
        status = Status.UNBOUNDED
    elif root.status is Status.TIME_LIMIT:
        timed_out = True
    elif root.status is Status.NUMERIC_FAILURE:
        status = Status.NUMERIC_FAILURE
    else:
        heapq.heappush(heap, (sign * root.objective, next(counter), lb0, ub0, root))
    best_bound = sign * root.objective if root.optimal else np.nan
    while heap and status is None:
        bound, _, lb, ub, sol = heapq.heappop(heap)
        best_bound = bound
        if bound >= cutoff():
            heap.clear()
            break
        if remaining() <= 0 or nodes >= cfg.node_limit:
            heapq.heappush(heap, (bound, next(counter), lb, ub, sol))
            timed_out = True
            break
        j = _most_fractional(sol.values, int_idx)
        if j < 0:
            try_incumbent(sol, lb, ub)
            continue
        v = sol.values[j]
        for side in (0, 1):
            clb, cub = lb.copy(), ub.copy()
            if side == 0:
                cub[j] = np.floor(v)
            else:
                clb[j] = np.ceil(v)
            child = solve_node(clb, cub)
            if child.status is Status.TIME_LIMIT:
                timed_out = True
                heapq.heappush(heap, (bound, next(counter), lb, ub, sol))
                break
            if not child.optimal:
                continue
            cb = sign * child.objective
            if cb < cutoff():
                heapq.heappush(heap, (cb, next(counter), clb, cub, child))
        if timed_out:
            break
    if heap:
        best_bound = min(best_bound, heap[0][0]) if np.isfinite(best_bound) else heap[0][0]
    elif incumbent is not None:
        best_bound = inc_val
    if status is None:
        if timed_out:
            status = Status.TIME_LIMIT
        elif incumbent is None:
            status = Status.INFEASIBLE
        else:
            status = Status.OPTIMAL
    obj = p.objective_value(incumbent) if incumbent is not None else float("nan")
    return MilpSolution(
        values=incumbent,
        objective=obj,
        status=status,
        iterations=iters,
        best_bound=sign * best_bound if np.isfinite(best_bound) else float("nan"),
        nodes=nodes,
        pool=pool,
    )
