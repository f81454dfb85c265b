"""Local nonlinear solver and the random-restart driver.

The local solver is an augmented Lagrangian method (PHR multipliers for both
equalities and inequalities) whose bound-constrained subproblems are solved
by projected L-BFGS with Armijo backtracking.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .core import GeodesolveError, Realization, SolveReport, Status, reconstruct_graph
from .formulations.programs import MAX, SmoothProgram
from .formulations.smooth import assignment_from_y
from .metrics import lde, mde

MAX_PENALTY = 1e12
LBFGS_MEMORY = 10
SCALE_GRAD = 100.0
# inner solves run tighter than the outer stationarity test
INNER_TOL = 0.1


class UnsupportedProgramError(GeodesolveError, TypeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    max_outer: int = 30
    max_inner: int = 500
    penalty_init: float = 10.0
    penalty_growth: float = 10.0
    tol_kkt: float = 1e-6
    tol_feas: float = 1e-8
    seed: int = 0
    restarts: int = 10
    time_limit_s: float = 60.0

    def __post_init__(self):
        if self.penalty_growth <= 1:
            raise ValueError("penalty_growth must exceed 1")
        for name in ("max_outer", "max_inner", "penalty_init", "tol_kkt", "tol_feas", "time_limit_s"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.restarts < 0:
            raise ValueError("restarts must be non-negative")

    def with_(self, **kw) -> "SolverConfig":
        return replace(self, **kw)


@dataclass
class _Inner:
    v: np.ndarray
    f: float
    pg_norm: float
    iters: int
    timed_out: bool = False


def _proj_grad(v, g, lo, hi):
    return v - np.clip(v - g, lo, hi)


def _lbfgs_box(fg, v, lo, hi, max_iter, tol, deadline) -> _Inner:
    """Minimize a smooth function over a box."""
    v = np.clip(v, lo, hi)
    f, g = fg(v)
    S: list[np.ndarray] = []
    Y: list[np.ndarray] = []
    stall = 0
    it = 0
    pg = np.max(np.abs(_proj_grad(v, g, lo, hi)), initial=0.0)
    while it < max_iter:
        if pg <= tol:
            break
        if time.process_time() > deadline:
            return _Inner(v, f, pg, it, True)
        it += 1
        free = ~(((v <= lo) & (g > 0)) | ((v >= hi) & (g < 0)))
        q = np.where(free, g, 0.0)
        alphas = []
        for s, y in zip(reversed(S), reversed(Y)):
            rho = 1.0 / (y @ s)
            a = rho * (s @ q)
            alphas.append((a, rho, s, y))
            q = q - a * y
        if S:
            q *= (S[-1] @ Y[-1]) / (Y[-1] @ Y[-1])
        else:
            q *= min(1.0, 1.0 / max(np.max(np.abs(q), initial=0.0), 1e-300))
        for a, rho, s, y in reversed(alphas):
            b = rho * (y @ q)
            q = q + (a - b) * s
        d = -np.where(free, q, 0.0)
        gd = g @ d
        if not np.isfinite(gd) or gd >= 0:
            S.clear()
            Y.clear()
            d = -np.where(free, g, 0.0) * min(1.0, 1.0 / max(np.max(np.abs(g)), 1e-300))
        t = 1.0
        accepted = False
        for _ in range(60):
            v_new = np.clip(v + t * d, lo, hi)
            f_new, g_new = fg(v_new)
            if np.isfinite(f_new) and f_new <= f + 1e-4 * (g @ (v_new - v)):
                accepted = True
                break
            t *= 0.5
        if not accepted:
            if S:
                S.clear()
                Y.clear()
                continue
            break
        s = v_new - v
        y = g_new - g
        sy = s @ y
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            S.append(s)
            Y.append(y)
            if len(S) > LBFGS_MEMORY:
                S.pop(0)
                Y.pop(0)
        stall = stall + 1 if abs(f - f_new) <= 1e-15 * max(1.0, abs(f)) else 0
        v, f, g = v_new, f_new, g_new
        pg = np.max(np.abs(_proj_grad(v, g, lo, hi)), initial=0.0)
        if stall >= 5:
            break
    return _Inner(v, f, pg, it)


def _constraint_parts(p: SmoothProgram, v):
    if p.eq:
        parts = [b(v) for b in p.eq]
        c = np.concatenate([x[0] for x in parts])
        Jc = [x[1] for x in parts]
    else:
        c, Jc = np.zeros(0), []
    if p.ineq:
        parts = [b(v) for b in p.ineq]
        h = np.concatenate([x[0] for x in parts])
        Jh = [x[1] for x in parts]
    else:
        h, Jh = np.zeros(0), []
    return c, Jc, h, Jh


def _stack_t(blocks, w):
    out = None
    start = 0
    for J in blocks:
        part = J.T @ w[start : start + J.shape[0]]
        out = part if out is None else out + part
        start += J.shape[0]
    return out


def _row_max(blocks) -> np.ndarray:
    if not blocks:
        return np.zeros(0)
    return np.concatenate([np.asarray(abs(J).max(axis=1).todense()).ravel() if J.shape[1] else np.zeros(J.shape[0]) for J in blocks])


def _scales(p: SmoothProgram, v, n_eq, n_in):
    """Gradient-based constraint scaling at the start point: any row whose
    gradient exceeds SCALE_GRAD in max-norm is scaled down to it. The
    objective stays unscaled so tol_kkt keeps its meaning."""
    _, Jc, _, Jh = _constraint_parts(p, v)
    wc = np.minimum(1.0, SCALE_GRAD / np.maximum(_row_max(Jc), 1e-300)) if n_eq else np.zeros(0)
    wh = np.minimum(1.0, SCALE_GRAD / np.maximum(_row_max(Jh), 1e-300)) if n_in else np.zeros(0)
    return wc, wh


def _violation(p: SmoothProgram, v) -> float:
    return p.max_violation(v)


def _report(p: SmoothProgram, v, status, cpu, extras) -> SolveReport:
    coords = p.coords(v)
    real = Realization(coords) if np.all(np.isfinite(coords)) else None
    obj = p.objective(v)[0] if real is not None else float("nan")
    e_mde = e_lde = float("nan")
    assignment = None
    if real is not None:
        if p.graph is not None:
            e_mde, e_lde = mde(real, p.graph), lde(real, p.graph)
        elif "udgp" in p.meta:
            assignment = assignment_from_y(p, v)
            if assignment is not None:
                ga = reconstruct_graph(p.meta["udgp"], assignment)
                e_mde, e_lde = mde(real, ga), lde(real, ga)
    extras = dict(extras)
    extras["vars"] = np.array(v)
    return SolveReport(real, status, obj, e_mde, e_lde, cpu, assignment, extras)


def solve_local(p: SmoothProgram, x0, cfg: SolverConfig | None = None) -> SolveReport:
    """Local solve from the full variable vector ``x0``.

    For a minimization (or maximization) program the returned point is never
    worse than a feasible ``x0``.
    """
    cfg = cfg or SolverConfig()
    if p.has_integers:
        raise UnsupportedProgramError(
            f"{p.name} has integer variables; fix them before a local solve"
        )
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (p.n_vars,):
        raise ValueError(f"start has shape {x0.shape}, program has {p.n_vars} variables")
    t0 = time.process_time()
    deadline = t0 + cfg.time_limit_s
    sign = -1.0 if p.sense == MAX else 1.0
    lo, hi = p.lower, p.upper

    def fobj(v):
        f, g = p.objective(v)
        return sign * f, sign * g

    n_eq = sum(b.size for b in p.eq)
    n_in = sum(b.size for b in p.ineq)
    lam = np.zeros(n_eq)
    nu = np.zeros(n_in)
    mu = cfg.penalty_init

    start = np.clip(x0, lo, hi)
    wc, wh = _scales(p, start, n_eq, n_in)

    def make_al(lam, nu, mu):
        def fg(v):
            f, g = fobj(v)
            c, Jc, h, Jh = _constraint_parts(p, v)
            if n_eq:
                c = wc * c
                w = lam + mu * c
                f += lam @ c + 0.5 * mu * (c @ c)
                g = g + _stack_t(Jc, wc * w)
            if n_in:
                h = wh * h
                w = np.maximum(0.0, nu + mu * h)
                f += (w @ w - nu @ nu) / (2.0 * mu)
                g = g + _stack_t(Jh, wh * w)
            return f, g

        return fg

    v = start.copy()
    viol = _violation(p, v)
    # the monotone trace starts at the first outer iterate, not at x0
    ref = np.inf
    trace: list[float] = []
    pg = np.inf
    status = None
    timed_out = False
    outer = 0
    warm = v
    for outer in range(1, cfg.max_outer + 1):
        res = _lbfgs_box(make_al(lam, nu, mu), warm, lo, hi, cfg.max_inner, INNER_TOL * cfg.tol_kkt, deadline)
        warm = res.v if np.all(np.isfinite(res.v)) else v
        timed_out = res.timed_out
        new_viol = _violation(p, res.v)
        if new_viol <= ref and np.all(np.isfinite(res.v)):
            c, _, h, _ = _constraint_parts(p, res.v)
            lam = lam + mu * wc * c
            nu = np.maximum(0.0, nu + mu * wh * h)
            if new_viol > 0.25 * min(ref, viol) and new_viol > cfg.tol_feas:
                mu *= cfg.penalty_growth
            v, viol, pg = res.v, new_viol, res.pg_norm
            ref = viol
            trace.append(viol)
        else:
            # keep the feasibility trace monotone: reject, tighten and
            # continue the inner solve from the rejected point
            mu *= cfg.penalty_growth
        if timed_out:
            break
        if viol <= cfg.tol_feas and pg <= cfg.tol_kkt:
            status = Status.OPTIMAL
            break
        if mu > MAX_PENALTY:
            break
    if status is None:
        if timed_out:
            status = Status.TIME_LIMIT
        elif viol <= cfg.tol_feas:
            status = Status.FEASIBLE_POINT
        else:
            status = Status.NUMERIC_FAILURE
    # never return something worse than a feasible start
    start_viol = _violation(p, start)
    if start_viol <= cfg.tol_feas:
        if viol > cfg.tol_feas or fobj(v)[0] > fobj(start)[0]:
            v, viol = start, start_viol
            if status is not Status.TIME_LIMIT:
                status = Status.FEASIBLE_POINT
    extras = {"outer_iterations": outer, "violation_trace": trace, "max_violation": viol, "kkt": pg, "penalty": mu}
    return _report(p, v, status, time.process_time() - t0, extras)


def _merit(rep: SolveReport, sense: str, tol_feas: float):
    viol = rep.extras.get("max_violation", np.inf)
    obj = rep.objective if sense != MAX else -rep.objective
    return (0 if viol <= tol_feas else 1, viol if viol > tol_feas else 0.0, obj)


def multistart(p: SmoothProgram, cfg: SolverConfig | None = None, starts=None) -> SolveReport:
    """Best of ``cfg.restarts`` local solves from random starts.

    Restart ``r`` draws its start from ``default_rng(cfg.seed + r)``; ties keep
    the lowest restart index. ``starts`` may supply explicit start vectors that
    are tried before the random ones.
    """
    cfg = cfg or SolverConfig()
    t0 = time.process_time()
    deadline = t0 + cfg.time_limit_s
    best: SolveReport | None = None
    best_key = None
    history: list[float] = []
    completed = 0
    explicit = list(starts or [])
    total = len(explicit) + cfg.restarts
    for r in range(total):
        remaining = deadline - time.process_time()
        if remaining <= 0:
            break
        if r < len(explicit):
            x0 = np.asarray(explicit[r], dtype=float)
        else:
            rng = np.random.default_rng(cfg.seed + r - len(explicit))
            x0 = p.sampler(rng)
        rep = solve_local(p, x0, cfg.with_(time_limit_s=remaining))
        if rep.status is not Status.TIME_LIMIT:
            completed += 1
        if not rep.found:
            continue
        key = _merit(rep, p.sense, cfg.tol_feas)
        if best_key is None or key < best_key:
            best, best_key = rep, key
            best.extras["restart"] = r
        history.append(best.objective)
    cpu = time.process_time() - t0
    if best is None:
        return SolveReport(None, Status.TIME_LIMIT, cpu_seconds=cpu, extras={"restarts_done": 0, "history": []})
    best.cpu_seconds = cpu
    best.extras["history"] = history
    best.extras["restarts_done"] = len(history)
    best.extras["restarts_completed"] = completed
    if completed < total and best.status is Status.OPTIMAL:
        best.status = Status.TIME_LIMIT
    return best
