"""Small SDP engine: alternating projections between the PSD cone and an
affine set, then projected-gradient steps on the linear objective.

Variables live in ``svec`` space (off-diagonal entries scaled by sqrt(2)) so
the Euclidean norm of a vector equals the Frobenius norm of its matrix.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .core import GeodesolveError, Status
from .formulations.programs import MAX, SdpProblem
from .linalg import eigen_sym

SQRT2 = np.sqrt(2.0)
# largest factor rank tried when polishing
POLISH_MAX_RANK = 10


class SdpTooLargeError(GeodesolveError, ValueError):
    pass


@dataclass(frozen=True)
class SdpConfig:
    max_iters: int = 20_000
    tol: float = 1e-7
    time_limit_s: float = 60.0
    n_cap: int = 300
    stall_window: int = 200
    objective_steps: int = 200
    # Dykstra iterations per objective step before polishing
    dykstra_iters: int = 200


@dataclass
class SdpResult:
    X: np.ndarray | None
    status: Status
    objective: float = float("nan")
    residual: float = float("nan")
    aux: np.ndarray | None = None
    iterations: int = 0
    # distance to the affine set after each cone projection (non-increasing)
    residual_trace: list = field(default_factory=list)


def _is_centering(row, n) -> bool:
    if row.rel != "=" or row.rhs != 0 or row.aux_coefs or len(row.x_coefs) != n * (n + 1) // 2:
        return False
    return all(c == (1.0 if i == j else 2.0) for (i, j), c in row.x_coefs.items())


def _centered_basis(n: int) -> np.ndarray:
    """Orthonormal basis of the complement of the all-ones vector."""
    q, _ = np.linalg.qr(np.column_stack([np.ones(n), np.eye(n)[:, : n - 1]]))
    return q[:, 1:]


def _sym(coefs, n) -> np.ndarray:
    """Symmetric ``A`` with ``<A, X>`` equal to the row's value on ``X``."""
    A = np.zeros((n, n))
    for (i, j), c in coefs.items():
        if i == j:
            A[i, i] += c
        else:
            A[i, j] += c / 2
            A[j, i] += c / 2
    return A


class _Space:
    """Variable space ``(svec Y, aux, slacks)``.

    A centering row (``sum_ij X_ij = 0``) forces ``X 1 = 0`` and puts every
    feasible point on a face of the cone, where alternating projections
    crawl; it is eliminated by writing ``X = V Y V^T`` with ``V`` spanning
    the complement of the ones vector.
    """

    def __init__(self, p: SdpProblem):
        n = p.n
        self.n = n
        rows = list(p.rows)
        centered = [r for r in rows if _is_centering(r, n)] if n >= 2 else []
        self.V = _centered_basis(n) if centered else np.eye(n)
        rows = [r for r in rows if r not in centered]
        r_dim = self.V.shape[1]
        self.r = r_dim
        self.iu = np.triu_indices(r_dim)
        self.n_x = len(self.iu[0])
        self.scale = np.where(self.iu[0] == self.iu[1], 1.0, 1.0 / SQRT2)
        # coefficient of svec(Y) entries for <A, V Y V^T>
        weight = np.where(self.iu[0] == self.iu[1], 1.0, 2.0) * self.scale

        def reduce(coefs):
            B = self.V.T @ _sym(coefs, n) @ self.V
            return B[self.iu] * weight

        n_ineq = sum(1 for r in rows if r.rel != "=")
        self.n_aux = p.n_aux
        self.n_slack = n_ineq
        self.N = self.n_x + self.n_aux + self.n_slack
        M = np.zeros((len(rows), self.N))
        b = np.zeros(len(rows))
        s = 0
        for r, row in enumerate(rows):
            M[r, : self.n_x] = reduce(row.x_coefs)
            for a, c in row.aux_coefs.items():
                M[r, self.n_x + a] += c
            if row.rel != "=":
                M[r, self.n_x + self.n_aux + s] = 1.0 if row.rel == "<=" else -1.0
                s += 1
            b[r] = row.rhs
        self.M, self.b = M, b
        self.Mp = np.linalg.pinv(M) if M.size else np.zeros((self.N, 0))
        c = np.zeros(self.N)
        c[: self.n_x] = reduce(p.objective_x)
        for a, v in p.objective_aux.items():
            c[self.n_x + a] += v
        self.c = -c if p.sense == MAX else c
        self.sign = -1.0 if p.sense == MAX else 1.0
        self._diag = np.array([k for k, (i, j) in enumerate(zip(*self.iu)) if i == j], dtype=int)

    def ymat(self, z):
        Y = np.zeros((self.r, self.r))
        v = z[: self.n_x] * self.scale
        Y[self.iu] = v
        Y[(self.iu[1], self.iu[0])] = v
        return Y

    def mat(self, z):
        return self.V @ self.ymat(z) @ self.V.T

    def svec(self, Y):
        return Y[self.iu] / self.scale

    def proj_affine(self, z):
        if not self.M.size:
            return z
        return z - self.Mp @ (self.M @ z - self.b)

    def proj_cone(self, z):
        out = z.copy()
        if self.r:
            dec = eigen_sym(self.ymat(z))
            lam = np.maximum(dec.eigenvalues, 0.0)
            X = (dec.eigenvectors * lam) @ dec.eigenvectors.T
            out[: self.n_x] = self.svec(0.5 * (X + X.T))
        out[self.n_x :] = np.maximum(out[self.n_x :], 0.0)
        return out

    def residual(self, z):
        return float(np.linalg.norm(z - self.proj_affine(z)))

    def trace(self, z):
        # V has orthonormal columns, so trace(X) = trace(Y)
        return float(z[self._diag].sum())


def _polish(sp: _Space, z, tol: float, max_nfev: int = 300):
    """Least-squares fit of the rows over ``Y = L L^T`` (plus nonnegative
    auxiliaries), for factors ``L`` of increasing rank taken from the top
    eigenpairs of ``z``. The result is PSD by construction."""
    dec = eigen_sym(sp.ymat(z))
    order = np.argsort(dec.eigenvalues)[::-1]
    F = (dec.eigenvectors * np.sqrt(np.maximum(dec.eigenvalues, 0.0)))[:, order]
    w0 = np.maximum(z[sp.n_x :], 0.0)
    r = sp.r
    Mx, Mw = sp.M[:, : sp.n_x], sp.M[:, sp.n_x :]
    B = [sp.ymat(row) for row in Mx]
    best, best_res = z, sp.residual(z)
    for rho in range(1, min(r, POLISH_MAX_RANK) + 1):

        def split(u, rho=rho):
            return u[: r * rho].reshape(r, rho), u[r * rho :]

        def fun(u):
            L, w = split(u)
            return Mx @ sp.svec(L @ L.T) + Mw @ w - sp.b

        def jac(u):
            L, _ = split(u)
            return np.hstack([np.array([(2.0 * Bi @ L).ravel() for Bi in B]).reshape(len(B), -1), Mw])

        lb = np.concatenate([np.full(r * rho, -np.inf), np.zeros(w0.size)])
        out = least_squares(fun, np.concatenate([F[:, :rho].ravel(), w0]), jac=jac, bounds=(lb, np.inf),
                            method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_nfev)
        L, w = split(out.x)
        cand = np.concatenate([sp.svec(L @ L.T), np.maximum(w, 0.0)])
        res = sp.residual(cand)
        if res < best_res:
            best, best_res = cand, res
        if res <= tol:
            break
    return best, best_res


def _project_intersection(sp: _Space, w, tol, max_iters, deadline):
    """Dykstra projection of ``w`` onto (affine set) ∩ (cone); returns the
    cone-side iterate and its distance to the affine set."""
    q = np.zeros_like(w)
    z = w
    res = np.inf
    for _ in range(max_iters):
        x = sp.proj_affine(z)
        z = sp.proj_cone(x + q)
        q = x + q - z
        res = sp.residual(z)
        if res <= tol or time.process_time() > deadline:
            break
    if res > tol:
        cand, cres = _polish(sp, z, tol, max_nfev=100)
        if cres < res:
            z, res = cand, cres
    return z, res


def solve_sdp(p: SdpProblem, cfg: SdpConfig | None = None) -> SdpResult:
    cfg = cfg or SdpConfig()
    if p.n > cfg.n_cap:
        raise SdpTooLargeError(f"SDP dimension {p.n} exceeds cap {cfg.n_cap}")
    deadline = time.process_time() + cfg.time_limit_s
    sp = _Space(p)
    # an inconsistent affine system is infeasible whatever the cone
    z_aff = sp.proj_affine(np.zeros(sp.N))
    if sp.M.size and np.linalg.norm(sp.M @ z_aff - sp.b) > cfg.tol * max(1.0, np.linalg.norm(sp.b)):
        return SdpResult(None, Status.INFEASIBLE, residual=float(np.linalg.norm(sp.M @ z_aff - sp.b)))

    # phase A: alternating projections
    trace: list[float] = []
    a = z_aff
    z = sp.proj_cone(a)
    res = sp.residual(z)
    trace.append(res)
    it = 0
    status = None
    while res > cfg.tol:
        if it >= cfg.max_iters:
            status = Status.NUMERIC_FAILURE
            break
        if time.process_time() > deadline:
            status = Status.TIME_LIMIT
            break
        it += 1
        a = sp.proj_affine(z)
        z = sp.proj_cone(a)
        res = sp.residual(z)
        trace.append(res)
        w = cfg.stall_window
        if it % w == 0:
            # projections crawl toward low-rank points: polish on the factor
            cand, cres = _polish(sp, z, cfg.tol)
            if cres <= cfg.tol:
                z, res = cand, cres
                trace.append(res)
                break
            if len(trace) > w and trace[-w - 1] - res <= 1e-8 * res:
                status = Status.INFEASIBLE
                break
    if status is not None:
        return SdpResult(None, status, residual=res, iterations=it, residual_trace=trace)

    # phase B: projected gradient on the objective with adaptive step
    def obj(v):
        return float(sp.c @ v)

    f = obj(z)
    cnorm = np.linalg.norm(sp.c)
    step = max(1.0, float(np.linalg.norm(z))) / max(cnorm, 1e-300) * 0.1
    status = Status.OPTIMAL
    if cnorm > 0:
        shrinks = 0
        for _ in range(cfg.objective_steps):
            if time.process_time() > deadline:
                status = Status.TIME_LIMIT
                break
            cand, cres = _project_intersection(sp, z - step * sp.c, cfg.tol, cfg.dykstra_iters, deadline)
            it += 1
            ok = cres <= cfg.tol and obj(cand) < f - 1e-12 * max(1.0, abs(f))
            if ok and p.trace_cap is not None and sp.trace(cand) > p.trace_cap:
                ok = False
            if ok:
                z, f, res = cand, obj(cand), cres
                step *= 1.5
                shrinks = 0
            else:
                step *= 0.5
                shrinks += 1
                if shrinks > 30:
                    break
    X = sp.mat(z)
    X = 0.5 * (X + X.T)
    aux = z[sp.n_x : sp.n_x + sp.n_aux].copy()
    return SdpResult(X, status, p.objective_value(X, aux), res, aux, it, trace)
