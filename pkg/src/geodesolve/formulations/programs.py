"""Solver-facing program containers: smooth (nonlinear), linear and SDP."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Mapping

import numpy as np
from scipy import sparse

from ..core import GeodesolveError, Graph

MIN, MAX = "min", "max"


class UnknownFormulationError(GeodesolveError, KeyError):
    pass


class StructurallyInfeasibleError(GeodesolveError, ValueError):
    pass


@dataclass(frozen=True)
class Block:
    """A vector-valued constraint function ``v -> (values, jacobian)``.

    Equality blocks mean ``values == 0``, inequality blocks ``values <= 0``.
    The jacobian is a ``(size, n_vars)`` scipy sparse matrix.
    """

    name: str
    size: int
    fn: Callable[[np.ndarray], tuple[np.ndarray, sparse.spmatrix]]

    def __call__(self, v):
        return self.fn(v)


@dataclass(frozen=True)
class SmoothProgram:
    name: str
    n_vars: int
    objective: Callable[[np.ndarray], tuple[float, np.ndarray]]
    sense: str
    eq: tuple[Block, ...]
    ineq: tuple[Block, ...]
    lower: np.ndarray
    upper: np.ndarray
    integral: np.ndarray
    layout: Mapping[str, tuple[slice, tuple[int, ...]]]
    n_points: int
    k: int
    graph: Graph | None = None
    # builds a full variable vector from coordinates (plus optional extras)
    assemble: Callable[..., np.ndarray] | None = None
    # builds a random starting vector from a numpy Generator
    sampler: Callable[[np.random.Generator], np.ndarray] | None = None
    meta: Mapping = field(default_factory=dict)

    @property
    def var_bounds(self) -> np.ndarray:
        return np.column_stack([self.lower, self.upper])

    @property
    def has_integers(self) -> bool:
        return bool(np.any(self.integral))

    def block(self, v: np.ndarray, name: str) -> np.ndarray:
        sl, shape = self.layout[name]
        return np.asarray(v)[sl].reshape(shape)

    def coords(self, v: np.ndarray) -> np.ndarray:
        return self.block(v, "x")

    def eq_values(self, v) -> np.ndarray:
        if not self.eq:
            return np.zeros(0)
        return np.concatenate([b(v)[0] for b in self.eq])

    def ineq_values(self, v) -> np.ndarray:
        if not self.ineq:
            return np.zeros(0)
        return np.concatenate([b(v)[0] for b in self.ineq])

    def max_violation(self, v) -> float:
        """Largest violation over constraints and variable bounds."""
        v = np.asarray(v, dtype=float)
        viol = 0.0
        c = self.eq_values(v)
        if c.size:
            viol = max(viol, float(np.max(np.abs(c))))
        g = self.ineq_values(v)
        if g.size:
            viol = max(viol, float(np.max(g)))
        viol = max(viol, float(np.max(self.lower - v, initial=0.0)), float(np.max(v - self.upper, initial=0.0)))
        return viol

    def value(self, v) -> float:
        return float(self.objective(np.asarray(v, dtype=float))[0])

    def fix(self, values: Mapping[int, float] | np.ndarray, mask: np.ndarray | None = None) -> "SmoothProgram":
        """Return a copy with selected variables fixed (bounds collapsed) and
        integrality marks on those variables cleared."""
        lo, hi, integral = self.lower.copy(), self.upper.copy(), self.integral.copy()
        if mask is not None:
            idx = np.flatnonzero(mask)
            vals = np.asarray(values, dtype=float)[idx]
        else:
            idx = np.fromiter(values.keys(), dtype=int)
            vals = np.fromiter(values.values(), dtype=float)
        lo[idx] = vals
        hi[idx] = vals
        integral[idx] = False
        return replace(self, lower=lo, upper=hi, integral=integral)


@dataclass(frozen=True)
class LinearProgram:
    """``sense c.x`` subject to ``A x (rel) b`` and ``lb <= x <= ub``.

    ``rel`` holds one of ``"<="``, ``"="``, ``">="`` per row.
    """

    c: np.ndarray
    A: np.ndarray
    rel: tuple[str, ...]
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integral: np.ndarray
    sense: str = MIN
    layout: Mapping[str, tuple[slice, tuple[int, ...]]] = field(default_factory=dict)
    meta: Mapping = field(default_factory=dict)

    @property
    def n_vars(self) -> int:
        return self.c.shape[0]

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    def block(self, x, name):
        sl, shape = self.layout[name]
        return np.asarray(x)[sl].reshape(shape)

    def objective_value(self, x) -> float:
        return float(self.c @ x)

    def row_violation(self, x) -> np.ndarray:
        ax = self.A @ x
        viol = np.zeros(self.n_rows)
        rel = np.array(self.rel)
        le, ge, eq = rel == "<=", rel == ">=", rel == "="
        viol[le] = np.maximum(ax[le] - self.b[le], 0.0)
        viol[ge] = np.maximum(self.b[ge] - ax[ge], 0.0)
        viol[eq] = np.abs(ax[eq] - self.b[eq])
        return viol

    def max_violation(self, x) -> float:
        x = np.asarray(x, dtype=float)
        v = float(np.max(self.row_violation(x), initial=0.0))
        v = max(v, float(np.max(self.lb - x, initial=0.0)), float(np.max(x - self.ub, initial=0.0)))
        return v


class LpBuilder:
    """Incremental assembly of a :class:`LinearProgram`."""

    def __init__(self):
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._int: list[bool] = []
        self._c: list[float] = []
        self.layout: dict[str, tuple[slice, tuple[int, ...]]] = {}
        self._rows: list[tuple[dict[int, float], str, float]] = []

    @property
    def n(self) -> int:
        return len(self._lb)

    def add_vars(self, name, shape, lb=-np.inf, ub=np.inf, integral=False) -> np.ndarray:
        shape = tuple(shape) if isinstance(shape, (tuple, list)) else (int(shape),)
        size = int(np.prod(shape))
        start = self.n
        self._lb += [lb] * size
        self._ub += [ub] * size
        self._int += [integral] * size
        self._c += [0.0] * size
        self.layout[name] = (slice(start, start + size), shape)
        return np.arange(start, start + size).reshape(shape)

    def set_cost(self, idx, coef):
        self._c[int(idx)] += coef

    def add_row(self, coefs: Mapping[int, float], rel: str, rhs: float):
        if rel not in ("<=", "=", ">="):
            raise ValueError(f"bad relation {rel!r}")
        row: dict[int, float] = {}
        for j, a in coefs.items():
            row[int(j)] = row.get(int(j), 0.0) + float(a)
        self._rows.append((row, rel, float(rhs)))

    def build(self, sense=MIN, meta=None) -> LinearProgram:
        A = np.zeros((len(self._rows), self.n))
        for i, (row, _, _) in enumerate(self._rows):
            for j, a in row.items():
                A[i, j] = a
        return LinearProgram(
            c=np.array(self._c, dtype=float),
            A=A,
            rel=tuple(r[1] for r in self._rows),
            b=np.array([r[2] for r in self._rows], dtype=float),
            lb=np.array(self._lb, dtype=float),
            ub=np.array(self._ub, dtype=float),
            integral=np.array(self._int, dtype=bool),
            sense=sense,
            layout=dict(self.layout),
            meta=dict(meta or {}),
        )


@dataclass(frozen=True)
class SdpRow:
    x_coefs: Mapping[tuple[int, int], float]  # (i, j) with i <= j, 0-based; coefficient of X_ij
    aux_coefs: Mapping[int, float]
    rel: str
    rhs: float


@dataclass(frozen=True)
class SdpProblem:
    """Linear objective and rows over a symmetric ``X`` (PSD) plus nonnegative
    auxiliaries."""

    n: int
    rows: tuple[SdpRow, ...]
    objective_x: Mapping[tuple[int, int], float]
    objective_aux: Mapping[int, float] = field(default_factory=dict)
    n_aux: int = 0
    sense: str = MIN
    psd: bool = True
    trace_cap: float | None = None
    meta: Mapping = field(default_factory=dict)

    def evaluate_rows(self, X, aux=None) -> np.ndarray:
        aux = np.zeros(self.n_aux) if aux is None else aux
        out = np.empty(len(self.rows))
        for r, row in enumerate(self.rows):
            val = sum(c * X[i, j] for (i, j), c in row.x_coefs.items())
            val += sum(c * aux[a] for a, c in row.aux_coefs.items())
            out[r] = val - row.rhs
        return out

    def objective_value(self, X, aux=None) -> float:
        aux = np.zeros(self.n_aux) if aux is None else aux
        val = sum(c * X[i, j] for (i, j), c in self.objective_x.items())
        return float(val + sum(c * aux[a] for a, c in self.objective_aux.items()))
