"""Domain types shared by every module: graphs, instances, realizations,
assignments and solve reports.

Vertex ids are 1-based everywhere in the public API. Edges are stored with
``u < v`` so an unordered pair has exactly one representation.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np


class GeodesolveError(Exception):
    """Base class for errors raised by this package."""


class InvalidInstanceError(GeodesolveError, ValueError):
    pass


class InvalidAssignmentError(GeodesolveError, ValueError):
    pass


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    FEASIBLE_POINT = "FeasiblePoint"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    TIME_LIMIT = "TimeLimit"
    NUMERIC_FAILURE = "NumericFailure"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Graph:
    """Simple undirected edge-weighted graph on vertices ``1..n_vertices``."""

    n_vertices: int
    edges: tuple[tuple[int, int, float], ...]

    def __init__(self, n_vertices: int, edges: Iterable[Sequence] = ()):
        n_vertices = int(n_vertices)
        if n_vertices < 1:
            raise InvalidInstanceError(f"n_vertices must be positive, got {n_vertices}")
        norm = []
        seen = set()
        for e in edges:
            u, v, d = int(e[0]), int(e[1]), float(e[2])
            if u == v:
                raise InvalidInstanceError(f"self loop on vertex {u}")
            if u > v:
                u, v = v, u
            if u < 1 or v > n_vertices:
                raise InvalidInstanceError(f"edge ({u},{v}) outside 1..{n_vertices}")
            if not np.isfinite(d) or d <= 0:
                raise InvalidInstanceError(f"edge ({u},{v}) has non-positive weight {d}")
            if (u, v) in seen:
                raise InvalidInstanceError(f"duplicate edge ({u},{v})")
            seen.add((u, v))
            norm.append((u, v, d))
        object.__setattr__(self, "n_vertices", n_vertices)
        object.__setattr__(self, "edges", tuple(norm))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def tail(self) -> np.ndarray:
        """0-based first endpoints as an int array."""
        a = np.array([e[0] - 1 for e in self.edges], dtype=np.intp)
        a.flags.writeable = False
        return a

    @cached_property
    def head(self) -> np.ndarray:
        a = np.array([e[1] - 1 for e in self.edges], dtype=np.intp)
        a.flags.writeable = False
        return a

    @cached_property
    def weights(self) -> np.ndarray:
        a = np.array([e[2] for e in self.edges], dtype=float)
        a.flags.writeable = False
        return a

    def adjacency(self, weighted: bool = False) -> np.ndarray:
        a = np.zeros((self.n_vertices, self.n_vertices))
        if self.edges:
            a[self.tail, self.head] = self.weights if weighted else 1.0
            a[self.head, self.tail] = self.weights if weighted else 1.0
        return a

    def neighbors(self) -> list[set[int]]:
        """0-based neighbour sets."""
        nb: list[set[int]] = [set() for _ in range(self.n_vertices)]
        for u, v, _ in self.edges:
            nb[u - 1].add(v - 1)
            nb[v - 1].add(u - 1)
        return nb

    def edge_key_set(self) -> frozenset:
        return frozenset((u, v, d) for u, v, d in self.edges)

    def density(self) -> float:
        n = self.n_vertices
        return self.n_edges / (n * (n - 1) / 2) if n > 1 else 0.0

    def n_components(self) -> int:
        parent = list(range(self.n_vertices))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for u, v, _ in self.edges:
            ru, rv = find(u - 1), find(v - 1)
            if ru != rv:
                parent[ru] = rv
        return len({find(i) for i in range(self.n_vertices)})

    def relabel(self, perm: Sequence[int]) -> "Graph":
        """Return the graph with vertex ``i`` renamed ``perm[i-1]`` (1-based)."""
        return Graph(self.n_vertices, [(perm[u - 1], perm[v - 1], d) for u, v, d in self.edges])


@dataclass(frozen=True)
class DgpInstance:
    k: int
    graph: Graph

    def __post_init__(self):
        if int(self.k) < 1:
            raise InvalidInstanceError(f"dimension must be >= 1, got {self.k}")

    @property
    def n(self) -> int:
        return self.graph.n_vertices


@dataclass(frozen=True)
class UdgpInstance:
    k: int
    n_points: int
    distances: tuple[float, ...]

    def __init__(self, k: int, n_points: int, distances: Iterable[float]):
        dist = tuple(float(d) for d in distances)
        if int(k) < 1:
            raise InvalidInstanceError(f"dimension must be >= 1, got {k}")
        if int(n_points) < 1:
            raise InvalidInstanceError(f"n_points must be positive, got {n_points}")
        if any(not np.isfinite(d) or d <= 0 for d in dist):
            raise InvalidInstanceError("distances must be positive and finite")
        object.__setattr__(self, "k", int(k))
        object.__setattr__(self, "n_points", int(n_points))
        object.__setattr__(self, "distances", dist)

    @property
    def m(self) -> int:
        return len(self.distances)

    @property
    def n_pairs(self) -> int:
        return self.n_points * (self.n_points - 1) // 2

    def pairs(self) -> list[tuple[int, int]]:
        """All unordered pairs ``(i, j)``, ``i < j``, in lexicographic order (1-based)."""
        n = self.n_points
        return [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]


@dataclass(frozen=True)
class Realization:
    coords: np.ndarray

    def __init__(self, coords):
        a = np.array(coords, dtype=float)
        if a.ndim == 1:
            a = a.reshape(-1, 1)
        if a.ndim != 2:
            raise ValueError("coords must be an n x K matrix")
        if not np.all(np.isfinite(a)):
            raise ValueError("realization has non-finite entries")
        a.flags.writeable = False
        object.__setattr__(self, "coords", a)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def k(self) -> int:
        return self.coords.shape[1]

    def __eq__(self, other):
        return isinstance(other, Realization) and np.array_equal(self.coords, other.coords)

    def __hash__(self):
        return hash(self.coords.tobytes())


@dataclass(frozen=True)
class Assignment:
    """Injective map from distance index ``l`` (0-based position) to a vertex pair."""

    pairs: tuple[tuple[int, int], ...]

    def __init__(self, pairs: Iterable[Sequence[int]]):
        norm = []
        for p in pairs:
            i, j = int(p[0]), int(p[1])
            if i == j:
                raise InvalidAssignmentError(f"pair ({i},{j}) is not a pair of distinct points")
            norm.append((min(i, j), max(i, j)))
        if len(set(norm)) != len(norm):
            raise InvalidAssignmentError("assignment is not injective (duplicate pair)")
        object.__setattr__(self, "pairs", tuple(norm))

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass
class SolveReport:
    realization: Realization | None
    status: Status
    objective: float = float("nan")
    mde: float = float("nan")
    lde: float = float("nan")
    cpu_seconds: float = 0.0
    assignment: Assignment | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.status is Status.INFEASIBLE:
            self.realization = None

    @property
    def found(self) -> bool:
        return self.realization is not None


def reconstruct_graph(inst: UdgpInstance, a: Assignment) -> Graph:
    """Graph whose edge ``alpha(l)`` is weighted by the ``l``-th distance."""
    if not isinstance(a, Assignment):
        a = Assignment(a)
    if len(a) != inst.m:
        raise InvalidAssignmentError(f"assignment has {len(a)} pairs for {inst.m} distances")
    for i, j in a.pairs:
        if i < 1 or j > inst.n_points:
            raise InvalidAssignmentError(f"pair ({i},{j}) outside 1..{inst.n_points}")
    return Graph(inst.n_points, [(i, j, d) for (i, j), d in zip(a.pairs, inst.distances)])


def derive_udgp(inst: DgpInstance) -> UdgpInstance:
    """Drop the graph, keep ``K``, ``|V|`` and the edge weights in (u, v) order."""
    edges = sorted(inst.graph.edges)
    return UdgpInstance(inst.k, inst.graph.n_vertices, [d for _, _, d in edges])


def order_assignment(g: Graph) -> Assignment:
    """The assignment induced by the lexicographic edge order used in :func:`derive_udgp`."""
    return Assignment([(u, v) for u, v, _ in sorted(g.edges)])
