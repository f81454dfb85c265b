"""Fundamental cycle bases."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from ..core import Graph


@dataclass(frozen=True)
class CycleBasis:
    """Each cycle is a tuple of ``(edge_index, sign)``; ``sign`` is +1 when the
    closed walk traverses edge ``(u, v)``, ``u < v``, from ``u`` to ``v``."""

    cycles: tuple[tuple[tuple[int, int], ...], ...]

    def __len__(self):
        return len(self.cycles)

    def signed_incidence(self, g: Graph) -> np.ndarray:
        """Vertex incidence of every cycle, shape ``(n_cycles, n_vertices)``."""
        out = np.zeros((len(self.cycles), g.n_vertices))
        for c, cyc in enumerate(self.cycles):
            for e, s in cyc:
                u, v, _ = g.edges[e]
                out[c, u - 1] += s
                out[c, v - 1] -= s
        return out

    def matrix(self, n_edges: int) -> np.ndarray:
        """Signed cycle-edge matrix ``(n_cycles, n_edges)``."""
        out = np.zeros((len(self.cycles), n_edges))
        for c, cyc in enumerate(self.cycles):
            for e, s in cyc:
                out[c, e] += s
        return out


def fundamental_cycle_basis(g: Graph) -> CycleBasis:
    """One cycle per non-tree edge of a BFS spanning forest (``m - n + c`` cycles)."""
    n = g.n_vertices
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for idx, (u, v, _) in enumerate(g.edges):
        adj[u - 1].append((v - 1, idx))
        adj[v - 1].append((u - 1, idx))
    parent = [-1] * n
    parent_edge = [-1] * n
    depth = [-1] * n
    tree = set()
    for root in range(n):
        if depth[root] >= 0:
            continue
        depth[root] = 0
        queue = deque([root])
        while queue:
            a = queue.popleft()
            for b, idx in sorted(adj[a]):
                if depth[b] < 0:
                    depth[b] = depth[a] + 1
                    parent[b] = a
                    parent_edge[b] = idx
                    tree.add(idx)
                    queue.append(b)

    def step(a: int, b: int, idx: int) -> tuple[int, int]:
        # traversal a -> b along edge idx
        return idx, (1 if a < b else -1)

    cycles = []
    for idx, (u, v, _) in enumerate(g.edges):
        if idx in tree:
            continue
        a, b = u - 1, v - 1
        up: list[tuple[int, int]] = []  # walk from a upwards
        down: list[tuple[int, int]] = []  # walk from b upwards, reversed later
        while a != b:
            if depth[a] >= depth[b]:
                up.append(step(a, parent[a], parent_edge[a]))
                a = parent[a]
            else:
                down.append(step(parent[b], b, parent_edge[b]))
                b = parent[b]
        # closed walk: u -> lca -> v -> u
        walk = up + down[::-1] + [step(v - 1, u - 1, idx)]
        cycles.append(tuple(walk))
    return CycleBasis(tuple(cycles))
