"""Realization errors and a label-independent graph similarity."""
from __future__ import annotations

import numpy as np

from . import kernels
from .core import Graph, Realization
from .linalg import laplacian_spectrum

ISO_NODE_BUDGET = 200_000


def _residuals(x, g: Graph) -> np.ndarray:
    coords = x.coords if isinstance(x, Realization) else np.asarray(x, dtype=float)
    if coords.ndim == 1:
        coords = coords.reshape(-1, 1)
    if coords.shape[0] != g.n_vertices:
        raise ValueError(f"realization has {coords.shape[0]} rows, graph has {g.n_vertices} vertices")
    if g.n_edges == 0:
        return np.zeros(0)
    _, sq = kernels.edge_diff_sq(coords, g.tail, g.head)
    return np.abs(sq - g.weights**2)


def mde(x, g: Graph, normalize: bool = False) -> float:
    """Sum over edges of ``| ||x_u - x_v||^2 - d_uv^2 |`` (divided by ``|E|`` if
    ``normalize``)."""
    r = _residuals(x, g)
    total = float(r.sum())
    return total / len(r) if normalize and len(r) else total


def lde(x, g: Graph) -> float:
    """Largest single-edge squared-distance error."""
    r = _residuals(x, g)
    return float(r.max()) if r.size else 0.0


def degree_sequence(g: Graph) -> list[int]:
    return sorted(len(s) for s in g.neighbors())


def triangle_sequence(g: Graph) -> list[int]:
    nb = g.neighbors()
    counts = []
    for v in range(g.n_vertices):
        ws = sorted(nb[v])
        c = sum(1 for i, a in enumerate(ws) for b in ws[i + 1 :] if b in nb[a])
        counts.append(c)
    return sorted(counts)


def _max_clique_size(cands: set[int], nb: list[set[int]]) -> int:
    best = 0

    def expand(size: int, p: set[int]):
        nonlocal best
        if not p:
            best = max(best, size)
            return
        if size + len(p) <= best:
            return
        pivot = max(p, key=lambda u: len(nb[u] & p))
        for u in sorted(p - nb[pivot]):
            expand(size + 1, p & nb[u])
            p = p - {u}
            if size + len(p) <= best:
                return

    expand(0, set(cands))
    return best


def clique_sequence(g: Graph) -> list[int]:
    """Sorted per-vertex size of the largest clique containing the vertex."""
    nb = g.neighbors()
    return sorted(1 + _max_clique_size(nb[v], nb) for v in range(g.n_vertices))


def is_isomorphic(g: Graph, h: Graph, budget: int = ISO_NODE_BUDGET) -> bool | None:
    """Exact unlabeled isomorphism test by backtracking with degree pruning.

    Returns ``None`` when the search exceeds ``budget`` nodes.
    """
    n = g.n_vertices
    if n != h.n_vertices or g.n_edges != h.n_edges:
        return False
    ng, nh = g.neighbors(), h.neighbors()
    dg = [len(s) for s in ng]
    dh = [len(s) for s in nh]
    if sorted(dg) != sorted(dh):
        return False
    # refine by neighbour-degree multisets
    sig_g = [(dg[v], tuple(sorted(dg[u] for u in ng[v]))) for v in range(n)]
    sig_h = [(dh[v], tuple(sorted(dh[u] for u in nh[v]))) for v in range(n)]
    if sorted(sig_g) != sorted(sig_h):
        return False
    # visit g's vertices so each one (after the first) touches earlier ones
    order: list[int] = []
    seen = set()
    for root in sorted(range(n), key=lambda v: -dg[v]):
        if root in seen:
            continue
        stack = [root]
        seen.add(root)
        while stack:
            v = stack.pop(0)
            order.append(v)
            for u in sorted(ng[v], key=lambda w: -dg[w]):
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
    mapping: dict[int, int] = {}
    used: set[int] = set()
    nodes = 0

    def extend(depth: int) -> bool | None:
        nonlocal nodes
        if depth == n:
            return True
        v = order[depth]
        mapped_nb = [u for u in ng[v] if u in mapping]
        if mapped_nb:
            cands = set(nh[mapping[mapped_nb[0]]]) - used
        else:
            cands = set(range(n)) - used
        for w in sorted(cands):
            if sig_h[w] != sig_g[v]:
                continue
            ok = all((mapping[u] in nh[w]) == (u in ng[v]) for u in mapping)
            if not ok:
                continue
            nodes += 1
            if nodes > budget:
                return None
            mapping[v] = w
            used.add(w)
            r = extend(depth + 1)
            if r is None or r:
                return r
            del mapping[v]
            used.discard(w)
        return False

    return extend(0)


def normalized_adjacency(g: Graph) -> np.ndarray:
    a = g.adjacency()
    nrm = np.linalg.norm(a)
    return a / nrm if nrm > 0 else a


def spectral_similarity(g: Graph, h: Graph) -> float:
    n = max(g.n_vertices, h.n_vertices)
    sg = np.zeros(n)
    sh = np.zeros(n)
    sg[: g.n_vertices] = laplacian_spectrum(g)
    sh[: h.n_vertices] = laplacian_spectrum(h)
    ng, nh = np.linalg.norm(sg), np.linalg.norm(sh)
    if ng == 0 and nh == 0:
        return 1.0
    if ng == 0 or nh == 0:
        return 0.0
    return float(np.dot(sg / ng, sh / nh))


def gphsim_stages(g: Graph, h: Graph, budget: int = ISO_NODE_BUDGET) -> int:
    """Number of nested matching stages passed (degree, triangle, clique, isomorphism)."""
    if degree_sequence(g) != degree_sequence(h):
        return 0
    if triangle_sequence(g) != triangle_sequence(h):
        return 1
    if clique_sequence(g) != clique_sequence(h):
        return 2
    return 4 if is_isomorphic(g, h, budget) else 3


def gphsim(g: Graph, h: Graph, budget: int = ISO_NODE_BUDGET) -> float:
    """Similarity in ``[-1, 1]``; 1 for isomorphic graphs.

    Equal orders use the staged topological score (blended with the overlap
    of normalized adjacency matrices when not isomorphic); different orders
    compare zero-padded Laplacian spectra.
    """
    if g.n_vertices != h.n_vertices:
        return spectral_similarity(g, h)
    score = gphsim_stages(g, h, budget) / 4.0
    if score < 1.0:
        score = 0.5 * score + 0.5 * float(np.sum(normalized_adjacency(g) * normalized_adjacency(h)))
    return score
