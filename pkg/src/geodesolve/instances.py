"""Instance generators and JSON / coordinate-file I/O."""
from __future__ import annotations

import itertools
import json
import math
from pathlib import Path
from typing import Callable

import numpy as np

from .core import (
    Assignment,
    DgpInstance,
    Graph,
    InvalidInstanceError,
    Realization,
    SolveReport,
    UdgpInstance,
)

EUCLIDEAN_BOX = 10.0
WEIGHT_RANGE = (1.0, 10.0)


class UnknownGraphTypeError(InvalidInstanceError, KeyError):
    pass


class MalformedFileError(InvalidInstanceError):
    pass


def _pairs(n):
    return itertools.combinations(range(n), 2)


def gen_euclidean(n: int, p: float, seed: int = 0, k: int = 2) -> tuple[DgpInstance, Realization]:
    """Planted points in a box of side 10, a random Hamiltonian cycle plus
    Erdős–Rényi(p) chords, weighted by Euclidean distance."""
    if n < 3:
        raise InvalidInstanceError("gen_euclidean needs n >= 3")
    if not 0 < p <= 1:
        raise InvalidInstanceError("p must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.0, EUCLIDEAN_BOX, size=(n, k))
    tour = rng.permutation(n)
    edges = {tuple(sorted((int(tour[i]), int(tour[(i + 1) % n])))) for i in range(n)}
    for u, v in _pairs(n):
        if (u, v) not in edges and rng.random() < p:
            edges.add((u, v))
    weighted = [(u + 1, v + 1, float(np.linalg.norm(pts[u] - pts[v]))) for u, v in sorted(edges)]
    return DgpInstance(k, Graph(n, weighted)), Realization(pts)


# topology builders: (rng, **params) -> (n_vertices, edge list 0-based, planted points or None)


def _almostreg(rng, n=10, k=3):
    deg = np.zeros(n, dtype=int)
    edges = []
    pairs = list(_pairs(n))
    for idx in rng.permutation(len(pairs)):
        u, v = pairs[idx]
        if deg[u] < k and deg[v] < k:
            edges.append((u, v))
            deg[u] += 1
            deg[v] += 1
    return n, edges, None


def _random(rng, n=10, p=0.5):
    return n, [(u, v) for u, v in _pairs(n) if rng.random() < p], None


def _multipartite(rng, parts, n, p):
    label = np.repeat(np.arange(parts), n)
    N = parts * n
    return N, [(u, v) for u, v in _pairs(N) if label[u] != label[v] and rng.random() < p], None


def _bipartite(rng, n=5, p=0.5):
    return _multipartite(rng, 2, n, p)


def _tripartite(rng, n=4, p=0.5):
    return _multipartite(rng, 3, n, p)


def _grid_id(n, i, j):
    return i * n + j


def _mesh(rng, n=4):
    edges = []
    for i in range(n):
        for j in range(n):
            if i + 1 < n:
                edges.append((_grid_id(n, i, j), _grid_id(n, i + 1, j)))
            if j + 1 < n:
                edges.append((_grid_id(n, i, j), _grid_id(n, i, j + 1)))
    return n * n, edges, None


def _torus(rng, n=4):
    if n < 3:
        raise InvalidInstanceError("torus needs n >= 3")
    edges = set()
    for i in range(n):
        for j in range(n):
            a = _grid_id(n, i, j)
            for b in (_grid_id(n, (i + 1) % n, j), _grid_id(n, i, (j + 1) % n)):
                edges.add((min(a, b), max(a, b)))
    return n * n, sorted(edges), None


def _triangle(rng, n=4):
    ids = {}
    for i in range(n):
        for j in range(n - i):
            ids[(i, j)] = len(ids)
    edges = []
    for (i, j), a in ids.items():
        for di, dj in ((1, 0), (0, 1), (1, -1)):
            b = ids.get((i + di, j + dj))
            if b is not None:
                edges.append((min(a, b), max(a, b)))
    return len(ids), sorted(set(edges)), None


def _cluster(rng, n=12, k=3, p=0.8, q=0.1):
    label = np.arange(n) % k
    edges = [(u, v) for u, v in _pairs(n) if rng.random() < (p if label[u] == label[v] else q)]
    return n, edges, None


def _powerlaw(rng, n=12, alpha=0.5, tau=1.0):
    if not 0 < alpha < 1 or tau <= 0:
        raise InvalidInstanceError("powerlaw needs alpha in (0,1) and tau > 0")
    target = np.array([min(n - 1, max(1, math.ceil(n * alpha * i ** (-tau)))) for i in range(1, n + 1)])
    deg = np.zeros(n, dtype=int)
    adj = set()
    for u in range(n):
        others = [v for v in rng.permutation(n) if v != u]
        for v in others:
            if deg[u] >= target[u]:
                break
            key = (min(u, v), max(u, v))
            if key in adj or deg[v] >= target[v]:
                continue
            adj.add(key)
            deg[u] += 1
            deg[v] += 1
    return n, sorted(adj), None


def _cliquechain(rng, n=10, k=4):
    if k < 2:
        raise InvalidInstanceError("cliquechain needs k >= 2")
    edges = set()
    start = 0
    while start < n - 1:
        members = list(range(start, min(start + k, n)))
        for a, b in itertools.combinations(members, 2):
            edges.add((a, b))
        start = members[-1]
    return n, sorted(edges), None


def _trichain(rng, n=7):
    # triangles sharing one vertex; an even n closes with a triangle on the last edge
    edges = set()
    v = 0
    while v + 2 < n:
        edges |= {(v, v + 1), (v + 1, v + 2), (v, v + 2)}
        v += 2
    if v + 1 < n:
        edges |= {(v, v + 1), (v - 1, v + 1)}
    return n, sorted(edges), None


def _dmdgp(rng, n=10, k=3):
    return n, [(u, v) for v in range(n) for u in range(max(0, v - k), v)], None


def _beeker_glusa(rng, n=7):
    n_, edges, _ = _trichain(rng, n)
    # flat triangles whose sides double along the chain
    pts = np.zeros((n_, 2))
    for v in range(1, n_):
        pts[v, 0] = pts[v - 1, 0] + 2.0 ** ((v - 1) // 2)
    return n_, edges, pts


def _local(rng, n=12, t=4.0):
    pts = rng.uniform(0.0, EUCLIDEAN_BOX, size=(n, 2))
    edges = [(u, v) for u, v in _pairs(n) if np.linalg.norm(pts[u] - pts[v]) < t]
    return n, edges, pts


def _norm(rng, n=10, p=0.5, norm="l1"):
    if norm not in ("l1", "linf"):
        raise InvalidInstanceError("norm must be 'l1' or 'linf'")
    pts = rng.uniform(0.0, EUCLIDEAN_BOX, size=(n, 2))
    edges = [(u, v) for u, v in _pairs(n) if rng.random() < p]
    return n, edges, pts


GRAPH_TYPES: dict[str, Callable] = {
    "almostreg": _almostreg,
    "random": _random,
    "bipartite": _bipartite,
    "tripartite": _tripartite,
    "mesh": _mesh,
    "torus": _torus,
    "triangle": _triangle,
    "cluster": _cluster,
    "powerlaw": _powerlaw,
    "cliquechain": _cliquechain,
    "trichain": _trichain,
    "dmdgp": _dmdgp,
    "beeker_glusa": _beeker_glusa,
    "local": _local,
    "norm": _norm,
}
ALWAYS_WEIGHTED = {"beeker_glusa", "local", "norm"}


def gen_graph_type(kind: str, params: dict | None = None, weighted: bool = False, seed: int = 0, k: int = 2) -> DgpInstance:
    """Graph of the named topology. Metric types (``local``, ``norm``,
    ``beeker_glusa``) are weighted by point distances; the others get
    U(1, 10) weights when ``weighted`` and unit weights otherwise."""
    if kind not in GRAPH_TYPES:
        raise UnknownGraphTypeError(f"unknown graph type {kind!r}")
    params = dict(params or {})
    rng = np.random.default_rng(seed)
    n, edges, pts = GRAPH_TYPES[kind](rng, **params)
    if kind in ALWAYS_WEIGHTED:
        ord_ = {"l1": 1, "linf": np.inf}.get(params.get("norm", "l2"), 2) if kind == "norm" else 2
        w = [float(np.linalg.norm(pts[u] - pts[v], ord=ord_)) for u, v in edges]
    elif weighted:
        w = [float(x) for x in rng.uniform(*WEIGHT_RANGE, size=len(edges))]
    else:
        w = [1.0] * len(edges)
    return DgpInstance(k, Graph(n, [(u + 1, v + 1, d) for (u, v), d in zip(edges, w)]))


def read_coordinates(path) -> np.ndarray:
    """Whitespace-separated reals, one point per line, optional leading label."""
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        tok = line.split()
        if not tok or tok[0].startswith("#"):
            continue
        try:
            float(tok[0])
        except ValueError:
            tok = tok[1:]
        try:
            rows.append([float(t) for t in tok])
        except ValueError as exc:
            raise MalformedFileError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise MalformedFileError(f"{path}: no coordinates")
    dims = {len(r) for r in rows}
    if len(dims) != 1 or 0 in dims:
        raise MalformedFileError(f"{path}: rows have differing dimensions {sorted(dims)}")
    return np.array(rows)


def gen_disk_graph(coords, radius: float, k: int = 3) -> DgpInstance:
    """Pairs within ``radius`` become edges weighted by their distance; isolated
    points are kept as vertices."""
    if radius <= 0:
        raise InvalidInstanceError("radius must be positive")
    pts = read_coordinates(coords) if isinstance(coords, (str, Path)) else np.asarray(coords, dtype=float)
    n = pts.shape[0]
    edges = []
    for u, v in _pairs(n):
        d = float(np.linalg.norm(pts[u] - pts[v]))
        if 0 < d <= radius:
            edges.append((u + 1, v + 1, d))
    return DgpInstance(k, Graph(n, edges))


def instance_to_dict(inst) -> dict:
    if isinstance(inst, DgpInstance):
        return {"k": inst.k, "n": inst.n, "edges": [[u, v, d] for u, v, d in inst.graph.edges]}
    if isinstance(inst, UdgpInstance):
        return {"k": inst.k, "n": inst.n_points, "distances": list(inst.distances)}
    raise TypeError(f"not an instance: {type(inst).__name__}")


def instance_from_dict(data: dict):
    try:
        if "edges" in data:
            return DgpInstance(int(data["k"]), Graph(int(data["n"]), data["edges"]))
        if "distances" in data:
            return UdgpInstance(int(data["k"]), int(data["n"]), data["distances"])
    except (KeyError, TypeError, IndexError) as exc:
        raise MalformedFileError(f"bad instance record: {exc}") from None
    raise MalformedFileError("instance needs either 'edges' or 'distances'")


def save_instance(inst, path):
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=1) + "\n")


def load_instance(path):
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise MalformedFileError(f"{path}: {exc}") from None
    return instance_from_dict(data)


def _num(x):
    return None if x is None or (isinstance(x, float) and not math.isfinite(x)) else float(x)


def solution_to_dict(rep: SolveReport, extra: dict | None = None) -> dict:
    """Timing-free solution record, so repeated runs serialize identically."""
    out = {
        "status": str(rep.status),
        "coords": rep.realization.coords.tolist() if rep.realization is not None else None,
        "objective": _num(rep.objective),
        "mde": _num(rep.mde),
        "lde": _num(rep.lde),
    }
    if rep.assignment is not None:
        out["assignment"] = [list(p) for p in rep.assignment.pairs]
    if extra:
        out.update(extra)
    return out


def save_solution(rep: SolveReport, path, extra: dict | None = None):
    Path(path).write_text(json.dumps(solution_to_dict(rep, extra), indent=1, sort_keys=True) + "\n")


def load_solution(path) -> tuple[Realization | None, Assignment | None, dict]:
    data = json.loads(Path(path).read_text())
    real = Realization(data["coords"]) if data.get("coords") else None
    a = Assignment(data["assignment"]) if data.get("assignment") else None
    return real, a, data
