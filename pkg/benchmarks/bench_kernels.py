"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from geodesolve.instances import gen_euclidean
from geodesolve.kernels import BACKENDS


def cases(rng):
    for n in (10, 30, 60):
        a = rng.standard_normal((n, n))
        yield f"jacobi_eigh n={n}", "jacobi_eigh", (a + a.T,)
    for n in (50, 200):
        inst, _ = gen_euclidean(n, 0.3, seed=n)
        g = inst.graph
        x = rng.standard_normal((n, 3))
        tail, head = g.tail, g.head
        yield f"edge_diff_sq n={n} m={g.n_edges}", "edge_diff_sq", (x, tail, head)
        yield f"quartic_fg n={n} m={g.n_edges}", "quartic_fg", (x, tail, head, g.weights**2)


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(u, v) for u, v in zip(a, b))
    if np.isscalar(a):
        return abs(a - b) <= 1e-8 * max(1.0, abs(a))
    a, b = np.asarray(a), np.asarray(b)
    return a.shape == b.shape and np.allclose(a, b, rtol=1e-8, atol=1e-8)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if "cython" not in BACKENDS:
        print("compiled extension not available; only the fallback is timed")
    rng = np.random.default_rng(0)
    names = list(BACKENDS)
    print(f"{'case':34s}" + "".join(f"{b + ' ms':>14s}" for b in names) + ("   speedup" if len(names) > 1 else ""))
    for label, fn, fargs in cases(rng):
        times = {}
        outs = {}
        for b in names:
            f = getattr(BACKENDS[b], fn)
            outs[b] = f(*fargs)
            number = 3 if fn == "jacobi_eigh" else 50
            best = min(timeit.repeat(lambda: f(*fargs), number=number, repeat=args.repeat))
            times[b] = 1e3 * best / number
        line = f"{label:34s}" + "".join(f"{times[b]:14.3f}" for b in names)
        if len(names) > 1:
            agree = _eig_agree(outs) if fn == "jacobi_eigh" else _same(outs["python"], outs["cython"])
            line += f"   {times['python'] / times['cython']:7.1f}x" + ("" if agree else "  MISMATCH")
        print(line)


def _eig_agree(outs):
    # eigenvalues only: eigenvector signs may differ
    w1 = np.sort(outs["python"][0])
    w2 = np.sort(outs["cython"][0])
    return np.allclose(w1, w2, atol=1e-9)


if __name__ == "__main__":
    main()
