"""Command-line entry point: generate, solve, usolve, oracle, bench, report."""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .bench import GROUP_BY, METRICS, BenchConfig, default_jobs, pipeline_config, report, run_bench
from .core import DgpInstance, GeodesolveError, UdgpInstance, derive_udgp, reconstruct_graph
from .formulations import UDGP_ALIASES, UDGP_SMOOTH_KINDS, build_dgp, build_udgp_smooth
from .instances import (
    GRAPH_TYPES,
    gen_disk_graph,
    gen_euclidean,
    gen_graph_type,
    load_instance,
    save_instance,
    solution_to_dict,
)
from .metrics import gphsim
from .nlp import multistart
from .pipelines import dgp_pipeline, udgp_bruteforce_oracle, udgp_pipeline


def _param(text: str):
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    for conv in (int, float):
        try:
            return key, conv(value)
        except ValueError:
            pass
    return key, value


def _write_solution(rep, out, extra=None):
    text = json.dumps(solution_to_dict(rep, extra), indent=1, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _report_line(rep, extra: str = "") -> str:
    return f"status={rep.status} objective={rep.objective!r} mde={rep.mde!r} lde={rep.lde!r} cpu={rep.cpu_seconds:.3f}{extra}"


def _load(path, want):
    inst = load_instance(path)
    if want is UdgpInstance and isinstance(inst, DgpInstance):
        return derive_udgp(inst)
    if not isinstance(inst, want):
        raise GeodesolveError(f"{path} is not a {want.__name__}")
    return inst


def cmd_generate(a):
    out = Path(a.out)
    insts = []
    for i in range(a.count):
        seed = a.seed + i
        if a.family == "euclid":
            inst, _ = gen_euclidean(a.n, a.p, seed, a.k)
            name = f"euclid-n{a.n}-s{seed}"
        elif a.family == "gtype":
            inst = gen_graph_type(a.type, dict(a.param), a.weighted, seed, a.k)
            name = f"{a.type}-s{seed}"
        else:
            if not a.coords:
                raise GeodesolveError("--coords is required for the disk family")
            inst = gen_disk_graph(a.coords, a.radius, a.k)
            name = f"disk-{Path(a.coords).stem}"
        if a.udgp:
            inst = derive_udgp(inst)
        insts.append((name, inst))
    if len(insts) == 1 and out.suffix == ".json":
        out.parent.mkdir(parents=True, exist_ok=True)
        save_instance(insts[0][1], out)
        print(out)
        return
    out.mkdir(parents=True, exist_ok=True)
    for name, inst in insts:
        save_instance(inst, out / f"{name}.json")
        print(out / f"{name}.json")


def _cfg(a):
    return pipeline_config(a.time_limit, a.seed, a.restarts)


def cmd_solve(a):
    inst = _load(a.instance, DgpInstance)
    cfg = _cfg(a)
    if a.relax:
        rep = dgp_pipeline(inst, a.relax, a.refine or a.formulation, cfg)
    else:
        rep = multistart(build_dgp(a.formulation, inst), cfg.solver)
    _write_solution(rep, a.out)
    print(_report_line(rep), file=sys.stderr if not a.out else sys.stdout)


def cmd_usolve(a):
    inst = _load(a.instance, UdgpInstance)
    cfg = _cfg(a)
    ref = _load(a.reference, DgpInstance).graph if a.reference else None
    if a.formulation and (a.formulation in UDGP_SMOOTH_KINDS or a.formulation in UDGP_ALIASES):
        prog = build_udgp_smooth(a.formulation, inst)
        if prog.has_integers:
            raise GeodesolveError(f"{a.formulation} has binary variables; use uquartic_cont or the --cone route")
        rep = multistart(prog, cfg.solver)
        sim = gphsim(ref, reconstruct_graph(inst, rep.assignment)) if ref is not None and rep.assignment else None
    else:
        rep = udgp_pipeline(inst, a.cone, a.refine, cfg, reference=ref)
        sim = rep.extras.get("gphsim")
    extra = {"gphsim": sim} if sim is not None else None
    _write_solution(rep, a.out, extra)
    tail = f" gphsim={sim!r}" if sim is not None else ""
    print(_report_line(rep, tail), file=sys.stderr if not a.out else sys.stdout)


def cmd_oracle(a):
    inst = _load(a.instance, UdgpInstance)
    cfg = replace(_cfg(a), oracle_cap=a.cap, jobs=a.jobs)
    res = udgp_bruteforce_oracle(inst, cfg, a.kind)
    if res.report is None:
        raise GeodesolveError("no assignment could be realized")
    extra = {"distinct_graphs": res.distinct_graphs, "assignments": len(res.table)}
    _write_solution(res.report, a.out, extra)
    print(_report_line(res.report, f" distinct_graphs={res.distinct_graphs}"), file=sys.stderr if not a.out else sys.stdout)


def cmd_bench(a):
    cfg = BenchConfig.load(a.config)
    n = run_bench(cfg, jobs=a.jobs, csv_path=a.out, log=lambda s: print(s, flush=True))
    print(f"{n} new rows -> {a.out or cfg.output}")


def cmd_report(a):
    agg = report(a.csv, a.group_by, a.out_csv, a.out_svg, a.metric, a.scale)
    for rec in agg:
        vals = " ".join(f"{m}={rec[m]!r}" for m in METRICS)
        print(f"{rec['group']} {rec['formulation']} rows={rec['rows']} {vals}")


def _solver_flags(p):
    p.add_argument("--time-limit", type=float, default=60.0, help="CPU seconds")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--out", help="solution JSON path (stdout when omitted)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="geodesolve", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("generate", help="write instance JSON files")
    g.add_argument("--family", choices=["euclid", "gtype", "disk"], required=True)
    g.add_argument("--out", required=True, help="a .json file, or a directory for several")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--count", type=int, default=1, help="instances with seeds seed..seed+count-1")
    g.add_argument("--k", type=int, default=None, help="embedding dimension")
    g.add_argument("--n", type=int, default=10)
    g.add_argument("--p", type=float, default=0.5)
    g.add_argument("--type", choices=sorted(GRAPH_TYPES), default="random")
    g.add_argument("--param", type=_param, action="append", default=[], metavar="KEY=VALUE")
    g.add_argument("--weighted", action="store_true")
    g.add_argument("--coords")
    g.add_argument("--radius", type=float, default=5.5)
    g.add_argument("--udgp", action="store_true", help="write the distance list only")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="solve a DGP instance")
    s.add_argument("--instance", required=True)
    s.add_argument("--formulation", default="quartic")
    s.add_argument("--relax", choices=["sdp", "dd", "dualdd"])
    s.add_argument("--refine", help="refinement kind after a relaxation")
    _solver_flags(s)
    s.set_defaults(func=cmd_solve)

    u = sub.add_parser("usolve", help="solve a UDGP instance")
    u.add_argument("--instance", required=True)
    u.add_argument("--cone", choices=["dd", "dualdd"], default="dualdd")
    u.add_argument("--refine", default="quartic")
    u.add_argument("--formulation", help="smooth UDGP kind solved directly instead of the MILP route")
    u.add_argument("--reference", help="DGP instance whose graph is compared by gphsim")
    _solver_flags(u)
    u.set_defaults(func=cmd_usolve)

    o = sub.add_parser("oracle", help="exhaustive UDGP assignment search")
    o.add_argument("--instance", required=True)
    o.add_argument("--kind", default="quartic")
    o.add_argument("--cap", type=int, default=5000)
    o.add_argument("--jobs", type=int, default=default_jobs())
    _solver_flags(o)
    o.set_defaults(func=cmd_oracle)

    b = sub.add_parser("bench", help="run a formulation x instance grid")
    b.add_argument("--config", required=True)
    b.add_argument("--jobs", type=int, default=default_jobs())
    b.add_argument("--out", help="CSV path (overrides the config)")
    b.set_defaults(func=cmd_bench)

    r = sub.add_parser("report", help="aggregate a bench CSV")
    r.add_argument("--csv", required=True)
    r.add_argument("--group-by", choices=GROUP_BY, required=True)
    r.add_argument("--metric", choices=METRICS, default="mde")
    r.add_argument("--scale", type=float, default=1.0, help="factor applied to plotted values")
    r.add_argument("--out-csv")
    r.add_argument("--out-svg")
    r.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    a = build_parser().parse_args(argv)
    if getattr(a, "k", 1) is None:
        a.k = 3 if a.family == "disk" else 2
    try:
        a.func(a)
    except (GeodesolveError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
