"""Benchmark grid runner, CSV aggregation and SVG bar plots."""
from __future__ import annotations

import csv
import glob
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

from .core import DgpInstance, GeodesolveError, SolveReport, Status, derive_udgp, reconstruct_graph
from .formulations import DGP_ALIASES, DGP_KINDS, UDGP_ALIASES, UDGP_SMOOTH_KINDS, UnknownFormulationError, build_dgp, build_udgp_smooth
from .instances import load_instance
from .metrics import gphsim
from .nlp import SolverConfig, multistart
from .pipelines import PipelineConfig, dgp_pipeline, normalize_relax, udgp_pipeline
from .linear import MilpConfig
from .psd import SdpConfig

CSV_COLUMNS = ["instance", "|V|", "|E|", "density", "formulation", "mde", "lde", "gphsim", "cpu_seconds", "status"]
GROUP_BY = ("vtx", "edge", "density", "formulation", "graphtype", "gphsim")
METRICS = ("mde", "lde", "gphsim", "cpu_seconds")


class ConfigError(GeodesolveError, ValueError):
    pass


def default_jobs() -> int:
    try:
        return max(1, int(os.environ.get("GEODESOLVE_JOBS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class Formulation:
    """One column of the grid. ``mode`` is ``dgp`` (multistart on a smooth
    DGP kind), ``pipeline`` (relax, factor, reduce, refine), ``udgp``
    (assignment MILP then realization) or ``usmooth`` (multistart on a
    smooth UDGP kind)."""

    name: str
    mode: str
    kind: str = "quartic"
    relax: str | None = None
    cone: str | None = None

    @classmethod
    def parse(cls, entry) -> "Formulation":
        if isinstance(entry, str):
            entry = {"kind": entry}
        if not isinstance(entry, dict):
            raise ConfigError(f"bad formulation entry {entry!r}")
        kind = entry.get("refine", entry.get("kind", "quartic"))
        if "cone" in entry:
            f = cls(entry.get("name", f"u{entry['cone']}+{kind}"), "udgp", kind, cone=entry["cone"])
        elif "relax" in entry:
            f = cls(entry.get("name", f"{entry['relax']}+{kind}"), "pipeline", kind, relax=entry["relax"])
        elif kind in UDGP_SMOOTH_KINDS or kind in UDGP_ALIASES:
            f = cls(entry.get("name", kind), "usmooth", kind)
        else:
            f = cls(entry.get("name", kind), "dgp", kind)
        f.validate()
        return f

    def validate(self):
        if self.mode in ("dgp", "pipeline", "udgp") and self.kind not in DGP_KINDS and self.kind not in DGP_ALIASES:
            raise UnknownFormulationError(f"unknown formulation {self.kind!r}")
        if self.mode == "usmooth" and UDGP_ALIASES.get(self.kind, self.kind) != "uquartic_cont":
            raise ConfigError(f"{self.kind} has binary variables; use uquartic_cont or a cone entry")
        if self.relax is not None:
            try:
                normalize_relax(self.relax)
            except (KeyError, ValueError) as exc:
                raise UnknownFormulationError(f"unknown relaxation {self.relax!r}") from exc


@dataclass(frozen=True)
class BenchConfig:
    instances: list
    formulations: list
    time_limit_s: float = 60.0
    seed: int = 0
    restarts: int = 10
    output: str = "bench.csv"

    @classmethod
    def load(cls, path) -> "BenchConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict) or "instances" not in data or "formulations" not in data:
            raise ConfigError("config needs 'instances' and 'formulations'")
        base = Path(path).parent
        files = []
        for pat in data["instances"]:
            full = pat if os.path.isabs(pat) else str(base / pat)
            hits = sorted(glob.glob(full))
            if not hits:
                raise ConfigError(f"no instance matches {pat!r}")
            files.extend(hits)
        forms = [Formulation.parse(f) for f in data["formulations"]]
        names = [f.name for f in forms]
        if len(set(names)) != len(names):
            raise ConfigError("formulation names must be unique")
        out = data.get("output", "bench.csv")
        return cls(
            files,
            forms,
            float(data.get("time_limit", 60.0)),
            int(data.get("seed", 0)),
            int(data.get("restarts", 10)),
            out if os.path.isabs(out) else str(base / out),
        )


def pipeline_config(time_limit_s: float, seed: int, restarts: int) -> PipelineConfig:
    return PipelineConfig(
        solver=SolverConfig(seed=seed, restarts=restarts, time_limit_s=time_limit_s),
        sdp=SdpConfig(time_limit_s=time_limit_s),
        milp=MilpConfig(time_limit_s=time_limit_s),
    )


def run_formulation(inst, form: Formulation, cfg: PipelineConfig) -> tuple[SolveReport, float | None]:
    """Solve one instance; returns the report and gphsim (UDGP modes only)."""
    reference = inst.graph if isinstance(inst, DgpInstance) else None
    if form.mode == "dgp":
        if not isinstance(inst, DgpInstance):
            raise ConfigError(f"{form.name} needs a DGP instance")
        return multistart(build_dgp(form.kind, inst), cfg.solver), None
    if form.mode == "pipeline":
        if not isinstance(inst, DgpInstance):
            raise ConfigError(f"{form.name} needs a DGP instance")
        return dgp_pipeline(inst, form.relax, form.kind, cfg), None
    u = derive_udgp(inst) if isinstance(inst, DgpInstance) else inst
    if form.mode == "udgp":
        rep = udgp_pipeline(u, form.cone, form.kind, cfg, reference=reference)
        return rep, rep.extras.get("gphsim")
    rep = multistart(build_udgp_smooth(form.kind, u), cfg.solver)
    sim = None
    if reference is not None and rep.assignment is not None:
        sim = gphsim(reference, reconstruct_graph(u, rep.assignment))
    return rep, sim


def _instance_shape(inst):
    if isinstance(inst, DgpInstance):
        g = inst.graph
        return g.n_vertices, g.n_edges, g.density()
    n = inst.n_points
    return n, inst.m, inst.m / (n * (n - 1) / 2) if n > 1 else 0.0


def _fmt(x) -> str:
    if x is None:
        return ""
    return repr(float(x))


def _run_pair(args) -> dict:
    path, form, time_limit_s, seed, restarts = args
    inst = load_instance(path)
    nv, ne, dens = _instance_shape(inst)
    cfg = pipeline_config(time_limit_s, seed, restarts)
    try:
        rep, sim = run_formulation(inst, form, cfg)
        status, e_mde, e_lde, cpu = str(rep.status), rep.mde, rep.lde, rep.cpu_seconds
    except GeodesolveError:
        status, e_mde, e_lde, cpu, sim = str(Status.NUMERIC_FAILURE), math.nan, math.nan, 0.0, None
    return {
        "instance": Path(path).stem,
        "|V|": str(nv),
        "|E|": str(ne),
        "density": _fmt(dens),
        "formulation": form.name,
        "mde": _fmt(e_mde),
        "lde": _fmt(e_lde),
        "gphsim": _fmt(sim),
        "cpu_seconds": _fmt(cpu),
        "status": status,
    }


def completed_pairs(csv_path) -> set:
    if not Path(csv_path).exists():
        return set()
    with open(csv_path, newline="") as fh:
        return {(r["instance"], r["formulation"]) for r in csv.DictReader(fh)}


def run_bench(cfg: BenchConfig, jobs: int | None = None, csv_path=None, log=None) -> int:
    """Run every (instance, formulation) pair not already in the CSV; rows are
    appended by this process only. Returns the number of new rows."""
    csv_path = Path(csv_path or cfg.output)
    done = completed_pairs(csv_path)
    todo = [
        (p, f, cfg.time_limit_s, cfg.seed, cfg.restarts)
        for p in cfg.instances
        for f in cfg.formulations
        if (Path(p).stem, f.name) not in done
    ]
    fresh = not csv_path.exists() or csv_path.stat().st_size == 0
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    jobs = jobs or default_jobs()
    written = 0
    with open(csv_path, "a", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        if fresh:
            w.writeheader()

        def emit(row):
            nonlocal written
            w.writerow(row)
            fh.flush()
            written += 1
            if log:
                log(f"{row['instance']} {row['formulation']} {row['status']} mde={row['mde']}")

        if jobs <= 1 or len(todo) <= 1:
            for t in todo:
                emit(_run_pair(t))
        else:
            with ProcessPoolExecutor(max_workers=jobs) as ex:
                futs = [ex.submit(_run_pair, t) for t in todo]
                for fut in as_completed(futs):
                    emit(fut.result())
    return written


def _round_to(x: float, step: float) -> float:
    return math.floor(x / step + 0.5) * step


def graph_type_of(instance_name: str) -> str:
    return instance_name.split("-")[0]


def group_key(row: dict, by: str) -> str:
    if by == "vtx":
        return str(int(_round_to(float(row["|V|"]), 10)))
    if by == "edge":
        return str(int(_round_to(float(row["|E|"]), 50)))
    if by == "density":
        return f"{_round_to(float(row['density']), 0.1):.1f}"
    if by == "formulation":
        return row["formulation"]
    if by == "graphtype":
        return graph_type_of(row["instance"])
    if by == "gphsim":
        v = _parse(row.get("gphsim", ""))
        return "none" if v is None else f"{_round_to(v, 0.1):.1f}"
    raise ConfigError(f"unknown grouping {by!r}; choose from {', '.join(GROUP_BY)}")


def _parse(s):
    if s is None or s == "":
        return None
    v = float(s)
    return v if math.isfinite(v) else None


def aggregate(rows: list[dict], by: str) -> list[dict]:
    """Mean of each metric per (group, formulation), ignoring blanks and
    non-finite values."""
    buckets: dict[tuple, list[dict]] = {}
    for r in rows:
        g = group_key(r, by)
        key = (g,) if by == "formulation" else (g, r["formulation"])
        buckets.setdefault(key, []).append(r)
    out = []
    for key in sorted(buckets, key=_sort_key):
        rs = buckets[key]
        rec = {"group": key[0], "formulation": key[-1], "rows": len(rs)}
        for m in METRICS:
            vals = [v for v in (_parse(r.get(m)) for r in rs) if v is not None]
            rec[m] = sum(vals) / len(vals) if vals else None
        out.append(rec)
    return out


def _sort_key(key):
    def part(s):
        try:
            return (0, float(s), "")
        except ValueError:
            return (1, 0.0, s)

    return tuple(part(s) for s in key)


def read_rows(csv_path) -> list[dict]:
    with open(csv_path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_aggregate(agg: list[dict], path):
    cols = ["group", "formulation", "rows", *METRICS]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        for rec in agg:
            w.writerow({c: ("" if rec[c] is None else rec[c]) for c in cols})


def svg_bars(agg: list[dict], metric: str = "mde", scale: float = 1.0, title: str = "") -> str:
    """SVG 1.1 bar chart, one bar per aggregated row."""
    if metric not in METRICS:
        raise ConfigError(f"unknown metric {metric!r}")
    vals = [(rec[metric] or 0.0) * scale for rec in agg]
    labels = [rec["group"] if rec["group"] == rec["formulation"] else f"{rec['group']} {rec['formulation']}" for rec in agg]
    bw, gap, h, top, left, bottom = 36, 12, 240, 30, 60, 110
    width = left + max(1, len(vals)) * (bw + gap) + gap
    vmax = max([abs(v) for v in vals] + [1e-300])
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{top + h + bottom}">',
        f'<text x="{left}" y="18" font-family="sans-serif" font-size="13">{escape(title or metric)}</text>',
        f'<line x1="{left}" y1="{top + h}" x2="{width - gap}" y2="{top + h}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + h}" stroke="black"/>',
        f'<text x="{left - 4}" y="{top + 4}" font-family="sans-serif" font-size="10" text-anchor="end">{vmax:.3g}</text>',
        f'<text x="{left - 4}" y="{top + h}" font-family="sans-serif" font-size="10" text-anchor="end">0</text>',
    ]
    for i, (v, lab) in enumerate(zip(vals, labels)):
        x = left + gap + i * (bw + gap)
        bh = h * abs(v) / vmax
        parts.append(f'<rect x="{x}" y="{top + h - bh:.2f}" width="{bw}" height="{bh:.2f}" fill="#4a78b0"/>')
        cx, cy = x + bw / 2, top + h + 12
        parts.append(
            f'<text x="{cx}" y="{cy}" font-family="sans-serif" font-size="10" '
            f'transform="rotate(45 {cx} {cy})">{escape(lab)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def report(csv_path, by: str, out_csv=None, out_svg=None, metric: str = "mde", scale: float = 1.0) -> list[dict]:
    if by not in GROUP_BY:
        raise ConfigError(f"unknown grouping {by!r}; choose from {', '.join(GROUP_BY)}")
    agg = aggregate(read_rows(csv_path), by)
    stem = Path(csv_path).with_suffix("")
    write_aggregate(agg, out_csv or f"{stem}_by_{by}.csv")
    Path(out_svg or f"{stem}_by_{by}.svg").write_text(svg_bars(agg, metric, scale, f"{metric} by {by}"))
    return agg
