import csv
import json
import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from geodesolve.bench import CSV_COLUMNS, aggregate, group_key, read_rows
from geodesolve.cli import main


@pytest.fixture
def instances(tmp_path):
    d = tmp_path / "inst"
    assert main(["generate", "--family", "euclid", "--n", "5", "--p", "0.5", "--count", "3", "--out", str(d)]) == 0
    return d


def run(*argv):
    return main([str(a) for a in argv])


def test_generate_families(tmp_path):
    assert run("generate", "--family", "gtype", "--type", "mesh", "--param", "n=3", "--out", tmp_path / "m.json") == 0
    data = json.loads((tmp_path / "m.json").read_text())
    assert data["n"] == 9 and len(data["edges"]) == 12
    coords = tmp_path / "c.xyz"
    coords.write_text("N 0 0 0\nC 1.5 0 0\nO 9 9 9\n")
    assert run("generate", "--family", "disk", "--coords", coords, "--out", tmp_path / "d.json") == 0
    data = json.loads((tmp_path / "d.json").read_text())
    assert data["k"] == 3 and data["n"] == 3 and data["edges"] == [[1, 2, 1.5]]
    assert run("generate", "--family", "euclid", "--n", "4", "--udgp", "--out", tmp_path / "u.json") == 0
    assert "distances" in json.loads((tmp_path / "u.json").read_text())


@pytest.mark.parametrize(
    "flags",
    [
        ["solve", "--formulation", "quartic"],
        ["solve", "--formulation", "system2", "--restarts", "3"],
        ["solve", "--relax", "dualdd", "--refine", "quartic"],
        ["usolve", "--cone", "dualdd"],
        ["usolve", "--formulation", "uquartic_cont", "--restarts", "2"],
    ],
)
def test_solve_bit_identical(instances, tmp_path, flags):
    inst = sorted(instances.glob("*.json"))[0]
    outs = []
    for i in range(2):
        out = tmp_path / f"sol{i}.json"
        assert run(*flags, "--instance", inst, "--seed", "3", "--out", out) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_solution_json_contents(instances, tmp_path):
    inst = sorted(instances.glob("*.json"))[0]
    out = tmp_path / "s.json"
    assert run("usolve", "--instance", inst, "--reference", inst, "--out", out) == 0
    data = json.loads(out.read_text())
    assert {"coords", "assignment", "gphsim", "mde", "lde", "status"} <= set(data)


def test_oracle_cli(tmp_path):
    u = tmp_path / "u.json"
    u.write_text(json.dumps({"k": 2, "n": 3, "distances": [3, 4, 5]}))
    assert run("oracle", "--instance", u, "--out", tmp_path / "o.json", "--jobs", "1") == 0
    data = json.loads((tmp_path / "o.json").read_text())
    assert data["mde"] <= 1e-6 and data["assignments"] == 6


def test_errors_return_2(tmp_path, instances, capsys):
    inst = sorted(instances.glob("*.json"))[0]
    assert run("solve", "--instance", inst, "--formulation", "nonsense") == 2
    assert run("solve", "--instance", tmp_path / "missing.json") == 2
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2")
    assert run("bench", "--config", bad) == 2
    assert "error:" in capsys.readouterr().err


def write_config(tmp_path, instances, formulations):
    cfg = tmp_path / "bench.json"
    cfg.write_text(json.dumps({
        "instances": [str(instances / "*.json")],
        "formulations": formulations,
        "time_limit": 20,
        "seed": 0,
        "restarts": 2,
        "output": str(tmp_path / "out.csv"),
    }))
    return cfg


def test_bench_grid_and_resume(tmp_path, instances):
    cfg = write_config(tmp_path, instances, ["quartic", {"relax": "dualdd", "refine": "quartic"}])
    assert run("bench", "--config", cfg, "--jobs", "1") == 0
    rows = read_rows(tmp_path / "out.csv")
    assert len(rows) == 6
    with open(tmp_path / "out.csv") as fh:
        assert next(csv.reader(fh)) == CSV_COLUMNS
    statuses = {"Optimal", "FeasiblePoint", "Infeasible", "Unbounded", "TimeLimit", "NumericFailure"}
    assert all(r["status"] in statuses for r in rows)
    assert run("bench", "--config", cfg, "--jobs", "2") == 0
    assert len(read_rows(tmp_path / "out.csv")) == 6


def test_bench_unknown_formulation(tmp_path, instances):
    cfg = write_config(tmp_path, instances, ["quartic", "nonsense"])
    assert run("bench", "--config", cfg) == 2


def test_bench_udgp_modes(tmp_path, instances):
    cfg = write_config(tmp_path, instances, [{"cone": "dualdd", "refine": "quartic"}])
    assert run("bench", "--config", cfg, "--jobs", "1") == 0
    rows = read_rows(tmp_path / "out.csv")
    assert len(rows) == 3 and all(r["gphsim"] != "" for r in rows)


def test_report_single_row(tmp_path):
    path = tmp_path / "one.csv"
    row = {"instance": "mesh-s0", "|V|": "16", "|E|": "24", "density": "0.2", "formulation": "quartic",
           "mde": "0.5", "lde": "0.25", "gphsim": "", "cpu_seconds": "1.5", "status": "Optimal"}
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        w.writeheader()
        w.writerow(row)
    assert run("report", "--csv", path, "--group-by", "vtx", "--metric", "cpu_seconds", "--scale", "2") == 0
    agg = read_rows(tmp_path / "one_by_vtx.csv")
    assert len(agg) == 1
    assert float(agg[0]["mde"]) == 0.5 and float(agg[0]["lde"]) == 0.25 and float(agg[0]["cpu_seconds"]) == 1.5
    assert agg[0]["gphsim"] == "" and agg[0]["group"] == "20"
    svg = ET.parse(tmp_path / "one_by_vtx.svg").getroot()
    assert svg.get("version") == "1.1"
    assert len(svg.findall("{http://www.w3.org/2000/svg}rect")) == 1


def test_group_rounding():
    row = {"|V|": "44", "|E|": "74", "density": "0.26", "formulation": "f", "instance": "torus-s1", "gphsim": "0.94"}
    assert group_key(row, "vtx") == "40"
    assert group_key({**row, "|V|": "45"}, "vtx") == "50"
    assert group_key(row, "edge") == "50"
    assert group_key({**row, "|E|": "76"}, "edge") == "100"
    assert group_key(row, "density") == "0.3"
    assert group_key(row, "graphtype") == "torus"
    assert group_key(row, "gphsim") == "0.9"


def test_aggregate_matches_independent_means():
    rng = np.random.default_rng(0)
    rows = []
    for i in range(40):
        rows.append({"instance": f"random-s{i}", "|V|": str(rng.integers(5, 60)), "|E|": "10", "density": "0.5",
                     "formulation": str(rng.choice(["a", "b"])), "mde": repr(float(rng.random())),
                     "lde": "nan" if i % 7 == 0 else repr(float(rng.random())), "gphsim": "",
                     "cpu_seconds": repr(float(rng.random())), "status": "Optimal"})
    agg = aggregate(rows, "vtx")
    for rec in agg:
        members = [r for r in rows if group_key(r, "vtx") == rec["group"] and r["formulation"] == rec["formulation"]]
        assert rec["rows"] == len(members)
        assert rec["mde"] == pytest.approx(np.mean([float(r["mde"]) for r in members]))
        finite = [float(r["lde"]) for r in members if r["lde"] != "nan"]
        assert rec["lde"] == (pytest.approx(np.mean(finite)) if finite else None)
        assert rec["gphsim"] is None


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "geodesolve", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "report" in out.stdout


def test_integer_udgp_kind_rejected(instances, tmp_path):
    inst = sorted(instances.glob("*.json"))[0]
    assert run("usolve", "--instance", inst, "--formulation", "uquartic") == 2
    assert run("bench", "--config", write_config(tmp_path, instances, ["uquartic"])) == 2
