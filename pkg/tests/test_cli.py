import csv
import json

import pytest
import yaml

from lrlab.cli import Row, emit_report, load_config, run


def write_cfg(tmp_path, body, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump({"schema_version": 1, **body}))
    return str(p)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_empty_batch(tmp_path):
    cfg = write_cfg(tmp_path, {"batch": {"count": 0}})
    assert run(["verify-lr", "--config", cfg, "--out", str(tmp_path), "--quiet"]) == 0
    assert read_csv(tmp_path / "verify-lr.csv") == [["case_id", "theorem", "lhs", "rhs", "margin", "pass"]]
    summ = json.loads((tmp_path / "verify-lr.json").read_text())
    assert summ["n_cases"] == 0 and summ["n_pass"] == 0 and summ["worst_margin"] is None
    assert set(summ) == {"suite", "n_cases", "n_pass", "worst_margin", "wall_time"}


def test_tree_suite_counts(tmp_path):
    cfg = write_cfg(tmp_path, {"batch": {"k_max": 5, "composition_max": 5, "stirling_max": 5, "tree_sum_max": 3}})
    assert run(["tree-suite", "--config", cfg, "--out", str(tmp_path), "--quiet"]) == 0
    rows = read_csv(tmp_path / "tree-suite.csv")[1:]
    counts = [int(float(r[2])) for r in rows if r[1] == "tree-count"]
    assert counts == [1, 2, 6, 24, 120]
    theorems = {r[1] for r in rows}
    assert {"code-injective", "count-by-degree", "composition-bound", "tree-sum", "degree-factorial", "stirling"} <= theorems
    assert all(r[5] == "true" for r in rows)


def test_determinism_and_threads(tmp_path, monkeypatch):
    cfg = write_cfg(tmp_path, {"batch": {"count": 4, "sites": [5, 6]}, "seed": 9})
    outs = []
    for i, extra in enumerate([[], [], ["--threads", "3"]]):
        out = tmp_path / f"run{i}"
        assert run(["verify-lr", "--config", cfg, "--out", str(out), "--quiet"] + extra) == 0
        outs.append(out)
    assert (outs[0] / "verify-lr.csv").read_bytes() == (outs[1] / "verify-lr.csv").read_bytes()
    a, b = (json.loads((o / "verify-lr.json").read_text()) for o in outs[:2])
    a.pop("wall_time"), b.pop("wall_time")
    assert a == b
    serial, threaded = read_csv(outs[0] / "verify-lr.csv")[1:], read_csv(outs[2] / "verify-lr.csv")[1:]
    for r, s in zip(serial, threaded):
        assert r[0] == s[0] and abs(float(r[2]) - float(s[2])) <= 1e-10 and r[3] == s[3]
    monkeypatch.setenv("LRLAB_THREADS", "2")
    out = tmp_path / "env"
    assert run(["verify-lr", "--config", cfg, "--out", str(out), "--quiet"]) == 0
    monkeypatch.setenv("LRLAB_THREADS", "zero")
    assert run(["verify-lr", "--config", cfg, "--out", str(out), "--quiet"]) == 2


def test_seed_flag_changes_cases(tmp_path):
    cfg = write_cfg(tmp_path, {"batch": {"count": 2, "sites": [5, 5]}})
    run(["verify-lr", "--config", cfg, "--out", str(tmp_path / "a"), "--quiet", "--seed", "1"])
    run(["verify-lr", "--config", cfg, "--out", str(tmp_path / "b"), "--quiet", "--seed", "2"])
    assert (tmp_path / "a" / "verify-lr.csv").read_bytes() != (tmp_path / "b" / "verify-lr.csv").read_bytes()


@pytest.mark.parametrize(
    "body",
    [
        {"schema_version": 2},
        {"bogus": 1},
        {"batch": {"count": "many"}},
        {"batch": {"nope": 1}},
        {"subcommand": "convergence"},
        {"decay": {"kind": "gaussian"}},
        {"decay": {"kind": "exponential", "epsilon": 1.0, "sigma": -1.0}},
        {"threads": 0},
        {"model": {"L": 2}},
    ],
)
def test_schema_errors(tmp_path, body):
    p = tmp_path / "bad.yaml"
    p.write_text(yaml.safe_dump({"schema_version": 1, **body}))
    assert run(["verify-lr", "--config", str(p), "--out", str(tmp_path), "--quiet"]) == 2


def test_unreadable_configs(tmp_path):
    assert run(["verify-lr", "--config", str(tmp_path / "missing.yaml"), "--quiet"]) == 2
    p = tmp_path / "broken.yaml"
    p.write_text("schema_version: [1\n")
    assert run(["verify-lr", "--config", str(p), "--quiet"]) == 2
    assert run(["no-such-suite"]) == 2


def test_guards(tmp_path):
    big = write_cfg(tmp_path, {"batch": {"count": 0, "sites": [6, 13]}})
    assert run(["verify-lr", "--config", big, "--out", str(tmp_path), "--quiet"]) == 3
    assert run(["verify-lr", "--config", big, "--out", str(tmp_path), "--quiet", "--override-guards"]) == 0
    deep = write_cfg(tmp_path, {"batch": {"k_max": 10}}, "deep.yaml")
    assert run(["tree-suite", "--config", deep, "--out", str(tmp_path), "--quiet"]) == 3
    mc = write_cfg(tmp_path, {"batch": {"count": 0, "k_values": [10]}}, "mc.yaml")
    assert run(["verify-multicomm", "--config", mc, "--out", str(tmp_path), "--quiet"]) == 3
    wide = write_cfg(tmp_path, {"model": {"L": 6, "l": 1}}, "wide.yaml")
    assert run(["ac-measure", "--config", wide, "--out", str(tmp_path), "--quiet"]) == 3


def test_mixed_results_exit_one(tmp_path):
    # a negative tolerance makes the identity rows fail while the block bounds still pass
    cfg = write_cfg(tmp_path, {"batch": {"m_values": [0], "n_per_m": 2, "max_sites": 5}, "tolerances": {"identity": -1.0}})
    assert run(["telescoping", "--config", cfg, "--out", str(tmp_path), "--quiet"]) == 1
    summ = json.loads((tmp_path / "telescoping.json").read_text())
    assert 0 < summ["n_pass"] < summ["n_cases"]
    assert summ["worst_margin"] < 0
    rows = read_csv(tmp_path / "telescoping.csv")[1:]
    assert len(rows) == summ["n_cases"]
    assert sum(r[5] == "true" for r in rows) == summ["n_pass"]


def test_csv_round_trip(tmp_path):
    vals = [0.1 + 0.2, 1 / 3, 1e-300, 123456789.123456789, -2.5e-17, 7.0]
    rows = [Row(f"c{i}", "demo", v, 2 * v, v, True) for i, v in enumerate(vals)]
    summ = emit_report("demo", rows, tmp_path, 0.0)
    assert summ["n_pass"] == len(vals) and summ["worst_margin"] == min(vals)
    back = read_csv(tmp_path / "demo.csv")[1:]
    for v, r in zip(vals, back):
        assert float(r[2]) == v and float(r[3]) == 2 * v and float(r[4]) == v


def test_config_defaults_and_overrides(tmp_path):
    cfg = load_config(None, "convergence")
    assert cfg["batch"]["count"] == 20 and cfg["seed"] == 0
    p = write_cfg(tmp_path, {"batch": {"count": 3}, "seed": 5})
    cfg = load_config(p, "convergence")
    assert cfg["batch"]["count"] == 3 and cfg["batch"]["gap"] == 2 and cfg["seed"] == 5


def test_response_artifacts(tmp_path):
    body = {"batch": {"lambdas": [0.5], "realizations": 2, "n_times": 4}}
    cfg = write_cfg(tmp_path, body)
    assert run(["conductivity", "--config", cfg, "--out", str(tmp_path), "--quiet"]) == 0
    series = read_csv(tmp_path / "conductivity_timeseries.csv")
    assert series[0] == ["lambda", "t", "xi_00", "stderr_00"] and len(series) == 5
    prov = json.loads((tmp_path / "conductivity_provenance.json").read_text())
    assert [p["seed"] for p in prov["0.5"]] == [[0, 0], [0, 1]]
    assert all(len(p["omega_hash"]) == 16 for p in prov["0.5"])
    ac = write_cfg(tmp_path, {"batch": {"lambdas": [0.5], "realizations": 2, "n_times": 4, "max_moment": 4}}, "ac.yaml")
    assert run(["ac-measure", "--config", ac, "--out", str(tmp_path), "--quiet"]) == 0
    measure = json.loads((tmp_path / "ac-measure_lam0.5.json").read_text())
    atom = measure["atoms"][0]
    assert set(atom) == {"nu", "weight_matrix"} and len(atom["weight_matrix"]) == 1
    assert len(measure["provenance"]) == 2


def test_increments_suite(tmp_path):
    cfg = write_cfg(tmp_path, {"batch": {"lambdas": [0.5]}})
    assert run(["increments", "--config", cfg, "--out", str(tmp_path), "--quiet"]) == 0
    rows = read_csv(tmp_path / "increments.csv")[1:]
    assert [r[1] for r in rows].count("taylor-slope") == 3
