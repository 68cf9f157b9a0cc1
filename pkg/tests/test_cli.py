from __future__ import annotations

import csv
import io
import json
import math
import subprocess
import sys

import jsonschema
import pytest

from eprcert.cli import (
    COMMANDS,
    EXIT_BUDGET,
    EXIT_CONFIG,
    EXIT_NONCONVERGED,
    EXIT_OK,
    RUN_COLUMNS,
    SWEEP_COLUMNS,
    fmt_float,
    load_schema,
    main,
    to_json,
)
from eprcert.protocol import OMEGA_OPT


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_help_for_every_subcommand():
    for name in COMMANDS:
        proc = subprocess.run([sys.executable, "-m", "eprcert.cli", name, "--help"],
                              capture_output=True, text=True, check=False)
        assert proc.returncode == 0
        assert "usage" in proc.stdout


def test_honest_run_row(capsys):
    code, out, _ = run_cli(capsys, "run", "-n", "3")
    assert code == EXIT_OK
    rec = json.loads(out)
    assert rec["exact_acceptance"] == pytest.approx((1 + 2 * math.cos(math.pi / 8) ** 2) / 3, abs=1e-12)
    assert abs(rec["delta"]) <= 1e-12
    assert rec["omega_opt"] == OMEGA_OPT
    jsonschema.validate(rec, load_schema("run"))


def test_lazy_run_has_positive_delta(capsys):
    code, out, _ = run_cli(capsys, "run", "-n", "3", "--strategy", "lazy")
    assert code == EXIT_OK
    assert json.loads(out)["delta"] > 0


def test_invalid_n_is_config_error(capsys):
    code, out, err = run_cli(capsys, "run", "-n", "1")
    assert code == EXIT_CONFIG
    assert out == ""
    assert "n must be at least 2" in err


def test_bad_config_file(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("n: [1, 2]\n")
    code, _, err = run_cli(capsys, "run", "--config", str(cfg))
    assert code == EXIT_CONFIG
    assert "invalid config" in err


def test_rigidity_budget_refusal(capsys):
    code, out, err = run_cli(capsys, "rigidity", "-n", "4")
    assert code == EXIT_BUDGET
    assert out == ""
    assert "n <= 3" in err


def test_tilted_pipeline_budget_refusal(tmp_path, capsys):
    cfg = tmp_path / "t.yaml"
    cfg.write_text("tilted:\n  n: 3\n")
    code, _, err = run_cli(capsys, "tilted", "--config", str(cfg), "--pipeline")
    assert code == EXIT_BUDGET
    assert "n <= 2" in err


def test_honest_rigidity_distance(capsys):
    code, out, _ = run_cli(capsys, "rigidity", "-n", "2")
    assert code == EXIT_OK
    rec = json.loads(out)
    assert rec["distance"] <= 1e-8
    jsonschema.validate(rec, load_schema("rigidity"))


def test_attack_row(capsys):
    code, out, _ = run_cli(capsys, "attack", "-n", "4", "--dimension", "8", "--restarts", "2")
    assert code == EXIT_OK
    rec = json.loads(out)
    assert rec["dimension"] == 8 < rec["honest_dimension"] == 16
    assert rec["exact_acceptance"] >= OMEGA_OPT - 2 * rec["commutator_metric"]
    assert rec["branch1"] == pytest.approx(1.0, abs=1e-12)
    assert rec["above_bound"]


def test_attack_nonconvergence_keeps_output(tmp_path, capsys):
    fam = tmp_path / "fam.json"
    code, out, err = run_cli(capsys, "attack", "-n", "2", "--dimension", "2", "--eps-target", "1e-6",
                             "--restarts", "1", "--save-family", str(fam))
    assert code == EXIT_NONCONVERGED
    assert not json.loads(out)["converged"]
    assert "above target" in err
    assert fam.exists()
    # the saved family reproduces the row without optimizing again
    code2, out2, _ = run_cli(capsys, "run", "-n", "2", "--strategy", "attack", "--dimension", "2",
                             "--family-file", str(fam))
    assert code2 == EXIT_OK
    assert json.loads(out2)["exact_acceptance"] == json.loads(out)["exact_acceptance"]


def test_tilted_alpha_one(capsys):
    code, out, _ = run_cli(capsys, "tilted", "--alpha", "1.0")
    assert code == EXIT_OK
    rec = json.loads(out)
    assert rec["bell_value"] == pytest.approx(math.sqrt(10), abs=1e-8)
    assert rec["resolved"] == ["+(I+Z)"]
    assert sum(v["resolved"] for v in rec["hat_variants"]) == 1
    jsonschema.validate(rec, load_schema("tilted"))


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("n: 3\nstrategy:\n  kind: perturbed\n  eta: 0.2\n")
    _, out, _ = run_cli(capsys, "run", "--config", str(cfg))
    rec = json.loads(out)
    assert rec["n"] == 3 and rec["strategy"].startswith("perturbed")
    _, out, _ = run_cli(capsys, "run", "--config", str(cfg), "-n", "2", "--eta", "0.1")
    rec = json.loads(out)
    assert rec["n"] == 2 and "0.10000000000000001" in rec["strategy"]


def test_seed_from_environment(monkeypatch, capsys):
    monkeypatch.setenv("ENTANGLE_SEED", "17")
    _, out_env, _ = run_cli(capsys, "sample", "-n", "2", "--count", "500")
    monkeypatch.delenv("ENTANGLE_SEED")
    _, out_flag, _ = run_cli(capsys, "sample", "-n", "2", "--count", "500", "--seed", "17")
    assert json.loads(out_env)["seed"] == 17
    assert out_env == out_flag
    monkeypatch.setenv("ENTANGLE_SEED", "x")
    code, _, _ = run_cli(capsys, "sample", "-n", "2", "--count", "10")
    assert code == EXIT_CONFIG


def test_byte_identical_outputs(tmp_path, capsys):
    paths = []
    for k in range(2):
        out = tmp_path / f"s{k}.json"
        tr = tmp_path / f"t{k}.jsonl"
        assert main(["sample", "-n", "3", "--count", "300", "--seed", "5", "-o", str(out),
                     "--transcripts", str(tr)]) == EXIT_OK
        paths.append((out.read_bytes(), tr.read_bytes()))
    assert paths[0] == paths[1]
    schema = load_schema("transcript")
    lines = paths[0][1].decode().splitlines()
    assert len(lines) == 300
    for line in lines:
        jsonschema.validate(json.loads(line), schema)


def test_sweep_order_independent_of_jobs(tmp_path):
    outs = []
    for jobs in (1, 2):
        out = tmp_path / f"sw{jobs}.csv"
        assert main(["sweep", "--strategy", "perturbed", "--grid", "0.3", "0.05", "0.1",
                     "--format", "csv", "--jobs", str(jobs), "-o", str(out)]) == EXIT_OK
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    rows = list(csv.DictReader(io.StringIO(outs[0].decode())))
    assert [r["value"] for r in rows] == ["0.29999999999999999", "0.050000000000000003", "0.10000000000000001"]


def test_csv_headers_are_stable(capsys):
    _, out, _ = run_cli(capsys, "run", "-n", "2", "--format", "csv")
    assert out.splitlines()[0] == ",".join(RUN_COLUMNS)
    _, out, _ = run_cli(capsys, "sweep", "--strategy", "perturbed", "--grid", "0.1", "--format", "csv",
                        "--jobs", "1")
    assert out.splitlines()[0] == ",".join(SWEEP_COLUMNS["exact"])


def test_rigidity_sweep_rows(capsys):
    code, out, _ = run_cli(capsys, "sweep", "--mode", "rigidity", "--strategy", "perturbed", "--perturb", "Z",
                           "--grid", "0.05", "0.1", "0.2", "--jobs", "1")
    assert code == EXIT_OK
    rec = json.loads(out)
    jsonschema.validate(rec, load_schema("sweep"))
    assert [r["value"] for r in rec["rows"]] == [0.05, 0.1, 0.2]
    assert all(r["distance"] > 0 and r["delta"] > 0 for r in rec["rows"])
    assert rec["fits"] is not None


def test_sweep_validation(capsys):
    code, _, _ = run_cli(capsys, "sweep", "--mode", "tilted", "--parameter", "eta")
    assert code == EXIT_CONFIG
    code, _, _ = run_cli(capsys, "sweep", "--mode", "rigidity", "--parameter", "n", "--grid", "2", "4")
    assert code == EXIT_BUDGET


def test_seventeen_digit_floats():
    assert fmt_float(0.1) == "0.10000000000000001"
    assert float(fmt_float(math.pi)) == math.pi
    assert json.loads(to_json({"x": [1.0 / 3, 2]})) == {"x": [1.0 / 3, 2]}
