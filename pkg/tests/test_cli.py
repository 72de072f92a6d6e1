import json
import subprocess
import sys

import pytest

from formval.cli import main

from conftest import EXAMPLE_DIR

PROJECT = ["--spec", str(EXAMPLE_DIR / "spec.yaml"), "--data", str(EXAMPLE_DIR / "pilot.csv"),
           "--ratings", str(EXAMPLE_DIR / "sme.csv")]
CONFIG = ["--config", str(EXAMPLE_DIR / "config.yaml")]


def test_spec_validate(capsys):
    assert main(["spec", "validate", str(EXAMPLE_DIR / "spec.yaml")]) == 0
    out = capsys.readouterr().out
    assert "5 constructs, 20 items, hierarchy depth 2" in out


def test_spec_validate_errors(tmp_path, capsys):
    p = tmp_path / "s.yaml"
    p.write_text("spec_version: 1\nconstructs:\n  - id: A\n    model: formative\n"
                 "    children: [B]\n  - id: B\n    model: formative\n    children: [A]\n")
    assert main(["spec", "validate", str(p)]) == 1
    out = capsys.readouterr().out
    assert "HIERARCHY_CYCLE" in out and "depth cyclic" in out


def test_bad_spec_file_exit_code(tmp_path, capsys):
    p = tmp_path / "s.yaml"
    p.write_text("constructs: [")
    assert main(["spec", "validate", str(p)]) == 64
    assert capsys.readouterr().err.startswith("error:")


@pytest.mark.parametrize("argv, expected", [
    (["--causality", "items_cause_construct"], "formative"),
    (["--causality", "ambiguous", "--interchangeable", "yes"], "reflective"),
    (["--causality", "ambiguous"], "follow_definition"),
])
def test_classify(capsys, argv, expected):
    assert main(["classify", *argv]) == 0
    assert capsys.readouterr().out.strip() == expected


def test_cvr(capsys, tmp_path):
    assert main(["cvr", "--spec", str(EXAMPLE_DIR / "spec.yaml"), "--ratings",
                 str(EXAMPLE_DIR / "sme.csv"), "--out", str(tmp_path)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "item_id,n_essential,n_raters,cvr,critical_value,passed"
    assert "CQ5,5,12,-0.1667,0.6667,false" in lines
    assert len(json.loads((tmp_path / "cvr.json").read_text())) == 23


def test_diagnose(capsys):
    assert main(["diagnose", *PROJECT, *CONFIG]) == 0
    out = capsys.readouterr().out
    assert "== support (formative, level 1)" in out
    assert "VIF SP1" in out and "not a validity criterion" in out


def test_composite(capsys, tmp_path):
    assert main(["composite", *PROJECT, "--composite-method", "median",
                 "--out", str(tmp_path)]) == 0
    text = (tmp_path / "composites-pilot-1.csv").read_text()
    header = text.splitlines()[0].split(",")
    assert header[0] == "respondent_id" and "platform_quality" in header
    assert len(text.splitlines()) == 39


def test_gate_exit_code(capsys):
    assert main(["gate", *PROJECT, *CONFIG]) == 1
    out = capsys.readouterr().out
    assert "content" in out and "CVR_FAILED" in out


def test_report_and_rerun(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["--iteration", "pilot-7", "report", *PROJECT, *CONFIG, "--out", str(out),
                 "--record"]) == 0
    j = out / "report-pilot-7.json"
    assert j.exists() and (out / "report-pilot-7.md").exists()
    assert (out / "history" / "pilot-7.json").exists()
    again = tmp_path / "again"
    assert main(["report", "--rerun", str(j), "--out", str(again), "--format",
                 "structured"]) == 0
    assert (again / "report-pilot-7.json").read_bytes() == j.read_bytes()
    # recording the same iteration twice is refused
    assert main(["report", *PROJECT, "--iteration", "pilot-7", "--out", str(out),
                 "--record"]) == 64


def test_report_history_overlap(tmp_path, capsys):
    hist = tmp_path / "hist"
    hist.mkdir()
    (hist / "pilot-0.json").write_text(json.dumps(
        {"iteration_id": "pilot-0", "respondent_ids": ["P01", "P02", "Q9"], "spec_hash": ""}))
    assert main(["gate", *PROJECT, "--history", str(hist)]) == 1
    out = capsys.readouterr().out
    assert out.count("WARNING respondent") == 2


def test_report_needs_inputs(capsys):
    assert main(["report"]) == 64


def test_simulate(tmp_path, capsys):
    csv_path = tmp_path / "sim.csv"
    sme = tmp_path / "sme.csv"
    argv = ["simulate", "--spec", str(EXAMPLE_DIR / "spec.yaml"), "--seed", "3",
            "--respondents", "25", "--rho", "0.4", "--out", str(csv_path),
            "--sme-out", str(sme)]
    assert main(argv) == 0
    first = csv_path.read_bytes()
    assert main(argv) == 0
    assert csv_path.read_bytes() == first
    assert len(first.decode().splitlines()) == 26
    assert sme.read_text().startswith("# mode=cvr3")


def test_simulate_matrix_file(tmp_path, capsys):
    spec = tmp_path / "s.yaml"
    spec.write_text("spec_version: 1\nconstructs:\n  - id: A\n    model: formative\n"
                    "    items:\n      - {id: A1, scale: [1, 5]}\n      - {id: A2, scale: [1, 5]}\n")
    m = tmp_path / "rho.csv"
    m.write_text(",A1,A2\nA1,1,0.5\nA2,0.5,1\n")
    assert main(["simulate", "--spec", str(spec), "--seed", "1", "--respondents", "5",
                 "--rho", str(m)]) == 0
    assert capsys.readouterr().out.startswith("respondent_id,A1,A2")
    m.write_text("1,0.5,0\n0.5,1,0\n0,0,1\n")
    assert main(["simulate", "--spec", str(spec), "--seed", "1", "--respondents", "5",
                 "--rho", str(m)]) == 64


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "formval.cli", "classify", "--causality",
                          "construct_causes_items"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip() == "reflective"
