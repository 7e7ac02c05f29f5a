import csv
import io
import json
import subprocess
import sys
from pathlib import Path

from lavgap.cli import main

ROOT = Path(__file__).resolve().parents[1]
REF = str(ROOT / "configs" / "ref-n2k1.json")
EXAMPLE = ["--model", "double-phase", "--N", "3", "--k", "1", "--p", "2", "--q", "2.6", "--alpha", "0.5"]

def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err

def test_plan_example(capsys):
    code, out, _ = run(capsys, "plan", *EXAMPLE)
    body = json.loads(out)
    assert code == 0
    assert body["plan"]["setup"] == 3 and body["admissibility"]["verdict"] == "admissible"

def test_invalid_config_exits_2_with_json_on_stderr(capsys):
    code, out, err = run(capsys, "plan", *EXAMPLE[:-6], "--k", "7", *EXAMPLE[-6:])
    assert code == 2 and out == ""
    payload = json.loads(err.strip().splitlines()[-1])
    assert payload["error"] == "invalid request"

def test_incompatible_setup_names_the_reason(capsys):
    code, _, err = run(capsys, "plan", *EXAMPLE, "--setup", "5")
    assert code == 2
    assert "setup 5 needs p0 = N/k" in json.loads(err.strip().splitlines()[-1])["detail"]

def test_missing_config_file(capsys, tmp_path):
    code, _, err = run(capsys, "plan", "--config", str(tmp_path / "absent.json"))
    assert code == 2 and json.loads(err)["error"] == "invalid configuration"

def test_inadmissible_plan_exits_1(capsys):
    code, out, _ = run(capsys, "plan", *EXAMPLE[:-4], "--q", "2.4", "--alpha", "0.5")
    assert code == 1 and not json.loads(out)["ok"]

def test_verify_reference_config(capsys):
    code, out, err = run(capsys, "verify", "--config", REF)
    body = json.loads(out)
    assert code == 0
    assert abs(body["boundary_pairing"]["value"] - 1.0) < 1e-3
    assert body["config"]["model"]["p0"] == 2.0
    assert body["resolved_config"]["atom_depth"] == 0 and body["resolved_config"]["pairing_tol"] == 1e-3
    assert "checking v_finite_energies" in err

def test_verify_reports_are_byte_identical(capsys):
    first = run(capsys, "verify", "--config", REF, "--quiet")
    second = run(capsys, "verify", "--config", REF, "--quiet")
    assert first == second
    assert first[2] == ""

def test_verify_summary_csv(capsys):
    code, out, _ = run(capsys, "verify", "--config", REF, "--format", "csv", "--quiet")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == ["condition", "passed"] and len(rows) == 6

def test_output_file_and_echo(capsys, tmp_path):
    target = tmp_path / "plan.json"
    code, out, _ = run(capsys, "plan", *EXAMPLE, "--output", str(target))
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["config"]["outputs"] == {"plan": str(target)}

def test_sweep_csv(capsys):
    code, out, _ = run(capsys, "sweep", *EXAMPLE[:-4], "--alpha", "0.5", "--gamma", "-1.5",
                       "--q-range", "2.4:2.7:0.1", "--quiet")
    lines = out.splitlines()
    assert code == 0
    assert lines[0] == "# lavgap-sweep v1"
    assert lines[1].startswith("# config: {")
    rows = list(csv.DictReader(lines[2:]))
    assert [r["I2_verdict"] for r in rows] == ["divergent", "divergent", "convergent", "convergent"]
    assert [r["admissible"] for r in rows] == ["False", "False", "True", "True"]

def test_sweep_json_format(capsys):
    code, out, _ = run(capsys, "sweep", *EXAMPLE[:-4], "--alpha", "0.5", "--gamma", "-1.5",
                       "--param", "q", "--range", "2.6:2.7:0.1", "--format", "json", "--quiet")
    assert code == 1  # no flip inside this range
    assert json.loads(out)["I2_flips"] == []

def test_csv_not_offered_for_plan(capsys):
    code, _, err = run(capsys, "plan", *EXAMPLE, "--format", "csv")
    assert code == 2 and "no CSV form" in err

def test_selftest_command(capsys):
    code, out, _ = run(capsys, "algebra-selftest", "--cases", "40", "--max-N", "4")
    assert code == 0 and json.loads(out)["passed"]

def test_cantor_generation_csv(capsys):
    code, out, _ = run(capsys, "cantor", "--depth", "3", "--generation", "--format", "csv", "--quiet")
    assert code == 0
    assert out.splitlines()[0] == "depth,a,b"

def test_unreachable_server(capsys):
    code, _, err = run(capsys, "plan", *EXAMPLE, "--server", "http://127.0.0.1:9")
    assert code == 2 and json.loads(err)["error"] == "request failed"

def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "lavgap.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("lavgap ")
