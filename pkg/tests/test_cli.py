import csv
import io
import json
import subprocess
import sys

import pytest

from arqradio.channel import builtin_scenario, save_scenario, scenario_to_dict
from arqradio.cli import main
from arqradio.experiments import RUNNERS

SC = "example1:P=3,eps0=0,eps1=0.9"


def _rows(text):
    lines = text.splitlines()
    assert lines[0].startswith("# arqradio.")
    return list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


def test_rib_csv(capsys):
    assert main(["rib", "--builtin", SC, "--rp", "0.3,0.5,0.9"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("# arqradio.rib/1")
    rows = _rows(out)
    assert [float(r["R_p"]) for r in rows] == [0.3, 0.5, 0.9]
    assert {"lambda", "rib_nats", "rib_bits", "slack", "iterations"} <= set(rows[0])
    assert float(rows[0]["rib_bits"]) == pytest.approx(2.0)


def test_rib_json(capsys):
    assert main(["rib", "--builtin", SC, "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["schema"] == "arqradio.rib/1"
    assert doc["rows"][0]["R_p"] == 0.5


def test_rib_from_scenario_file(tmp_path, capsys):
    path = tmp_path / "sc.json"
    save_scenario(builtin_scenario(SC), path)
    assert main(["rib", "--scenario", str(path)]) == 0
    assert _rows(capsys.readouterr().out)[0]["feasible"] == "True"


def test_simulate_is_byte_identical(tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"m{k}.csv"
        argv = ["simulate", "--builtin", SC, "--strategy", "fixed", "--n", "20000", "--K", "64",
                "--kappa", "4", "--gamma", "0.01", "--delta-tilde", "0.05", "--seed", "7",
                "--replications", "1", "--output", str(path)]
        assert main(argv) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    rows = _rows(outs[0].decode())
    assert rows[0]["strategy"] == "fixed" and rows[0]["seed"] == "7"


def test_simulate_trace_and_summary(tmp_path, capsys):
    trace = tmp_path / "t.csv"
    argv = ["simulate", "--builtin", SC, "--strategy", "threshold", "--n", "500",
            "--replications", "3", "--trace", str(trace), "--summary"]
    assert main(argv) == 0
    out = capsys.readouterr().out
    assert "# arqradio.summary/1" in out
    assert out.count("\n") > 5
    assert trace.read_text().splitlines()[0] == "# arqradio.trace/1"
    assert len(trace.read_text().splitlines()) == 502


def test_validate_threshold_monotone(capsys):
    argv = ["validate", "--builtin", "example1:P=1,eps0=0,eps1=1", "--strategy", "threshold",
            "--n", "400", "--k-grid", "10,40,100,400", "--replications", "2000"]
    assert main(argv) == 0
    rows = _rows(capsys.readouterr().out)
    assert list(rows[0]) == ["k", "p_hat", "ci_lo", "ci_hi", "bound"]
    p = [float(r["p_hat"]) for r in rows]
    assert all(b <= a for a, b in zip(p, p[1:]))


def test_validate_fixed_has_bound(capsys):
    argv = ["validate", "--builtin", "example1:P=3,eps0=0.1,eps1=0.9,nu=0.2", "--strategy",
            "fixed", "--n", "2000", "--K", "5", "--kappa", "2", "--gamma", "0.05",
            "--k-grid", "100,2000", "--replications", "1000"]
    assert main(argv) == 0
    rows = _rows(capsys.readouterr().out)
    assert float(rows[1]["bound"]) < 1


def test_sweep_columns(capsys):
    argv = ["sweep", "--builtin", SC, "--strategy", "threshold", "--n", "2000", "--rp", "0.3,0.6",
            "--replications", "2"]
    assert main(argv) == 0
    rows = _rows(capsys.readouterr().out)
    assert list(rows[0]) == ["R_p", "lambda", "rate_mean", "rate_ci", "rib", "fixed_lower_bound"]
    assert len(rows) == 2


def test_examples_manifest_lists_every_criterion(tmp_path, capsys):
    assert main(["examples", "--quick", "--only", "AC1,AC3", "--out", str(tmp_path)]) == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert set(manifest["criteria"]) == set(RUNNERS) == {f"AC{i}" for i in range(1, 11)}
    assert manifest["criteria"]["AC1"]["run"] and manifest["criteria"]["AC1"]["file"] == "ac1.csv"
    assert not manifest["criteria"]["AC5"]["run"]
    assert (tmp_path / "ac3.csv").read_text().startswith("# arqradio.ac3/1")
    assert "AC1" in capsys.readouterr().out


def test_missing_scenario_field_named(tmp_path, capsys):
    d = scenario_to_dict(builtin_scenario(SC))
    del d["nu"]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(d))
    assert main(["rib", "--scenario", str(path)]) == 2
    assert "'nu'" in capsys.readouterr().err


def test_io_error_exit_code(capsys):
    assert main(["rib", "--scenario", "/nonexistent/sc.json"]) == 2
    assert "cannot read" in capsys.readouterr().err


def test_invalid_override_rejected(capsys):
    argv = ["simulate", "--builtin", SC, "--strategy", "fixed", "--n", "1000", "--gamma", "0.5"]
    assert main(argv) == 2
    assert "gamma" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--builtin", SC, "--n", "1000", "--K", "abc"])
    assert exc.value.code == 2


def test_invalid_scenario_rejected(capsys):
    assert main(["rib", "--builtin", "example1:P=3,eps0=0.95,eps1=0.9"]) == 2
    assert "eps-above-silent" in capsys.readouterr().err


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "arqradio", "rib", "--builtin", SC],
                         capture_output=True, text=True, check=True)
    assert out.stdout.startswith("# arqradio.rib/1")
