import json
import subprocess
import sys

import pytest

from lsztr import cli
from lsztr.errors import NonConvergence


def _model(tmp_path, lam=0):
    path = tmp_path / "model.json"
    path.write_text(json.dumps({"eigenvalues_E": [["1/2", 1], [1.5, 2]],
                                "eigenvalues_Etilde": [[1, 3]], "lambda": lam}))
    return str(path)


def test_solve_free_model(tmp_path):
    out = tmp_path / "curve.json"
    assert cli.run(["solve", "--config", _model(tmp_path), "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["curve"]["eps"] == [[0.5, 0.0], [1.5, 0.0]]
    assert data["curve"]["eps_tilde"][0][0] == -1.0


def test_map_counts_csv(capsys):
    assert cli.run(["map-counts", "--g", "0", "--n", "1", "--order", "5"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].startswith("g,n,order,integer")
    assert lines[-1].split(",")[3] == "2916"


def test_json_is_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["omega", "--config", _model(tmp_path, "1/10"), "-g", "1", "-n", "1",
            "--points", "0.3+0.7i"]
    assert cli.run(args + ["--out", str(a)]) == 0
    assert cli.run(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    val = json.loads(a.read_text())["value"]
    assert isinstance(val, list) and len(val) == 2


def test_check_suite_is_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["check", "--suite", "h-p", "--seed", "7", "--npts", "1", "--format", "csv"]
    assert cli.run(args + ["--out", str(a)]) == 0
    assert cli.run(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_series_command(capsys):
    assert cli.run(["series", "--boundaries", "0,1", "--order", "1", "--format", "csv"]) == 0
    out = capsys.readouterr().out
    assert "g,order,coefficient" in out


def test_correlator_limit_mode(capsys):
    assert cli.run(["correlator", "--boundaries", "0,0,0,1"]) == 1
    assert cli.run(["correlator", "--boundaries", "0,0,0,1", "--limit"]) == 0


@pytest.mark.parametrize("argv", [
    ["bogus"],
    ["omega", "-g", "1"],
    ["omega", "-g", "1", "-n", "2", "--points", "0.3+0.7i"],
    ["omega", "-g", "1", "-n", "1", "--points", "abc"],
    ["correlator", "--boundaries", "0,1,0"],
    ["correlator", "--boundaries", "0,7"],
    ["check", "--suite", "nope"],
    ["solve", "--config", "/nonexistent/model.json"],
])
def test_invalid_input_exit_one(argv, capsys):
    assert cli.run(argv) == 1
    err = json.loads(capsys.readouterr().err)
    assert "error" in err and "message" in err


def test_nonconvergence_exit_two(monkeypatch, capsys):
    def boom(*a, **k):
        raise NonConvergence("no")
    monkeypatch.setattr(cli, "solve_curve", boom)
    assert cli.run(["solve"]) == 2
    assert json.loads(capsys.readouterr().err)["error"] == "NonConvergence"


def test_failed_suite_exit_three(monkeypatch):
    monkeypatch.setitem(cli.HANDLERS, "check", lambda args: ({"passed": False}, None, False))
    assert cli.run(["check", "--suite", "limits"]) == 3


def test_limits_suite_passes():
    assert cli.run(["check", "--suite", "limits", "--seed", "1"]) == 0


def test_precision_env_override(monkeypatch, tmp_path):
    monkeypatch.setenv("LSZ_TR_PREC", "96")
    out = tmp_path / "c.json"
    try:
        assert cli.run(["solve", "--precision", "53", "--out", str(out)]) == 0
        from lsztr.numerics import get_precision
        assert get_precision() == 96
    finally:
        monkeypatch.delenv("LSZ_TR_PREC")
        from lsztr.numerics import set_precision
        set_precision(53)


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "lsztr", "solve", "--config", _model(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["curve"]["rho"][0] == [1.0, 0.0]
