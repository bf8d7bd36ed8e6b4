import csv
import io
import json
import subprocess
import sys

import pytest

from volterra_msm.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_methods_list(capsys):
    code, out, _ = run(capsys, "methods", "list")
    assert code == 0
    assert "bdf6" in out and "nystrom2" in out


def test_methods_list_json(capsys):
    code, out, _ = run(capsys, "methods", "list", "--json")
    data = json.loads(out)
    assert code == 0 and len(data["methods"]) == 12


def test_methods_analyze(capsys):
    code, out, _ = run(capsys, "methods", "analyze", "trapezoidal", "--json")
    info = json.loads(out)
    assert info["sigma_von_neumann"] and not info["sigma_schur"]
    assert info["admitted"] is False


def test_unknown_method_exit_2(capsys):
    code, _, err = run(capsys, "methods", "analyze", "rk4")
    assert code == 2 and "unknown method" in err


def test_unknown_problem_exit_2(capsys):
    code, _, _ = run(capsys, "solve", "--problem", "9", "--method", "ab2", "--n", "16", "--delta", "0")
    assert code == 2


def test_missing_option_exit_2(capsys):
    code, _, err = run(capsys, "solve", "--problem", "1")
    assert code == 2 and "--method" in err


def test_noise_too_large_exit_2(capsys):
    code, _, err = run(capsys, "balance", "--problem", "4", "--method", "ab2", "--delta", "0.5")
    assert code == 2 and "h_bar" in err


def test_numerical_failure_exit_3(capsys, monkeypatch):
    from volterra_msm import cli
    from volterra_msm.errors import SingularStartSystem

    def boom(*a, **k):
        raise SingularStartSystem("starting system singular")

    monkeypatch.setattr(cli, "solve", boom)
    code, _, err = run(capsys, "solve", "--problem", "1", "--method", "ab2", "--n", "16", "--delta", "0")
    assert code == 3 and "numerical failure" in err


def test_solve_csv_stdout(capsys):
    code, out, _ = run(capsys, "solve", "--problem", "1", "--method", "ab2", "--n", "16", "--delta", "0", "--csv", "-")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out.split("N = ")[0])))
    assert rows[0] == ["n", "x_n", "u_delta", "u_exact", "abs_err"]
    assert len(rows) == 1 + 16


def test_solve_json_and_path(capsys):
    outs = []
    for path in ("weightform", "recursive"):
        code, out, _ = run(capsys, "solve", "--problem", "3", "--method", "bdf2", "--n", "32", "--delta", "1e-6",
                           "--path", path, "--json", "--seed", "3")
        assert code == 0
        outs.append(json.loads(out))
    assert outs[0]["max_err"] == pytest.approx(outs[1]["max_err"], rel=1e-8)


def test_config_file_and_flag_precedence(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"problem": 1, "method": "ab2", "n": 16, "delta": 0.0}))
    _, out1, _ = run(capsys, "solve", "--config", str(cfg), "--json")
    _, out2, _ = run(capsys, "solve", "--config", str(cfg), "--n", "32", "--json")
    assert json.loads(out1)["N"] == 16
    assert json.loads(out2)["N"] == 32


def test_sweep_csv_file(capsys, tmp_path):
    target = tmp_path / "t1.csv"
    code, out, _ = run(capsys, "sweep", "--problem", "1", "--method", "nystrom2", "--nu", "5:6", "--n-seeds", "2",
                       "--csv", str(target))
    assert code == 0
    with open(target, newline="") as fh:
        text = fh.read()
    assert text == out
    assert text.startswith("N,delta,rel_delta_pct,max_err,ratio\r\n")


def test_sweep_bad_nu(capsys):
    code, _, _ = run(capsys, "sweep", "--problem", "1", "--method", "ab2", "--nu", "1:4")
    assert code == 2


def test_balance_cli(capsys):
    code, out, _ = run(capsys, "balance", "--problem", "4", "--method", "ab2", "--delta", "1e-5", "--beta", "13",
                       "--json")
    assert code == 0
    assert json.loads(out)["rows"][0]["N_chosen"] == 92


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "volterra_msm", "methods", "list"], capture_output=True, text=True)
    assert proc.returncode == 0 and "ab2" in proc.stdout
