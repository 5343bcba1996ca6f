"""Command-line exit codes, report shape and determinism."""

from __future__ import annotations

import json
import subprocess
import sys

import pytest

from drinfeld.cli import main, split_prime_power

SMALL = ["--N", "40", "--D", "4"]


def test_split_prime_power():
    assert split_prime_power(9) == (3, 2)
    assert split_prime_power(7) == (7, 1)
    with pytest.raises(ValueError):
        split_prime_power(12)


def test_eval_example(capsys):
    rc = main(["eval", "--q", "3", "--r", "2", "--e", "2", "--m", "1", "--N", "120", "--D", "8",
               "--point", "z1=rootT(1,2)"])
    out = capsys.readouterr().out
    assert rc == 0
    for name in ("pi", "Eis_2", "Eis_8", "g_1", "g_2", "g_new_1", "h_2", "E[1]", "L_11", "bold_E_22", "J_1"):
        assert any(line.split()[0] == name for line in out.splitlines())


def test_eval_off_grid_weight(tmp_path):
    path = tmp_path / "r.json"
    assert main(["eval", *SMALL, "--k", "5", "--out", str(path)]) == 0
    rep = json.loads(path.read_text())
    assert rep["values"]["Eis_5"]["value"].startswith("O(")
    assert "not a multiple" in rep["values"]["Eis_5"]["note"]


def test_pi_command(tmp_path):
    path = tmp_path / "pi.json"
    assert main(["pi", "--N", "60", "--out", str(path)]) == 0
    rep = json.loads(path.read_text())
    assert rep["values"]["pi"]["value"].startswith("g^2*T^(3/2)")
    assert rep["config"]["q"] == 3


@pytest.mark.parametrize("argv", [
    ["eval", "--point", "z1=rootT(1,"],
    ["eval", "--point", "rootT(1,2)"],
    ["eval", "--q", "6"],
    ["eval", "--r", "3", "--point", "z1=T"],
    ["eval", "--N", "-4"],
    ["verify", "--suite", "nonsense"],
    ["frobnicate"],
])
def test_config_errors_exit_2(argv):
    assert main(argv) == 2


def test_precision_exhaustion_exits_3():
    assert main(["eval", "--N", "40", "--point", "z1=1+O(T^-3)"]) == 3


def test_verify_pass_and_fail_exit_codes():
    assert main(["verify", *SMALL, "--suite", "basic,serre"]) == 0
    # one shell cannot reach the requested digits
    assert main(["verify", "--N", "120", "--D", "1", "--suite", "basic"]) == 1


def test_json_report_is_byte_identical(tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"v{k}.json"
        rc = main(["verify", *SMALL, "--suite", "basic", "--suite", "gm2", "--seed", "4", "--out", str(path)])
        assert rc == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    rep = json.loads(outs[0])
    assert list(rep) == ["config", "point", "checks", "summary"]
    assert rep["config"]["seed"] == 4
    assert all("seconds" not in c for c in rep["checks"])


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "drinfeld", "verify", *SMALL, "--suite", "basic", "--out", "-"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert json.loads(res.stdout)["summary"]["failed"] == []
