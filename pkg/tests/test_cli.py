import subprocess
import sys
from pathlib import Path

import pytest

from odeinv.cli import main

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    captured = capsys.readouterr()
    keys = {}
    if "\n--\n" in captured.out:
        for line in captured.out.split("\n--\n", 1)[1].splitlines():
            k, _, v = line.partition(": ")
            assert k not in keys, f"duplicate key {k}"
            keys[k] = v
    return code, keys, captured


@pytest.mark.parametrize("name, code, status", [
    ("circle.ode", 0, "invariant"),
    ("open_disk.ode", 0, "invariant"),
    ("rotation_origin.ode", 0, "invariant"),
    ("circle_cut.ode", 0, "invariant"),
    ("tan.ode", 0, "invariant"),
    ("exp_positive.ode", 0, "invariant"),
    ("half_disk.ode", 1, "not-invariant"),
    ("axis.ode", 1, "not-invariant"),
    ("tan_progress.ode", 4, "undetermined"),
])
def test_check_exit_codes(capsys, name, code, status):
    got, keys, _ = run(capsys, "check", PROBLEMS / name)
    assert got == code
    assert keys["status"] == status and keys["exit"] == str(code)


def test_disproof_report(capsys):
    code, keys, _ = run(capsys, "check", PROBLEMS / "half_disk.ode")
    assert code == 1
    assert keys["witness.certified_64"] == "true" and keys["witness.certified_128"] == "true"
    assert keys["caveat"] == "candidate-only"
    assert (keys["point.u"], keys["point.v"]) == ("0", "1/2")


def test_certificate_write_and_check(capsys, tmp_path):
    out = tmp_path / "circle.cert"
    code, keys, _ = run(capsys, "check", PROBLEMS / "circle.ode", "--cert", out)
    assert code == 0 and keys["certificate"] == str(out)
    code, keys, _ = run(capsys, "cert-check", out)
    assert code == 0 and keys["ok"] == "true"
    out.write_text(out.read_text().replace("g = -1/2*u^2 - 1/2*v^2", "g = -u^2 - 1/2*v^2"))
    code, keys, _ = run(capsys, "cert-check", out)
    assert code == 2 and keys["ok"] == "false" and keys["path"]
    out.write_text(out.read_text().replace("v1", "v9", 1))
    assert run(capsys, "cert-check", out)[0] == 3


@pytest.mark.parametrize("argv, code", [
    (["check", "undeclared.ode"], 3),
    (["check", "missing.ode"], 6),
    (["frobnicate"], 3),
    (["check"], 3),
    (["check", "circle.ode", "--method", "magic"], 3),
    (["check", "axis.ode", "--max-rank", "1", "--method", "dri"], 5),
    (["cert-check", "missing.cert"], 6),
])
def test_error_exit_codes(capsys, argv, code):
    argv = [str(PROBLEMS / a) if a.endswith((".ode", ".cert")) else a for a in argv]
    assert run(capsys, *argv)[0] == code


def test_rank(capsys):
    code, keys, _ = run(capsys, "rank", PROBLEMS / "exp_sin_rank.ode")
    assert code == 0 and keys["rank"] == "2" and keys["identity"] == "verified"
    assert keys["lie[1]"] == "2*x*exp(sin(x)) + exp(sin(x))"


@pytest.mark.parametrize("direction, keys_expected", [
    ("forward", {"sigma.forward"}),
    ("backward", {"sigma.backward"}),
    ("both", {"sigma.forward", "sigma.backward"}),
])
def test_progress(capsys, direction, keys_expected):
    code, keys, _ = run(capsys, "progress", PROBLEMS / "rank_one.ode", "--direction", direction)
    assert code == 0
    assert keys_expected <= set(keys)
    for k in keys_expected:
        assert keys[k] == "x*y - 1 > 0"


def test_polyize(capsys, tmp_path):
    target = tmp_path / "flight_poly.ode"
    code, _, cap = run(capsys, "polyize", PROBLEMS / "flight.ode", "-o", target)
    assert code == 0
    assert "z1' = omega*z2" in cap.out and "z2' = -omega*z1" in cap.out
    assert target.read_text() == cap.out
    # the output re-parses; with no [candidate] a check is a usage error
    assert run(capsys, "check", target)[0] == 3


def test_reduce_hp(capsys, tmp_path):
    cert = tmp_path / "loop.cert"
    code, keys, _ = run(capsys, "reduce-hp", PROBLEMS / "loop.hp", "--cert", cert)
    assert code == 0 and keys["reduced"].startswith("3*x^4")
    assert run(capsys, "cert-check", cert)[0] == 0
    assert run(capsys, "reduce-hp", PROBLEMS / "loop.hp", "--max-loop", "1")[0] == 5


def test_export_smt(capsys, tmp_path):
    target = tmp_path / "circle.smt2"
    code, _, _ = run(capsys, "export-smt", PROBLEMS / "circle.ode", "-o", target)
    assert code == 0
    text = target.read_text()
    assert text.startswith("; odeinv verification conditions") and text.endswith("(exit)\n")


def test_simulate(capsys):
    code, _, cap = run(capsys, "simulate", PROBLEMS / "circle.ode", "--init", "u=1",
                       "--init", "v=0", "--horizon", "1/10", "--step", "1/20")
    assert code == 0
    lines = cap.out.strip().splitlines()
    assert lines[0] == "t,u,v,error" and len(lines) == 4
    assert run(capsys, "simulate", PROBLEMS / "circle.ode", "--init", "u=1")[0] == 3


def test_reports_are_deterministic(capsys):
    first = run(capsys, "check", PROBLEMS / "half_disk.ode")[2].out
    second = run(capsys, "check", PROBLEMS / "half_disk.ode")[2].out
    assert first == second


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "odeinv.cli", "check",
                           str(PROBLEMS / "circle.ode")], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "status: invariant" in proc.stdout
