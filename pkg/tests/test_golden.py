from pathlib import Path

import pytest

import corpus
from odeinv.arith import run_solver
from odeinv.proofcert import check_certificate

GOLDEN = Path(__file__).resolve().parent / "golden"


@pytest.mark.parametrize("name", corpus.all_certificate_names())
def test_certificate_bytes(name):
    stored = (GOLDEN / f"{name}.cert").read_text(encoding="utf-8")
    assert corpus.certificate_text(name) == stored
    assert check_certificate(stored).ok


@pytest.mark.parametrize("name", sorted(corpus.SCRIPTS))
def test_script_bytes(name):
    stored = (GOLDEN / f"{name}.smt2").read_text(encoding="utf-8")
    assert corpus.script_text(name) == stored


@pytest.mark.parametrize("name, status", [(n, s) for n, (_, _, s) in corpus.CERTIFICATES.items()])
def test_recorded_verdicts(name, status):
    verdict, _ = corpus.certificate(name)
    assert verdict.status == status


@pytest.mark.z3
@pytest.mark.parametrize("name, answers", [
    ("circle_dri", ["unsat"]),
    ("circle_dbx", ["unsat"]),
    ("rotation_vdbx", ["unsat", "unsat"]),
    ("open_disk_sai", ["unsat", "unsat"]),
    ("exp_positive_lemmas", ["unsat", "unsat"]),
])
def test_solver_proves_premises(name, answers):
    assert run_solver((GOLDEN / f"{name}.smt2").read_text()) == answers


@pytest.mark.z3
@pytest.mark.parametrize("name", ["axis_dri", "half_disk_sai", "exp_positive_plain"])
def test_solver_finds_countermodels(name):
    # without lemmas exp is uninterpreted, so the plain exp script has a spurious model
    assert "sat" in run_solver((GOLDEN / f"{name}.smt2").read_text())
