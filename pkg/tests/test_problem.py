from pathlib import Path

import pytest

from odeinv.formula import TRUE, parse_formula
from odeinv.problem import ProblemError, load_problem, parse_problem

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"


@pytest.mark.parametrize("path", sorted(p.name for p in PROBLEMS.iterdir()
                                       if p.name != "undeclared.ode"))
def test_corpus_parses(path):
    prob = load_problem(PROBLEMS / path)
    assert prob.source.endswith(path)


def test_sections_and_options():
    prob = parse_problem("""
# comment
[variables]
u v
[parameters]
a
[ode]
u' = a*v   # trailing comment
v' = -u
[domain]
u >= -1 &
u <= 1
[candidate]
u^2 + v^2 = 1
[options]
method = dbx
max_rank = 4
""", "inline")
    assert prob.variables == ("u", "v") and prob.parameters == ("a",)
    assert prob.options["method"] == "dbx" and prob.options["max_rank"] == 4
    ode = prob.system()
    assert ode.domain == parse_formula("u >= -1 & u <= 1")
    assert prob.candidate == parse_formula("u^2 + v^2 = 1")


def test_defaults():
    prob = parse_problem("[variables]\nx\n[ode]\nx' = 1\n", "inline")
    assert prob.system().domain == TRUE
    assert prob.candidate is None and prob.cuts == ()


@pytest.mark.parametrize("text, line", [
    ("[variables]\nu\n[ode]\nu' = -v\n", 4),                  # undeclared v
    ("[variables]\nu, v\n[ode]\nu' = v\n", 0),                # v has no equation
    ("[variables]\nu\n[ode]\nu' = 1\nu' = 2\n", 5),           # duplicate equation
    ("[variabels]\nu\n", 1),                                  # unknown section
    ("[variables]\nu\n[options]\ncolour = red\n", 4),         # unknown option
    ("[variables]\nu\n[options]\nmax_rank = many\n", 4),      # bad value
    ("[variables]\nx\n[reciprocals]\ny = cos(x)\n", 4),      # not of the form 1/d
    ("u' = 1\n", 1),                                          # text outside a section
    ("[variables]\nu\n[ode]\nu' = 1.5\n", 4),                 # decimal literal
])
def test_errors_carry_positions(text, line):
    with pytest.raises(ProblemError) as info:
        parse_problem(text, "bad.ode")
    assert str(info.value).startswith("bad.ode:")
    if line:
        assert info.value.line == line


def test_missing_file():
    with pytest.raises(OSError):
        load_problem(PROBLEMS / "does-not-exist.ode")


def test_reciprocal_system():
    prob = load_problem(PROBLEMS / "tan.ode")
    ode = prob.system()
    assert ode.states == ("x", "y")
    assert str(ode.rhs_of("y")) in ("sin(x)^2*y^3", "y^3*sin(x)^2")
