import pytest
import sympy

from odeinv.expr import normalize, parse_term
from odeinv.lie import (CertificateCache, ODESystem, RankCertificate, RankExceeded,
                        diff_radical_formula, higher_lie, lie_derivative, rank_certificate)
from oracles import lie_sympy, to_sympy

SYSTEMS = {
    "alpha_e": {"u": "-v + u*(1 - u^2 - v^2)/4", "v": "u + v*(1 - u^2 - v^2)/4"},
    "rotation": {"x": "y", "y": "-x"},
    "exp_sin": {"x": "exp(sin(x))"},
    "flight": {"x": "nu*cos(th)", "y": "nu*sin(th)", "th": "om"},
}


@pytest.mark.parametrize("system, term", [
    ("alpha_e", "u^2 + v^2 - 1"),
    ("alpha_e", "u*v"),
    ("rotation", "x^3 - y"),
    ("exp_sin", "x + x^2"),
    ("exp_sin", "sin(x)*exp(x)"),
    ("flight", "x*cos(th) + y^2"),
])
def test_lie_derivative_against_sympy(system, term):
    ode = ODESystem.from_equations(SYSTEMS[system])
    e = parse_term(term)
    assert sympy.expand(to_sympy(lie_derivative(e, ode)) - lie_sympy(e, ode)) == 0


@pytest.mark.parametrize("system, term, rank", [
    ("alpha_e", "u^2 + v^2 - 1", 1),
    ("rotation", "x^2 + y^2", 1),
    ("rotation", "x", 2),
    ("rotation", "x*y", 2),
    ("exp_sin", "x + x^2", 2),
    ("flight", "x", 3),
])
def test_known_ranks(system, term, rank):
    ode = ODESystem.from_equations(SYSTEMS[system])
    cert = rank_certificate(parse_term(term), ode)
    assert cert.rank == rank
    assert cert.verify()
    for i, L in enumerate(cert.lies):
        assert L == normalize(higher_lie(parse_term(term), ode, i))


def test_rank_limit():
    ode = ODESystem.from_equations(SYSTEMS["rotation"])
    with pytest.raises(RankExceeded):
        rank_certificate(parse_term("x*y"), ode, max_rank=1)


def test_cache_serves_negation():
    ode = ODESystem.from_equations(SYSTEMS["rotation"])
    cache = CertificateCache()
    c = rank_certificate(parse_term("x"), ode, cache=cache)
    assert len(cache) == 1
    n = rank_certificate(parse_term("-x"), ode, cache=cache)
    assert n.rank == c.rank and n.term == normalize(parse_term("-x"))
    assert len(cache) == 1


def test_bad_certificate_rejected():
    x = parse_term("x")
    with pytest.raises(AssertionError):
        RankCertificate(x, 1, (x, parse_term("y")), (parse_term("1"),))
    with pytest.raises(ValueError):
        RankCertificate(x, 2, (x,), ())


def test_reversed_flips_lie_derivative():
    ode = ODESystem.from_equations(SYSTEMS["alpha_e"])
    e = parse_term("u^3 - v")
    assert normalize(lie_derivative(e, ode.reversed()) + lie_derivative(e, ode)) == parse_term("0")


def test_clock_and_parameters():
    ode = ODESystem.from_equations(SYSTEMS["flight"])
    assert ode.parameters == ("nu", "om")
    clocked = ode.with_clock("x")
    assert clocked.states[-1] == "x1" and clocked.has_clock()


def test_diff_radical_formula_text():
    from odeinv.formula import formula_text
    ode = ODESystem.from_equations(SYSTEMS["rotation"])
    assert formula_text(diff_radical_formula(parse_term("x"), ode)) == "x = 0 & y = 0"
