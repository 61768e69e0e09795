import random
from fractions import Fraction
from pathlib import Path

import pytest

from odeinv.expr import evaluate, normalize, parse_term, to_text
from odeinv.formula import formula_text
from odeinv.invariance import check_darboux_eq, synthesize_cofactor
from odeinv.lie import ODESystem, lie_derivative
from odeinv.problem import load_problem, parse_problem
from odeinv.transform import (HPReduceError, Loop, NonPolynomialLoop, hp_reduce,
                              hp_reduce_traced, hp_replay, parse_program, polynomialize,
                              program_text)
import hp_oracle

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"


def rename(ivp):
    """Map fresh variables to the chain element names they stand for."""
    return {z: to_text(h) for z, h in ivp.definitions if not isinstance(h, tuple)}


def test_flight_dynamics():
    prob = load_problem(PROBLEMS / "flight.ode")
    ivp = polynomialize(prob.system())
    names = {v: k for k, v in rename(ivp).items()}
    z1, z2 = names["sin(theta)"], names["cos(theta)"]
    rhs = dict(zip(ivp.ode.states, ivp.ode.rhs))
    assert rhs[z1] == normalize(parse_term(f"omega*{z2}"))
    assert rhs[z2] == normalize(parse_term(f"-omega*{z1}"))
    assert rhs["x"] == normalize(parse_term(f"nu*{z2}"))
    assert rhs["y"] == normalize(parse_term(f"nu*{z1}"))
    assert all(c.rel == "=" for c in ivp.constraints)


def test_tan_reciprocal():
    prob = load_problem(PROBLEMS / "tan.ode")
    ode = prob.system()
    assert ode.rhs_of("y") == normalize(parse_term("sin(x)^2*y^3"))
    e = parse_term("cos(x)*y - 1")
    assert synthesize_cofactor(e, ode) == normalize(parse_term("sin(x)^2*y^2"))
    assert check_darboux_eq(e, ode=ode).verdict == "proved"


def test_full_polynomialization_is_polynomial():
    ode = ODESystem.from_equations({"x": "exp(sin(x))"})
    ivp = polynomialize(ode)
    from odeinv.expr import is_polynomial
    assert all(is_polynomial(f) for f in ivp.ode.rhs)
    assert len(ivp.definitions) == 3
    # the fresh variables satisfy their definitions along the flow: lie(z - h) vanishes on z = h
    subst = {z: h for z, h in ivp.definitions}
    for z, h in ivp.definitions:
        lhs = ivp.ode.rhs_of(z)
        from odeinv.expr import substitute
        assert normalize(substitute(lhs, subst)) == lie_derivative(h, ode)


def test_polyize_text_reparses():
    prob = load_problem(PROBLEMS / "flight.ode")
    text = polynomialize(prob.system()).to_text()
    again = parse_problem(text, "<polyize>")
    assert again.ode.dimension == 5


@pytest.mark.parametrize("text", [
    "x := x + 1",
    "?x != 0",
    "{x' = y, y' = -x & x != 0}",
    "(x := 1 ++ y := 2); {x := x*y}*",
    "{x' = y, y' = -x}; ?y - 1 != 0",
])
def test_program_round_trip(text):
    a = parse_program(text)
    assert parse_program(program_text(a)) == a


@pytest.mark.parametrize("program, post, expected", [
    ("x := x + 1", "x", "x + 1"),
    ("?y != 0", "x", "x*y"),
    ("x := 1 ++ x := y", "x - 1", "(y - 1)^2"),
    ("{x' = y, y' = -x}", "x", "x^2 + y^2"),
    ("{x' = y, y' = -x}", "x^2 + y^2 - 1", "(x^2 + y^2 - 1)^2"),
])
def test_reduction_table(program, post, expected):
    r = hp_reduce(parse_program(program), parse_term(post))
    assert r == normalize(parse_term(expected))


def test_loop_reduction_and_replay():
    prob = load_problem(PROBLEMS / "loop.hp")
    e = parse_term("x")
    trace = hp_reduce_traced(prob.program, e)
    assert hp_replay(prob.program, e, trace) == trace.result
    with pytest.raises(HPReduceError):
        hp_replay(prob.program, parse_term("y"), trace)


def test_loop_bound():
    a = parse_program("{x := y; y := w; w := x}*")
    with pytest.raises(HPReduceError):
        hp_reduce(a, parse_term("x"), max_loop=2)
    assert hp_reduce(a, parse_term("x"), max_loop=4) == normalize(parse_term("x^2 + y^2 + w^2"))


def test_non_polynomial_loop():
    a = Loop(parse_program("x := x + 1"))
    with pytest.raises(NonPolynomialLoop):
        hp_reduce(a, parse_term("exp(x)"))


@pytest.mark.parametrize("seed", range(5))
def test_reduction_matches_execution(seed):
    rng = random.Random(seed)
    a = hp_oracle.random_program(rng, 2)
    e = hp_oracle.random_post(rng)
    try:
        r = hp_reduce(a, e, max_loop=5)
    except HPReduceError:
        pytest.skip("loop chain did not stabilize")
    for x in range(-2, 3):
        for y in range(-2, 3):
            pt = {"x": Fraction(x), "y": Fraction(y)}
            try:
                expected = hp_oracle.box_holds(a, e, pt)
            except hp_oracle.TooManyStates:
                pytest.skip("execution tree too large")
            assert (evaluate(r, pt) == 0) == expected
