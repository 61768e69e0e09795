import math
from fractions import Fraction

import mpmath
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from odeinv.arith import (Interval, PsatzWitness, SamplerConfig, TrivialWitness,
                          certify_refutation, check_infeasibility, decide, eval_interval,
                          export_smtlib, find_infeasibility, interval_sign, isolate_roots, refute,
                          run_solver, simulate, univariate_feasible)
from odeinv.arith.interval import pi_enclosure
from odeinv.arith.sturm import rational_roots, upoly_eval
from odeinv.expr import parse_term
from odeinv.formula import Disjunct, parse_formula
from odeinv.lie import ODESystem
from oracles import mp_value

rationals = st.fractions(min_value=-20, max_value=20, max_denominator=50)


@pytest.mark.parametrize("text", ["exp(x)", "sin(x)", "cos(x)", "exp(sin(x))*cos(x^2) - x/3",
                                  "sin(exp(x)) + cos(x)^3"])
@settings(max_examples=40, deadline=None)
@given(x=rationals)
def test_interval_encloses_mpmath(text, x):
    t = parse_term(text)
    iv = eval_interval(t, {"x": x}, 64)
    ref = mp_value(t, {"x": x}, dps=60)
    with mpmath.workdps(60):
        assert mpmath.mpf(iv.lo.numerator) / iv.lo.denominator <= ref
        assert ref <= mpmath.mpf(iv.hi.numerator) / iv.hi.denominator
    assert iv.hi - iv.lo < Fraction(1, 2 ** 30) * max(1, abs(iv.hi))


@pytest.mark.parametrize("prec", [64, 128, 512])
def test_pi_enclosure(prec):
    lo, hi = pi_enclosure(prec)
    with mpmath.workprec(prec + 40):
        assert mpmath.mpf(lo.numerator) / lo.denominator < mpmath.pi < mpmath.mpf(hi.numerator) / hi.denominator
    assert hi - lo < Fraction(1, 2 ** (prec - 4))


def test_interval_arithmetic_is_outward():
    a = Interval(Fraction(1, 3), Fraction(1, 2), 16)
    b = a * a - a
    assert b.lo <= Fraction(1, 9) - Fraction(1, 2) and b.hi >= Fraction(1, 4) - Fraction(1, 3)
    with pytest.raises(ValueError):
        Interval(1, 0)


@pytest.mark.parametrize("text, point, sign", [
    ("sin(x)", {"x": Fraction(0)}, 0),
    ("cos(x)", {"x": Fraction(355, 226)}, -1),  # just past pi/2
    ("exp(x) - 1 - x", {"x": Fraction(1, 10**6)}, 1),
    ("sin(x)^2 + cos(x)^2 - 1", {"x": Fraction(3)}, None),
])
def test_certified_signs(text, point, sign):
    assert interval_sign(parse_term(text), point, 64, 256) == sign


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-6, 6), min_size=2, max_size=7))
def test_root_isolation_against_sympy(coeffs):
    p = [Fraction(c) for c in coeffs]
    if not any(p[1:]):
        return
    x = sympy.Symbol("x")
    expr = sum(c * x ** i for i, c in enumerate(coeffs))
    expected = len(sympy.Poly(expr, x).real_roots()) if expr != 0 else 0
    distinct = len(set(sympy.Poly(expr, x).real_roots()))
    boxes = isolate_roots(p)
    assert len(boxes) == distinct <= expected
    for a, b in boxes:
        assert upoly_eval(p, a) != 0 and upoly_eval(p, b) != 0


@pytest.mark.parametrize("coeffs, roots", [
    ([-2, 1], [2]),
    ([-1, 0, 4], [Fraction(-1, 2), Fraction(1, 2)]),
    ([-2, 0, 1], []),
    ([0, 0, 1], [0]),
])
def test_rational_roots(coeffs, roots):
    assert sorted(rational_roots([Fraction(c) for c in coeffs])) == sorted(roots)


@pytest.mark.parametrize("constraints, feasible", [
    ([([-1, 0, 1], ">"), ([4, 0, -1], ">")], True),     # 1 < x^2 < 4
    ([([-4, 0, 1], ">"), ([1, 0, -1], ">=")], False),   # x^2 > 4 and x^2 <= 1
    ([([-2, 0, 1], ">="), ([2, 0, -1], ">=")], True),   # x^2 = 2, irrational only
    ([([0, 0, 1], ">")], True),
    ([([0, 0, -1], ">")], False),
])
def test_univariate_feasible(constraints, feasible):
    ok, point = univariate_feasible([([Fraction(c) for c in p], r) for p, r in constraints])
    assert ok is feasible


@pytest.mark.parametrize("formula, status", [
    ("x^2 + 1 > 0", "proved"),
    ("x^2 >= 0", "proved"),
    ("x^2 - 2*x + 1 >= 0", "proved"),
    ("x*y = 1 -> x != 0", "proved"),
    ("x^2 + y^2 = 1 -> x^2 <= 1", "proved"),
    ("exp(x) > 0", "proved"),
    ("x > 0 -> x^3 > 0", "unknown"),
    ("x^2 > 0", "refuted"),
    ("x + y > 1 -> x > 1", "refuted"),
    ("sin(x) < 1/2", "refuted"),
])
def test_decide_table(formula, status):
    d = decide(parse_formula(formula))
    if status == "unknown":
        assert d.status in ("unknown", "proved")
        return
    assert d.status == status
    if d.refuted:
        assert certify_refutation(parse_formula(formula), d.point, 128)
    if d.proved:
        assert len(d.witnesses) > 0


def test_refute_is_deterministic():
    f = parse_formula("x^2 + y^2 - 3 < 0")
    a = refute(f, SamplerConfig(seed=7))
    b = refute(f, SamplerConfig(seed=7))
    assert a == b and a is not None
    assert refute(parse_formula("x^2 + 1 > 0")) is None


def test_witness_tampering_is_caught():
    d = Disjunct((parse_term("-1 - x^2"),), ())
    w = find_infeasibility(d)
    assert isinstance(w, PsatzWitness) and check_infeasibility(d, w)
    forged = PsatzWitness(w.multipliers, parse_term("x^2"))
    assert not check_infeasibility(d, forged)
    assert not check_infeasibility(d, TrivialWitness(5))
    t = Disjunct((), (parse_term("0"),))
    assert find_infeasibility(t) == TrivialWitness(0)


def test_simulator_matches_closed_form():
    ode = ODESystem.from_equations({"x": "y", "y": "-x"})
    tr = simulate(ode, {"x": Fraction(1), "y": Fraction(0)}, 2, Fraction(1, 100))
    end = tr.final
    assert abs(end["x"] - math.cos(2)) < 1e-8
    assert abs(end["y"] + math.sin(2)) < 1e-8
    assert max(tr.errors) < 1e-6


def test_simulator_multiprecision():
    ode = ODESystem.from_equations({"x": "x"})
    tr = simulate(ode, {"x": Fraction(1)}, 1, Fraction(1, 200), precision=200)
    with mpmath.workprec(200):
        assert abs(tr.final["x"] - mpmath.e) < mpmath.mpf(10) ** -9


def test_simulator_rejects_missing_values():
    ode = ODESystem.from_equations({"x": "a*x"})
    with pytest.raises(ValueError):
        simulate(ode, {"x": Fraction(1)}, 1, Fraction(1, 10))


def test_smtlib_layout_and_stability():
    fs = [parse_formula("x^2 + y^2 >= 0"), parse_formula("exp(x) > 0")]
    a = export_smtlib(fs, lemmas=True, labels=["sq", "exp"])
    assert a == export_smtlib(fs, lemmas=True, labels=["sq", "exp"])
    assert "(set-logic QF_UFNRA)" in a
    assert "(declare-fun f_exp (Real) Real)" in a
    assert a.count("(check-sat)") == 2 and a.endswith("(exit)\n")
    assert "(> (f_exp x) 0)" in a


@pytest.mark.z3
@pytest.mark.parametrize("formula, answer", [
    ("x^2 + 1 > 0", "unsat"),
    ("x^2 > 0", "sat"),
    ("x*y = 1 -> x != 0", "unsat"),
])
def test_z3_agrees(formula, answer):
    assert run_solver(export_smtlib([parse_formula(formula)])) == [answer]
