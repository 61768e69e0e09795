from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from odeinv.expr import (App, Const, DEFAULT_REGISTRY, FunctionSymbol, ParseError, Registry,
                         RegistryError, Var, applications, as_term, evaluate, expand, free_vars,
                         is_polynomial, neg, normalize, parse_term, partial_derivative,
                         substitute, to_text)
from oracles import to_sympy, sympy_equal

VARS = ("x", "y", "w")


def terms(max_leaves=12):
    leaf = st.one_of(st.sampled_from([Var(v) for v in VARS]),
                     st.integers(-4, 4).map(lambda k: Const(Fraction(k))),
                     st.sampled_from([Const(Fraction(1, 2)), Const(Fraction(-3, 7))]))

    def extend(inner):
        return st.one_of(
            st.tuples(inner, inner).map(lambda ab: ab[0] + ab[1]),
            st.tuples(inner, inner).map(lambda ab: ab[0] * ab[1]),
            st.tuples(inner, st.integers(0, 3)).map(lambda ap: ap[0] ** ap[1]),
            st.tuples(st.sampled_from(["exp", "sin", "cos"]), inner).map(
                lambda fa: App(fa[0], (fa[1],))),
        )

    return st.recursive(leaf, extend, max_leaves=max_leaves)


@settings(max_examples=150, deadline=None)
@given(terms())
def test_normalize_agrees_with_sympy(t):
    assert sympy_equal(normalize(t), t)


@settings(max_examples=150, deadline=None)
@given(terms())
def test_text_round_trip(t):
    n = normalize(t)
    assert normalize(parse_term(to_text(n))) == n
    assert normalize(n) == n


@settings(max_examples=100, deadline=None)
@given(terms(), st.sampled_from(VARS))
def test_partial_derivative_against_sympy(t, x):
    d = partial_derivative(t, x)
    assert sympy.expand(to_sympy(d) - sympy.diff(to_sympy(t), sympy.Symbol(x))) == 0


@settings(max_examples=100, deadline=None)
@given(terms(), st.fractions(min_value=-3, max_value=3, max_denominator=9),
       st.fractions(min_value=-3, max_value=3, max_denominator=9))
def test_exact_evaluation_matches_sympy_on_polynomials(t, a, b):
    if not is_polynomial(t):
        return
    env = {"x": a, "y": b, "w": Fraction(1, 3)}
    expected = to_sympy(t).subs({sympy.Symbol(k): sympy.Rational(v.numerator, v.denominator)
                                 for k, v in env.items()})
    assert evaluate(t, env) == Fraction(int(expected.p), int(expected.q))


@pytest.mark.parametrize("text, expected", [
    ("x + x", "2*x"),
    ("(x + 1)^2", "x^2 + 2*x + 1"),
    ("x - x", "0"),
    ("x/3 + 2/3*x", "x"),
    ("-(-x)", "x"),
    ("sin(x)*sin(x) + cos(x)^2", "sin(x)^2 + cos(x)^2"),
    ("exp(x + x)", "exp(2*x)"),
])
def test_normal_forms(text, expected):
    assert normalize(parse_term(text)) == normalize(parse_term(expected))


def test_normalization_is_syntactic_for_functions():
    # no trigonometric identities: sin^2 + cos^2 stays as it is
    t = normalize(parse_term("sin(x)^2 + cos(x)^2"))
    assert t != Const(Fraction(1))
    assert applications(t) == {App("sin", (Var("x"),)), App("cos", (Var("x"),))}


@pytest.mark.parametrize("text, line, column", [
    ("x +", 1, 4),
    ("x $ y", 1, 3),
    ("2^x", 1, 3),
    ("x/y", 1, 2),
    ("1.5*x", 1, 1),
    ("foo(x)", 1, 1),
    ("x +\n* y", 2, 1),
])
def test_parse_errors_report_positions(text, line, column):
    with pytest.raises((ParseError, KeyError)) as info:
        parse_term(text)
    if isinstance(info.value, ParseError):
        assert (info.value.line, info.value.column) == (line, column)


@pytest.mark.parametrize("text, vars_", [
    ("x*y + exp(w)", {"x", "y", "w"}),
    ("3", set()),
    ("sin(cos(x))", {"x"}),
])
def test_free_vars(text, vars_):
    assert free_vars(parse_term(text)) == vars_


def test_substitute_and_neg():
    t = parse_term("x^2 + y")
    s = normalize(substitute(t, {"x": parse_term("y + 1")}))
    assert s == normalize(parse_term("y^2 + 3*y + 1"))
    assert normalize(neg(t) + t) == Const(Fraction(0))


def test_expand_returns_fresh_dict():
    t = parse_term("x + 1")
    first = expand(t)
    first.clear()
    assert expand(t)


def test_as_term_conversions():
    assert as_term(3) == Const(Fraction(3))
    assert as_term(Fraction(1, 2)) == Const(Fraction(1, 2))
    assert normalize(as_term("x*2")) == normalize(parse_term("2*x"))
    with pytest.raises(TypeError):
        as_term(1.5)


def test_evaluate_refuses_functions_without_implementation():
    with pytest.raises(KeyError):
        evaluate(parse_term("exp(x)"), {"x": Fraction(0)})
    assert evaluate(parse_term("exp(x) + 1"), {"x": Fraction(0)}, {"exp": lambda v: 1}) == 2


def test_custom_registry_closure():
    g = FunctionSymbol("g", 1, (App("g", (Var("#0"),)),))
    reg = Registry([g])
    t = parse_term("g(x^2)", reg)
    assert normalize(partial_derivative(t, "x", reg)) == normalize(parse_term("2*x*g(x^2)", reg))
    with pytest.raises(RegistryError):
        Registry([FunctionSymbol("h", 1, (App("k", (Var("#0"),)),))])
    with pytest.raises(RegistryError):
        Registry([FunctionSymbol("h", 1, (Var("x"),))])


def test_default_registry_derivatives():
    for name, expected in [("exp", "exp(x)"), ("sin", "cos(x)"), ("cos", "-sin(x)")]:
        assert name in DEFAULT_REGISTRY
        d = partial_derivative(parse_term(f"{name}(x)"), "x")
        assert d == normalize(parse_term(expected))
