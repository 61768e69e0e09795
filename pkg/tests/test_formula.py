import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from odeinv.expr import evaluate, normalize, parse_term
from odeinv.formula import (And, Atom, DNFCapExceeded, FALSE, Iff, Implies, Not, Or, TRUE,
                            formula_text, formula_vars, holds, is_strict_only, negate_matched,
                            parse_formula, progress_geq, progress_gt, progress_semianalytic,
                            sigma_geq_from_lies, sigma_gt_from_lies, sigma_zero, to_dnf)
from odeinv.lie import ODESystem, lie_sequence

GRID = [Fraction(k, 2) for k in range(-4, 5)]
ROTATION = ODESystem.from_equations({"x": "y", "y": "-x"})
SHEAR = ODESystem.from_equations({"x": "y", "y": "0"})


def first_sign(values):
    """Sign of the first nonzero entry, 0 if all vanish."""
    for v in values:
        if v:
            return 1 if v > 0 else -1
    return 0


@pytest.mark.parametrize("text, canonical", [
    ("x < 1", "1 - x > 0"),
    ("x <= y", "-x + y >= 0"),
    ("x != 0", "!(x = 0)"),
    ("!(x > 0) | y = 0 & x >= 1", "!(x > 0) | (y = 0 & x - 1 >= 0)"),
    ("x > 0 -> y > 0 -> x*y > 0", "x > 0 -> (y > 0 -> x*y > 0)"),
    ("true & x = 0", "true & x = 0"),
])
def test_parse_and_print(text, canonical):
    f = parse_formula(text)
    assert parse_formula(formula_text(f)) == f
    assert f == parse_formula(canonical)


def formulas():
    atoms = st.builds(lambda t, r: Atom(normalize(parse_term(t)), r),
                      st.sampled_from(["x", "y", "x - y", "x*y - 1", "x^2 + y - 1"]),
                      st.sampled_from(["=", ">=", ">"]))
    leaf = st.one_of(atoms, st.sampled_from([TRUE, FALSE]))

    def extend(inner):
        return st.one_of(
            st.lists(inner, min_size=2, max_size=3).map(lambda a: And(tuple(a))),
            st.lists(inner, min_size=2, max_size=3).map(lambda a: Or(tuple(a))),
            inner.map(Not),
            st.tuples(inner, inner).map(lambda ab: Implies(*ab)),
            st.tuples(inner, inner).map(lambda ab: Iff(*ab)),
        )

    return st.recursive(leaf, extend, max_leaves=6)


@settings(max_examples=150, deadline=None)
@given(formulas())
def test_dnf_is_equivalent(f):
    dnf = to_dnf(f).to_formula()
    try:
        neg = negate_matched(to_dnf(f)).to_formula()
    except DNFCapExceeded:
        # the matched negation is exponential in the number of disjuncts
        neg = Not(f)
    for x, y in itertools.product(GRID[::2], GRID[::2]):
        env = {"x": x, "y": y}
        assert holds(dnf, env) == holds(f, env)
        assert holds(neg, env) == (not holds(f, env))


@settings(max_examples=60, deadline=None)
@given(formulas())
def test_text_round_trip(f):
    assert parse_formula(formula_text(f)) == f


def test_dnf_cap():
    f = And(tuple(Or((Atom(parse_term(f"x - {k}"), ">"), Atom(parse_term("y"), ">")))
                  for k in range(14)))
    with pytest.raises(DNFCapExceeded):
        to_dnf(f, cap=1000)


def test_strictness_and_vars():
    assert is_strict_only(parse_formula("x > 0 | !(y >= 1)"))
    assert not is_strict_only(parse_formula("x > 0 & y != 0 -> x >= 0"))
    assert formula_vars(parse_formula("exp(z) > x")) == {"x", "z"}


def test_holds_is_three_valued():
    f = parse_formula("exp(x) > 0")
    assert holds(f, {"x": Fraction(0)}) is None
    assert holds(Or((f, TRUE)), {"x": Fraction(0)}) is True


@pytest.mark.parametrize("ode, term", [
    (ROTATION, "x"), (ROTATION, "x*y - x"), (ROTATION, "x^2 + y^2 - 1"),
    (SHEAR, "x"), (SHEAR, "x - y^2"), (SHEAR, "y"),
])
def test_progress_semantics(ode, term):
    e = parse_term(term)
    lies = lie_sequence(e, ode)
    gt, geq = progress_gt(e, ode), progress_geq(e, ode)
    zero = sigma_zero(e, ode)
    for x, y in itertools.product(GRID, GRID):
        env = {"x": x, "y": y}
        s = first_sign([evaluate(L, env) for L in lies])
        assert holds(gt, env) == (s > 0)
        assert holds(geq, env) == (s >= 0)
        assert holds(zero, env) == (s == 0)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_negation_identities(n):
    names = [f"a{i}" for i in range(n)]
    lies = [parse_term(a) for a in names]
    neg_lies = [normalize(-L) for L in lies]
    gt, geq = sigma_gt_from_lies(lies), sigma_geq_from_lies(lies)
    ngt, ngeq = sigma_gt_from_lies(neg_lies), sigma_geq_from_lies(neg_lies)
    for values in itertools.product([-1, 0, 1], repeat=n):
        env = {a: Fraction(v) for a, v in zip(names, values)}
        assert holds(Not(gt), env) == holds(ngeq, env)
        assert holds(Not(geq), env) == holds(ngt, env)
        zero = all(v == 0 for v in values)
        assert (not zero) == (holds(gt, env) or holds(ngt, env))


def test_rank_one_collapses():
    assert formula_text(sigma_gt_from_lies([parse_term("x*y - 1")])) == "x*y - 1 > 0"


def test_semianalytic_lift_backward():
    p = parse_formula("x >= 0 & y > 0")
    fwd = progress_semianalytic(p, SHEAR, "forward")
    bwd = progress_semianalytic(p, SHEAR, "backward")
    env = {"x": Fraction(0), "y": Fraction(1)}
    # x grows forward along the shear at y > 0, shrinks backward
    assert holds(fwd, env) is True
    assert holds(bwd, env) is False
    with pytest.raises(ValueError):
        progress_semianalytic(p, SHEAR, "sideways")
