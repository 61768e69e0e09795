from pathlib import Path

import pytest

from odeinv.expr import normalize, parse_term
from odeinv.formula import TRUE, parse_formula
from odeinv.invariance import (CheckConfig, Invariant, METHODS, NotInvariant, Undetermined,
                               analytic_invariance, check_darboux_eq, check_darboux_geq,
                               check_invariance, check_vdbx, premises, semianalytic_invariance,
                               synthesize_cofactor)
from odeinv.lie import ODESystem, lie_derivative
from odeinv.problem import load_problem
from odeinv.proofcert import check_certificate

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"


@pytest.mark.parametrize("name, status, method", [
    ("circle.ode", "invariant", "dbx"),
    ("open_disk.ode", "invariant", "dbx≥"),
    ("half_disk.ode", "not-invariant", "SAI"),
    ("rotation_origin.ode", "invariant", "vdbx"),
    ("circle_cut.ode", "invariant", "dC"),
    ("axis.ode", "not-invariant", None),
    ("tan.ode", "invariant", "dbx"),
    ("exp_positive.ode", "invariant", "SAI"),
])
def test_corpus_verdicts(name, status, method):
    prob = load_problem(PROBLEMS / name)
    r = check_invariance(prob.candidate, prob.system(), CheckConfig(),
                         prob.options.get("method", "auto"), prob.cuts)
    assert r.status == status
    if method is not None:
        assert r.method == method
    res = check_certificate(r.certificate)
    assert res.ok, str(res)


def test_cofactor_is_exact(alpha_e):
    e = parse_term("1 - u^2 - v^2")
    g = synthesize_cofactor(e, alpha_e)
    assert normalize(lie_derivative(e, alpha_e) - g * e) == parse_term("0")
    assert g == normalize(parse_term("-(u^2 + v^2)/2"))


def test_cofactor_missing(rotation):
    assert synthesize_cofactor(parse_term("x"), rotation) is None
    vc = check_darboux_eq(parse_term("x"), ode=rotation)
    assert vc.verdict == "unknown"


def test_darboux_inequality(alpha_e):
    vc = check_darboux_geq(parse_term("1 - u^2 - v^2"), ode=alpha_e, strict=True)
    assert vc.verdict == "proved"


def test_vector_darboux(rotation):
    vcs = check_vdbx([parse_term("x"), parse_term("y")], ode=rotation)
    assert [vc.verdict for vc in vcs] == ["proved", "proved"]


def test_analytic_characterization_both_ways(rotation):
    assert isinstance(analytic_invariance(parse_term("x^2 + y^2 - 2"), rotation), Invariant)
    r = analytic_invariance(parse_term("x - 1"), rotation)
    assert isinstance(r, NotInvariant)
    # the witness lies on x = 1 and leaves it
    assert r.point["x"] == 1


def test_semianalytic_characterization(alpha_e):
    r = semianalytic_invariance(parse_formula("u^2 + v^2 <= 1"), alpha_e)
    assert isinstance(r, Invariant)
    r = semianalytic_invariance(parse_formula("u >= 0"), alpha_e)
    assert isinstance(r, NotInvariant)
    assert r.caveat


@pytest.mark.parametrize("method", ["dbx", "dbx-geq", "vdbx"])
def test_sufficient_rules_never_refute(rotation, method):
    cand = {"dbx": "x = 1", "dbx-geq": "x >= 1", "vdbx": "x = 1 & y = 0"}[method]
    try:
        r = check_invariance(parse_formula(cand), rotation, CheckConfig(), method)
    except ValueError:
        return
    assert not isinstance(r, NotInvariant)


def test_rank_limit_is_resource_limited(rotation):
    r = check_invariance(parse_formula("x*y^2 - 1 = 0"), rotation, CheckConfig(max_rank=1), "dri")
    assert isinstance(r, Undetermined) and r.resource_limited


def test_trivial_and_bad_method(rotation):
    assert check_invariance(TRUE, rotation).method == "trivial"
    with pytest.raises(ValueError):
        check_invariance(parse_formula("x = 0"), rotation, method="magic")
    assert "auto" in METHODS


def test_reversed_domain_kept(alpha_e):
    # invariance relative to a domain: u >= 0 holds while the flow stays in u >= 0
    ode = alpha_e.with_domain(parse_formula("u >= 0"))
    r = check_invariance(parse_formula("u >= 0"), ode)
    assert isinstance(r, Invariant)


@pytest.mark.parametrize("name, method, count", [
    ("circle.ode", "auto", 1),
    ("circle.ode", "dbx", 1),
    ("rotation_origin.ode", "vdbx", 2),
    ("open_disk.ode", "sai", 2),
])
def test_premises_for_export(name, method, count):
    prob = load_problem(PROBLEMS / name)
    assert len(premises(prob.candidate, prob.system(), CheckConfig(), method)) == count
