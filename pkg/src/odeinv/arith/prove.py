"""Search-free-checkable infeasibility witnesses for conjunctions of atoms.

A disjunct ``⋀ q_j ≥ 0 ∧ ⋀ q_k > 0`` is infeasible when there are
multipliers ``m_j`` and an *evidently nonnegative* polynomial ``s`` (every
monomial has only even exponents and a positive coefficient) with

    Σ m_j q_j + s = 0

where each ``m_j`` is a nonnegative rational, except for atoms whose
negation also occurs among the nonstrict atoms (they are equations, so any
polynomial multiplier is allowed), and either some strict atom has a
positive multiplier or ``s`` has a positive constant term.  Function
applications are treated as opaque indeterminates, so nothing beyond ring
identities is assumed about ``exp``, ``sin`` or ``cos``.

The search combines single atoms and pairs of atoms after reduction modulo
the equations with a Gröbner basis; univariate polynomial disjuncts are
decided exactly with Sturm sequences instead.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from ..expr import App, Term, Var, applications, expand, free_vars, neg, term_key
from ..formula import Disjunct
from ..ring import BudgetExceeded, Ring, groebner
from .sturm import univariate_feasible

__all__ = ["PsatzWitness", "SturmWitness", "TrivialWitness", "find_infeasibility", "check_infeasibility",
           "evidently_nonnegative", "evidently_positive", "disjunct_atoms"]


@dataclass(frozen=True)
class PsatzWitness:
    """``Σ m_j q_j + square_part = 0`` over the atoms of one disjunct."""

    multipliers: tuple  # of (atom index, Term)
    square_part: Term


@dataclass(frozen=True)
class TrivialWitness:
    """Atom ``index`` is a constant with the wrong sign (e.g. ``0 > 0`` or ``-1 >= 0``)."""

    index: int


@dataclass(frozen=True)
class SturmWitness:
    """The disjunct is univariate in ``variable``; infeasibility is re-decided exactly."""

    variable: str


def disjunct_atoms(d: Disjunct) -> list:
    """Atoms as (term, strict) with nonstrict ones first, in stored order."""
    return [(e, False) for e in d.nonstrict] + [(e, True) for e in d.strict]


def _positive_atom(a: Term) -> bool:
    # exp is positive everywhere, so any power of it is a positive factor
    return isinstance(a, App) and a.symbol == "exp"


def evidently_nonnegative(t: Term) -> bool:
    """Positive coefficients on monomials of even powers and ``exp`` factors."""
    return all(c > 0 and all(e % 2 == 0 or _positive_atom(a) for a, e in mono)
               for mono, c in expand(t).items())


def evidently_positive(t: Term) -> bool:
    """Evidently nonnegative with a monomial made of ``exp`` factors only (or a constant)."""
    poly = expand(t)
    return evidently_nonnegative(t) and any(all(_positive_atom(a) for a, _ in mono)
                                            for mono in poly)


def _equation_indices(atoms: list) -> set:
    nonstrict = {e for e, s in atoms if not s}
    return {j for j, (e, s) in enumerate(atoms) if not s and neg(e) in nonstrict}


def check_infeasibility(d: Disjunct, witness) -> bool:
    """Re-verify a witness by expansion only (or an exact Sturm re-decision)."""
    atoms = disjunct_atoms(d)
    if isinstance(witness, TrivialWitness):
        if not 0 <= witness.index < len(atoms):
            return False
        e, strict = atoms[witness.index]
        poly = expand(e)
        if any(mono for mono in poly):
            return False
        c = poly.get((), Fraction(0))
        return c < 0 or (strict and c == 0)
    if isinstance(witness, SturmWitness):
        return _sturm_decide(atoms, witness.variable) is False
    if not isinstance(witness, PsatzWitness):
        return False
    eqs = _equation_indices(atoms)
    total = witness.square_part
    strict_used = False
    for j, m in witness.multipliers:
        if not 0 <= j < len(atoms):
            return False
        q, strict = atoms[j]
        if j not in eqs:
            mp = expand(m)
            if any(mono for mono in mp):
                return False
            c = mp.get((), Fraction(0))
            if c < 0:
                return False
            if strict and c > 0:
                strict_used = True
        total = total + m * q
    if expand(total):
        return False
    if not evidently_nonnegative(witness.square_part):
        return False
    return strict_used or evidently_positive(witness.square_part)


# ---------------------------------------------------------------------------
# search

def _to_upoly(t: Term, x: str):
    poly = expand(t)
    out: dict = {}
    for mono, c in poly.items():
        deg = 0
        for atom, e in mono:
            if atom != Var(x):
                return None
            deg = e
        out[deg] = c
    if not out:
        return [Fraction(0)]
    return [out.get(i, Fraction(0)) for i in range(max(out) + 1)]


def _sturm_decide(atoms: list, x: str):
    """True/False feasibility for a univariate polynomial disjunct, None if not applicable."""
    cons = []
    for e, strict in atoms:
        if applications(e) or not free_vars(e) <= {x}:
            return None
        p = _to_upoly(e, x)
        cons.append((p, ">" if strict else ">="))
    feasible, _ = univariate_feasible(cons)
    return feasible


def _ring_for(terms: Sequence[Term]) -> Ring:
    atoms: set = set()
    for t in terms:
        for mono in expand(t):
            for a, _ in mono:
                atoms.add(a)
    return Ring(sorted(atoms, key=term_key))


def find_infeasibility(d: Disjunct, budget: int = 10**5):
    """A witness that ``d`` is infeasible, or ``None`` if none was found."""
    atoms = disjunct_atoms(d)
    if not atoms:
        return None
    for j in range(len(atoms)):
        if check_infeasibility(d, TrivialWitness(j)):
            return TrivialWitness(j)
    eqs = sorted(_equation_indices(atoms))
    ring = _ring_for([e for e, _ in atoms])
    polys = [ring.from_term(e) for e, _ in atoms]
    eq_idx = []
    seen = set()
    for j in eqs:
        key = frozenset((atoms[j][0], neg(atoms[j][0])))
        if key not in seen and polys[j]:
            seen.add(key)
            eq_idx.append(j)
    gb = None
    if eq_idx:
        try:
            gb = groebner([polys[j] for j in eq_idx], budget)
        except BudgetExceeded:
            gb = None

    def reduce(j):
        """(reduced poly, multiplier list) with polys[j] - Σ c·eq = reduced."""
        if gb is None:
            return polys[j], []
        cof, rem = gb.reduce(polys[j])
        return rem, [(eq_idx[k], -c) for k, c in enumerate(cof) if c]

    def witness(mults, combo):
        """combo = Σ m q (after reduction); need s = -combo."""
        s = (-combo).to_term()
        terms = {}
        for j, m in mults:
            terms[j] = terms.get(j, ring.zero()) + m
        w = PsatzWitness(tuple((j, m.to_term()) for j, m in sorted(terms.items()) if m),
                         s)
        return w if check_infeasibility(d, w) else None

    # unit ideal: the equations alone are contradictory
    if gb is not None and gb.is_unit():
        one = ring.one()
        cof, _ = gb.reduce(one)
        mults = [(eq_idx[k], -c) for k, c in enumerate(cof) if c]
        w = witness(mults, -one)  # Σ(-c)e = -1, so s = 1
        if w is not None:
            return w

    reduced = [reduce(j) for j in range(len(atoms))]
    one = ring.one()
    for j, (r, m) in enumerate(reduced):
        if j in eqs:
            continue
        w = witness([(j, one)] + m, r)
        if w is not None:
            return w
    n = len(atoms)
    for j in range(n):
        if j in eqs:
            continue
        rj, mj = reduced[j]
        for k in range(j + 1, n):
            if k in eqs:
                continue
            rk, mk = reduced[k]
            lams = [Fraction(1)]
            if rj and rk:
                (lm_j, lc_j), (lm_k, lc_k) = rj.leading(), rk.leading()
                if lm_j == lm_k and lc_j * lc_k < 0:
                    lams.insert(0, -lc_j / lc_k)
            for lam in lams:
                combo = rj + rk.scale(lam)
                mults = [(j, one)] + mj + [(k, ring.const(lam))] + [(i, c.scale(lam)) for i, c in mk]
                w = witness(mults, combo)
                if w is not None:
                    return w
    # univariate polynomial disjuncts: exact decision
    vs: set = set()
    for e, _ in atoms:
        vs |= free_vars(e)
    if len(vs) <= 1:
        x = next(iter(vs)) if vs else "x"
        if _sturm_decide(atoms, x) is False:
            return SturmWitness(x)
    return None
