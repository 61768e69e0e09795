"""Semianalytic formulas, disjunctive normal forms and progress formulas.

Atoms compare a normalized term against zero with one of ``=``, ``>=``,
``>``; the surface relations ``<=``, ``<`` and ``!=`` are desugared when
parsing.  Besides the propositional connectives the formula language has
:class:`Implies` and :class:`Iff`, which progress formulas and verification
conditions use directly.

Formula grammar (lowest precedence first)::

    formula    ::= implies ( "<->" implies )?
    implies    ::= disj ( "->" implies )?
    disj       ::= conj ( "|" conj )*
    conj       ::= unary ( "&" unary )*
    unary      ::= "!" unary | "true" | "false" | "(" formula ")" | comparison
    comparison ::= term ( "=" | "!=" | ">=" | ">" | "<=" | "<" ) term
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .expr import (Mul, Const, ParseError, Registry, Term, TermParser, ZERO,
                   evaluate, free_vars, neg, normalize, to_text)

__all__ = [
    "Formula", "Atom", "And", "Or", "Not", "Implies", "Iff", "Truth", "TRUE", "FALSE",
    "conj", "disj", "parse_formula", "FormulaParser", "formula_text",
    "Disjunct", "DNF", "to_dnf", "DNFCapExceeded", "DEFAULT_DNF_CAP",
    "holds", "exact_sign", "formula_atoms", "formula_vars", "is_strict_only",
    "progress_gt", "progress_geq", "sigma_zero", "progress_semianalytic",
    "negate_matched", "sigma_gt_from_lies", "sigma_geq_from_lies", "sigma_zero_from_lies",
]

DEFAULT_DNF_CAP = 4096
RELATIONS = ("=", ">=", ">")


class Formula:
    """Base class of formula syntax trees."""

    __slots__ = ()

    def __and__(self, other):
        return And((self, other))

    def __or__(self, other):
        return Or((self, other))

    def __invert__(self):
        return Not(self)

    def __str__(self):
        return formula_text(self)


@dataclass(frozen=True)
class Atom(Formula):
    """``lhs rel 0`` with ``lhs`` kept in normal form."""

    lhs: Term
    rel: str

    def __post_init__(self):
        if self.rel not in RELATIONS:
            raise ValueError(f"relation must be one of {RELATIONS}, got {self.rel!r}")
        object.__setattr__(self, "lhs", normalize(self.lhs))


@dataclass(frozen=True)
class And(Formula):
    args: tuple

    def __post_init__(self):
        if not self.args:
            raise ValueError("And needs at least one argument")
        object.__setattr__(self, "args", tuple(self.args))


@dataclass(frozen=True)
class Or(Formula):
    args: tuple

    def __post_init__(self):
        if not self.args:
            raise ValueError("Or needs at least one argument")
        object.__setattr__(self, "args", tuple(self.args))


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class Implies(Formula):
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True)
class Iff(Formula):
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True)
class Truth(Formula):
    value: bool


TRUE = Truth(True)
FALSE = Truth(False)


def conj(parts: Iterable[Formula]) -> Formula:
    parts = tuple(parts)
    if not parts:
        return TRUE
    return parts[0] if len(parts) == 1 else And(parts)


def disj(parts: Iterable[Formula]) -> Formula:
    parts = tuple(parts)
    if not parts:
        return FALSE
    return parts[0] if len(parts) == 1 else Or(parts)


# ---------------------------------------------------------------------------
# parsing and printing

_REL_OPS = ("=", "!=", ">=", ">", "<=", "<")
_TERM_CONTINUATION = ("+", "-", "*", "/", "^") + _REL_OPS


class FormulaParser(TermParser):
    def formula(self) -> Formula:
        lhs = self.implies()
        if self.at("<->"):
            self.advance()
            return Iff(lhs, self.implies())
        return lhs

    def implies(self) -> Formula:
        lhs = self.disjunction()
        if self.at("->"):
            self.advance()
            return Implies(lhs, self.implies())
        return lhs

    def disjunction(self) -> Formula:
        parts = [self.conjunction()]
        while self.at("|"):
            self.advance()
            parts.append(self.conjunction())
        return disj(parts)

    def conjunction(self) -> Formula:
        parts = [self.unary_formula()]
        while self.at("&"):
            self.advance()
            parts.append(self.unary_formula())
        return conj(parts)

    def unary_formula(self) -> Formula:
        if self.at("!"):
            self.advance()
            return Not(self.unary_formula())
        if self.tok.kind == "ident" and self.tok.text in ("true", "false"):
            return TRUE if self.advance().text == "true" else FALSE
        if self.at("("):
            # a parenthesis opens either a subformula or a term; try the formula first
            start = self.i
            try:
                self.advance()
                inner = self.formula()
                self.expect(")")
                if not self.at(*_TERM_CONTINUATION):
                    return inner
            except ParseError:
                pass
            self.i = start
        return self.comparison()

    def comparison(self) -> Formula:
        lhs = self.term()
        if not self.at(*_REL_OPS):
            self.error("expected a comparison operator")
        op = self.advance().text
        rhs = self.term()
        diff = normalize(lhs - rhs)
        if op == "=":
            return Atom(diff, "=")
        if op == "!=":
            return Not(Atom(diff, "="))
        if op == ">=":
            return Atom(diff, ">=")
        if op == ">":
            return Atom(diff, ">")
        flipped = neg(diff)
        return Atom(flipped, ">=" if op == "<=" else ">")


def parse_formula(text: str, registry: Registry | None = None) -> Formula:
    p = FormulaParser(text, registry)
    f = p.formula()
    p.finish()
    return f


_PREC = {Iff: 0, Implies: 1, Or: 2, And: 3, Not: 4, Atom: 5, Truth: 5}


def formula_text(f: Formula) -> str:
    """Concrete syntax accepted back by :func:`parse_formula`."""

    def wrap(g, level):
        s = formula_text(g)
        return f"({s})" if _PREC[type(g)] <= level else s

    if isinstance(f, Atom):
        return f"{to_text(f.lhs)} {f.rel} 0"
    if isinstance(f, Truth):
        return "true" if f.value else "false"
    if isinstance(f, Not):
        inner = formula_text(f.arg)
        return "!" + (inner if isinstance(f.arg, (Truth, Not)) else f"({inner})")
    if isinstance(f, And):
        return " & ".join(wrap(a, 3) for a in f.args)
    if isinstance(f, Or):
        return " | ".join(wrap(a, 2) for a in f.args)
    if isinstance(f, Implies):
        return f"{wrap(f.lhs, 1)} -> {wrap(f.rhs, 0)}"
    return f"{wrap(f.lhs, 0)} <-> {wrap(f.rhs, 0)}"


def formula_atoms(f: Formula) -> list:
    """Atoms in left-to-right order (with repetitions)."""
    if isinstance(f, Atom):
        return [f]
    if isinstance(f, (And, Or)):
        return [a for g in f.args for a in formula_atoms(g)]
    if isinstance(f, Not):
        return formula_atoms(f.arg)
    if isinstance(f, (Implies, Iff)):
        return formula_atoms(f.lhs) + formula_atoms(f.rhs)
    return []


def formula_vars(f: Formula) -> set:
    out: set = set()
    for a in formula_atoms(f):
        out |= free_vars(a.lhs)
    return out


# ---------------------------------------------------------------------------
# evaluation

def exact_sign(t: Term, env: Mapping[str, Fraction]):
    """Sign of ``t`` at a rational point, or ``None`` for transcendental terms."""
    try:
        v = evaluate(t, env)
    except KeyError:
        return None
    return (v > 0) - (v < 0)


def _atom_value(a: Atom, sign) -> bool | None:
    s = sign(a.lhs)
    if s is None:
        return None
    if a.rel == "=":
        return s == 0
    if a.rel == ">=":
        return s >= 0
    return s > 0


def holds(f: Formula, env: Mapping, sign: Callable | None = None):
    """Three-valued truth of ``f``: True, False, or None when a sign is unknown.

    ``sign(term)`` returns -1/0/1 or ``None``; the default is exact rational
    evaluation at ``env``.
    """
    if sign is None:
        def sign(t):
            return exact_sign(t, env)
    cache: dict = {}

    def sgn(t):
        if t not in cache:
            cache[t] = sign(t)
        return cache[t]

    def go(g):
        if isinstance(g, Atom):
            return _atom_value(g, sgn)
        if isinstance(g, Truth):
            return g.value
        if isinstance(g, Not):
            v = go(g.arg)
            return None if v is None else not v
        if isinstance(g, And):
            unknown = False
            for a in g.args:
                v = go(a)
                if v is False:
                    return False
                unknown |= v is None
            return None if unknown else True
        if isinstance(g, Or):
            unknown = False
            for a in g.args:
                v = go(a)
                if v is True:
                    return True
                unknown |= v is None
            return None if unknown else False
        if isinstance(g, Implies):
            return go(Or((Not(g.lhs), g.rhs)))
        a, b = go(g.lhs), go(g.rhs)
        return None if a is None or b is None else a == b

    return go(f)


# ---------------------------------------------------------------------------
# disjunctive normal form

class DNFCapExceeded(RuntimeError):
    def __init__(self, cap: int):
        super().__init__(f"disjunctive normal form exceeds the cap of {cap} disjuncts")
        self.cap = cap


@dataclass(frozen=True)
class Disjunct:
    """Conjunction of ``e >= 0`` for ``nonstrict`` and ``d > 0`` for ``strict``."""

    nonstrict: tuple = ()
    strict: tuple = ()

    def __add__(self, other: "Disjunct") -> "Disjunct":
        return Disjunct(self.nonstrict + other.nonstrict, self.strict + other.strict)

    def atoms(self) -> list:
        return [Atom(e, ">=") for e in self.nonstrict] + [Atom(d, ">") for d in self.strict]

    def to_formula(self) -> Formula:
        return conj(self.atoms())

    def is_empty(self) -> bool:
        return not self.nonstrict and not self.strict


@dataclass(frozen=True)
class DNF:
    """Disjunction of :class:`Disjunct`; no disjuncts is false, one empty disjunct is true."""

    disjuncts: tuple

    def __post_init__(self):
        object.__setattr__(self, "disjuncts", tuple(self.disjuncts))

    def __len__(self):
        return len(self.disjuncts)

    def __iter__(self):
        return iter(self.disjuncts)

    def to_formula(self) -> Formula:
        return disj(d.to_formula() for d in self.disjuncts)

    def is_true(self) -> bool:
        return any(d.is_empty() for d in self.disjuncts)

    def strict_only(self) -> bool:
        return all(not d.nonstrict for d in self.disjuncts)

    def terms(self) -> list:
        out = []
        for d in self.disjuncts:
            for t in d.nonstrict + d.strict:
                if t not in out:
                    out.append(t)
        return out

    def __str__(self):
        return formula_text(self.to_formula())


def _atom_dnf(a: Atom, positive: bool) -> list:
    e = a.lhs
    if positive:
        if a.rel == ">=":
            return [Disjunct((e,), ())]
        if a.rel == ">":
            return [Disjunct((), (e,))]
        return [Disjunct((e, neg(e)), ())]
    if a.rel == ">=":
        return [Disjunct((), (neg(e),))]
    if a.rel == ">":
        return [Disjunct((neg(e),), ())]
    return [Disjunct((), (e,)), Disjunct((), (neg(e),))]


def _product(parts: Sequence[list], cap: int) -> list:
    acc = [Disjunct()]
    for p in parts:
        if len(acc) * len(p) > cap:
            raise DNFCapExceeded(cap)
        acc = [a + b for a in acc for b in p]
    return acc


def _concat(parts: Sequence[list], cap: int) -> list:
    out = [d for p in parts for d in p]
    if len(out) > cap:
        raise DNFCapExceeded(cap)
    return out


def to_dnf(f: Formula, cap: int = DEFAULT_DNF_CAP) -> DNF:
    """Push negations to atoms and distribute conjunctions over disjunctions.

    Distribution is literal (no subsumption or duplicate removal), so the
    result is predictable and its structure can be mirrored by
    :func:`negate_matched`.
    """

    def go(g, pos):
        if isinstance(g, Atom):
            return _atom_dnf(g, pos)
        if isinstance(g, Truth):
            return [Disjunct()] if g.value == pos else []
        if isinstance(g, Not):
            return go(g.arg, not pos)
        if isinstance(g, And):
            kids = [go(a, pos) for a in g.args]
            return _product(kids, cap) if pos else _concat(kids, cap)
        if isinstance(g, Or):
            kids = [go(a, pos) for a in g.args]
            return _concat(kids, cap) if pos else _product(kids, cap)
        if isinstance(g, Implies):
            if pos:
                return _concat([go(g.lhs, False), go(g.rhs, True)], cap)
            return _product([go(g.lhs, True), go(g.rhs, False)], cap)
        both = And((Implies(g.lhs, g.rhs), Implies(g.rhs, g.lhs)))
        return go(both, pos)

    return DNF(go(f, True))


def negate_matched(p: DNF, ode=None, cap: int = DEFAULT_DNF_CAP) -> DNF:
    """Normal form of ``¬P`` built by the matched distribution of the negation lemma.

    Each disjunct ``⋀ e ≥ 0 ∧ ⋀ d > 0`` becomes the clause
    ``⋁ −e > 0 ∨ ⋁ −d ≥ 0``; the clauses are then distributed in order with no
    simplification, which is what makes ``¬σ(P) ↔ σ(¬P)`` hold syntactically
    clause by clause.  ``ode`` is accepted for interface symmetry and unused.
    """
    clauses = []
    for d in p.disjuncts:
        lits = [Disjunct((), (neg(e),)) for e in d.nonstrict]
        lits += [Disjunct((neg(t),), ()) for t in d.strict]
        clauses.append(lits)
    total = 1
    for c in clauses:
        total *= len(c)
        if total > cap:
            raise DNFCapExceeded(cap)
    out = []
    for choice in itertools.product(*clauses):
        acc = Disjunct()
        for lit in choice:
            acc = acc + lit
        out.append(acc)
    return DNF(out)


def is_strict_only(f: Formula, cap: int = DEFAULT_DNF_CAP) -> bool:
    return to_dnf(f, cap).strict_only()


# ---------------------------------------------------------------------------
# progress formulas

def sigma_zero_from_lies(lies: Sequence[Term]) -> Formula:
    """``⋀_{i<N} L_i = 0`` for ``lies = (L_0, …, L_{N-1})``."""
    return conj(Atom(t, "=") for t in lies)


def sigma_gt_from_lies(lies: Sequence[Term]) -> Formula:
    """First-significant-Lie-derivative formula σ> from ``L_0 … L_{N-1}``."""
    n = len(lies)
    if n < 1:
        raise ValueError("progress formulas need rank at least 1")
    if n == 1:
        return Atom(lies[0], ">")
    parts: list = [Atom(lies[0], ">=")]
    for k in range(1, n):
        rel = ">" if k == n - 1 else ">="
        premise = conj(Atom(lies[i], "=") for i in range(k))
        parts.append(Implies(premise, Atom(lies[k], rel)))
    return conj(parts)


def sigma_geq_from_lies(lies: Sequence[Term]) -> Formula:
    return Or((sigma_gt_from_lies(lies), sigma_zero_from_lies(lies)))


def _lies(e: Term, ode, cache, max_rank) -> tuple:
    from .lie import lie_sequence
    return lie_sequence(e, ode, max_rank=max_rank, cache=cache)


def progress_gt(e: Term, ode, cache=None, max_rank: int | None = None) -> Formula:
    return sigma_gt_from_lies(_lies(e, ode, cache, max_rank))


def progress_geq(e: Term, ode, cache=None, max_rank: int | None = None) -> Formula:
    return sigma_geq_from_lies(_lies(e, ode, cache, max_rank))


def sigma_zero(e: Term, ode, cache=None, max_rank: int | None = None) -> Formula:
    return sigma_zero_from_lies(_lies(e, ode, cache, max_rank))


def progress_semianalytic(p, ode, direction: str = "forward", cache=None,
                          max_rank: int | None = None, cap: int = DEFAULT_DNF_CAP) -> Formula:
    """Homomorphic lift σ(P): σ≥ for nonstrict atoms, σ> for strict ones.

    ``p`` may be a :class:`DNF` or a formula (converted with :func:`to_dnf`).
    The backward direction takes Lie derivatives along the negated vector field.
    """
    if direction not in ("forward", "backward"):
        raise ValueError("direction must be 'forward' or 'backward'")
    if not isinstance(p, DNF):
        p = to_dnf(p, cap)
    if direction == "backward":
        ode = ode.reversed()
    out = []
    for d in p.disjuncts:
        parts = [progress_geq(e, ode, cache, max_rank) for e in d.nonstrict]
        parts += [progress_gt(t, ode, cache, max_rank) for t in d.strict]
        out.append(conj(parts))
    return disj(out)
