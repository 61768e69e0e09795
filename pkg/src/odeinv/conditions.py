"""Verification conditions: the arithmetic premises of the derived rules.

Builders here are pure.  Given the Lie derivatives (through a
:class:`~odeinv.lie.CertificateCache`, which a certificate checker can
pre-load with replayed witnesses) they produce the same formulas every time,
so the producer and the checker share one definition of each premise.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .expr import ONE, ZERO, Term, as_term, expand, normalize
from .formula import (DEFAULT_DNF_CAP, TRUE, And, Atom, Formula, Implies, Not, Or, Truth, conj,
                      progress_semianalytic, sigma_zero, to_dnf)
from .lie import ODESystem, lie_derivative

__all__ = [
    "VerificationCondition", "RULES", "analytic_term", "domain_of", "dbx_residual", "dbx_vc",
    "vdbx_residuals", "vdbx_vcs", "dri_vc", "sai_vcs", "cut_init_vc", "guarded",
    "trivially_valid",
]

RULES = ("dbx", "dbx≥", "vdbx", "dRI-init", "dRI-rank", "sAI-fwd", "sAI-bwd",
         "DRI-equiv", "DRIQ-equiv", "SAI-equiv", "dC-init")


@dataclass
class VerificationCondition:
    """A quantifier-free formula read as its universal closure.

    ``decision`` is filled in by the arithmetic backend; a refuted VC carries
    a rational point in ``decision.point``.
    """

    formula: Formula
    rule: str
    note: str = ""
    decision: object = None
    solver: str = ""
    answer: str = ""
    lemmas: bool = False

    @property
    def verdict(self) -> str:
        return "pending" if self.decision is None else self.decision.status

    @property
    def point(self):
        return None if self.decision is None else self.decision.point

    def __str__(self):
        from .formula import formula_text
        return f"[{self.rule}] {formula_text(self.formula)}"


def domain_of(ode: ODESystem) -> Formula:
    return ode.domain if ode.domain is not None else TRUE


def guarded(antecedent: Sequence[Formula], conclusion: Formula) -> Formula:
    """``⋀ antecedent → conclusion`` with ``true`` conjuncts dropped."""
    parts = [a for a in antecedent if a != TRUE]
    if not parts:
        return conclusion
    return Implies(conj(parts), conclusion)


def analytic_term(f: Formula) -> Term | None:
    """Single ``e`` with ``f ↔ e = 0`` for analytic formulas, else ``None``.

    Conjunctions become sums of squares and disjunctions products.
    """
    if isinstance(f, Truth):
        return ZERO if f.value else ONE
    if isinstance(f, Atom):
        return f.lhs if f.rel == "=" else None
    if isinstance(f, (And, Or)):
        parts = [analytic_term(a) for a in f.args]
        if any(p is None for p in parts):
            return None
        if isinstance(f, And):
            total: Term = ZERO
            for p in parts:
                total = total + p * p
            return normalize(total)
        prod: Term = ONE
        for p in parts:
            prod = prod * p
        return normalize(prod)
    return None


def dbx_residual(e, g, ode: ODESystem) -> Term:
    """``lie(e) − g·e``."""
    e, g = normalize(as_term(e)), normalize(as_term(g))
    return normalize(lie_derivative(e, ode) - g * e)


def dbx_vc(e, g, ode: ODESystem, inequality: bool = False) -> VerificationCondition:
    """Premise ``Q → lie(e) − g·e = 0`` (or ``≥ 0`` for the inequality rule)."""
    r = dbx_residual(e, g, ode)
    rel = ">=" if inequality else "="
    return VerificationCondition(guarded([domain_of(ode)], Atom(r, rel)),
                                 "dbx≥" if inequality else "dbx")


def vdbx_residuals(es: Sequence[Term], G: Sequence[Sequence[Term]], ode: ODESystem) -> list:
    es = [normalize(as_term(e)) for e in es]
    n = len(es)
    if len(G) != n or any(len(row) != n for row in G):
        raise ValueError("vdbx needs a square cofactor matrix matching the number of terms")
    out = []
    for i in range(n):
        total: Term = lie_derivative(es[i], ode)
        for j in range(n):
            total = total - as_term(G[i][j]) * es[j]
        out.append(normalize(total))
    return out


def vdbx_vcs(es, G, ode: ODESystem) -> list:
    return [VerificationCondition(guarded([domain_of(ode)], Atom(r, "=")), "vdbx",
                                  note=f"component {i}")
            for i, r in enumerate(vdbx_residuals(es, G, ode))]


def _strict_only(q: Formula, cap: int) -> bool:
    return to_dnf(q, cap).strict_only()


def dri_vc(e, ode: ODESystem, cache=None, max_rank: int | None = None,
           cap: int = DEFAULT_DNF_CAP) -> VerificationCondition:
    """Right-hand side of the radical invariant equivalence, closed under ``e = 0``.

    ``e = 0 ∧ Q ∧ σ(Q) → σ=0(e)``; the ``σ(Q)`` conjunct is dropped when
    ``Q`` is built from strict inequalities only.
    """
    e = normalize(as_term(e))
    q = domain_of(ode)
    radical = sigma_zero(e, ode, cache, max_rank)
    if q == TRUE or _strict_only(q, cap):
        return VerificationCondition(guarded([Atom(e, "="), q], radical), "DRI-equiv")
    sq = progress_semianalytic(q, ode, "forward", cache, max_rank, cap)
    return VerificationCondition(guarded([Atom(e, "="), q, sq], radical), "DRIQ-equiv")


def sai_vcs(p: Formula, ode: ODESystem, cache=None, max_rank: int | None = None,
            cap: int = DEFAULT_DNF_CAP) -> tuple:
    """Forward and backward premises of the semianalytic invariant axiom.

    forward:  ``P ∧ Q ∧ σ(Q) → σ(P)``
    backward: ``¬P ∧ Q ∧ σ−(Q) → σ−(¬P)`` with ``¬P`` in matched normal form.
    """
    from .formula import negate_matched
    q = domain_of(ode)
    dp = to_dnf(p, cap)
    dn = negate_matched(dp, ode, cap)
    if q == TRUE:
        sq_f = sq_b = TRUE
    else:
        sq_f = progress_semianalytic(q, ode, "forward", cache, max_rank, cap)
        sq_b = progress_semianalytic(q, ode, "backward", cache, max_rank, cap)
    fwd = guarded([p, q, sq_f], progress_semianalytic(dp, ode, "forward", cache, max_rank, cap))
    bwd = guarded([Not(p), q, sq_b],
                  progress_semianalytic(dn, ode, "backward", cache, max_rank, cap))
    return (VerificationCondition(fwd, "sAI-fwd"), VerificationCondition(bwd, "sAI-bwd"))


def cut_init_vc(p: Formula, cut: Formula, ode: ODESystem) -> VerificationCondition:
    """``P ∧ Q → C``: the cut holds wherever the candidate starts."""
    return VerificationCondition(guarded([p, domain_of(ode)], cut), "dC-init")


def trivially_valid(f: Formula) -> bool:
    """Valid by expansion alone: the conclusion's atoms are ``0 = 0`` or ``0 ≥ 0``."""
    if isinstance(f, Truth):
        return f.value
    if isinstance(f, Implies):
        return trivially_valid(f.rhs)
    if isinstance(f, And):
        return all(trivially_valid(a) for a in f.args)
    if isinstance(f, Atom):
        return f.rel in ("=", ">=") and not expand(f.lhs)
    return False
