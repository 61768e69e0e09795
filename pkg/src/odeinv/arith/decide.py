"""Deciding verification conditions: prove, refute, or give up honestly.

:func:`decide` treats a quantifier-free formula as implicitly universally
closed.  It proves validity by showing every disjunct of the negation's DNF
infeasible (see :mod:`odeinv.arith.prove`), and refutes it by finding a
rational point at which interval evaluation certifies falsity.  Anything
else is ``unknown``.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from ..expr import Term, Var, applications, evaluate, expand, free_vars, from_monomials
from ..formula import (DEFAULT_DNF_CAP, DNFCapExceeded, Formula, Not, Truth, formula_atoms,
                       formula_vars, holds, to_dnf)
from .interval import DEFAULT_PRECISION, MAX_PRECISION, interval_sign
from .prove import PsatzWitness, SturmWitness, check_infeasibility, find_infeasibility
from .sturm import rational_roots

__all__ = ["Decision", "SamplerConfig", "decide", "refute", "certify_refutation",
           "evaluate_at", "DEFAULT_SAMPLE_BUDGET", "DEFAULT_SEED"]

DEFAULT_SAMPLE_BUDGET = 2000
DEFAULT_SEED = 0

_GRID = [Fraction(v) for v in (0, 1, -1, Fraction(1, 2), Fraction(-1, 2), 2, -2,
                               Fraction(1, 4), Fraction(-1, 4), 3, -3,
                               Fraction(3, 2), Fraction(-3, 2))]


@dataclass(frozen=True)
class SamplerConfig:
    seed: int = DEFAULT_SEED
    budget: int = DEFAULT_SAMPLE_BUDGET
    radius: Fraction = Fraction(4)
    precision: int = DEFAULT_PRECISION
    max_precision: int = MAX_PRECISION


@dataclass(frozen=True)
class Decision:
    """Outcome of :func:`decide`.

    ``status`` is ``proved``, ``refuted`` or ``unknown``.  Proofs carry one
    witness per disjunct of the negated formula; refutations carry a point.
    """

    status: str
    witnesses: tuple = ()
    point: Mapping | None = None
    reason: str = ""
    resource_limited: bool = False

    @property
    def proved(self) -> bool:
        return self.status == "proved"

    @property
    def refuted(self) -> bool:
        return self.status == "refuted"


def evaluate_at(f: Formula, point: Mapping, precision: int = DEFAULT_PRECISION,
                max_precision: int = MAX_PRECISION):
    """Three-valued truth of ``f`` at a rational point with certified signs."""

    def sign(t):
        return interval_sign(t, point, precision, max_precision)

    return holds(f, point, sign)


def certify_refutation(f: Formula, point: Mapping, precision: int = DEFAULT_PRECISION) -> bool:
    """``f`` is certainly false at ``point`` when evaluated at ``precision`` bits."""
    return evaluate_at(f, point, precision, max_precision=precision) is False


# ---------------------------------------------------------------------------
# sampling

def _poly_in(t: Term, x: str):
    """Coefficients of ``t`` as a polynomial in ``x`` (other atoms kept), or None."""
    for a in applications(t):
        if x in free_vars(a):
            return None
    coeffs: dict = {}
    for mono, c in expand(t).items():
        deg = 0
        rest = []
        for atom, e in mono:
            if atom == Var(x):
                deg = e
            else:
                rest.append((atom, e))
        coeffs.setdefault(deg, {})[tuple(rest)] = c
    return coeffs


def _boundary_points(terms: Sequence[Term], variables: Sequence[str], limit: int):
    """Points solving a single atom for one variable, other variables on the grid."""
    out = []
    base_values = _GRID[:5]
    for t in terms:
        for x in variables:
            coeffs = _poly_in(t, x)
            if coeffs is None or max(coeffs, default=0) == 0:
                continue
            others = [v for v in variables if v != x]
            for combo in itertools.product(base_values, repeat=len(others)):
                env = dict(zip(others, combo))
                try:
                    up = [Fraction(0)] * (max(coeffs) + 1)
                    for deg, rest in coeffs.items():
                        up[deg] = Fraction(evaluate(from_monomials(rest), env))
                except KeyError:
                    continue
                for r in rational_roots(up):
                    p = dict(env)
                    p[x] = r
                    out.append(p)
                    if len(out) >= limit:
                        return out
    return out


def _candidates(f: Formula, variables: Sequence[str], cfg: SamplerConfig, focus: Sequence[Term]):
    n = len(variables)
    if n == 0:
        yield {}
        return
    seen = set()

    def emit(p):
        key = tuple(p[v] for v in variables)
        if key in seen:
            return None
        seen.add(key)
        return p

    budget = cfg.budget
    grid_share = max(1, budget // 3)
    k = 1
    while (k + 1) ** n <= grid_share and k + 1 <= len(_GRID):
        k += 1
    for combo in itertools.product(_GRID[:k], repeat=n):
        p = emit(dict(zip(variables, combo)))
        if p is not None:
            yield p
    for p in _boundary_points(focus, variables, max(1, budget // 3)):
        p = emit(p)
        if p is not None:
            yield p
    rng = random.Random(cfg.seed)
    r = int(cfg.radius)
    for _ in range(20 * budget):
        combo = []
        for _ in variables:
            den = rng.choice((1, 2, 4, 8, 3, 16))
            num = rng.randint(-r * den, r * den)
            combo.append(Fraction(num, den))
        p = emit(dict(zip(variables, combo)))
        if p is not None:
            yield p


def refute(f: Formula, config: SamplerConfig | None = None, focus: Sequence[Term] | None = None):
    """A rational point where ``f`` is certifiably false, or ``None``.

    Deterministic for a fixed configuration.  Each returned point has been
    re-certified at doubled precision.
    """
    cfg = config or SamplerConfig()
    if isinstance(f, Truth):
        return None if f.value else {}
    variables = sorted(formula_vars(f))
    terms = focus if focus is not None else [a.lhs for a in formula_atoms(f)]
    count = 0
    for p in _candidates(f, variables, cfg, terms):
        if count >= cfg.budget:
            break
        count += 1
        if evaluate_at(f, p, cfg.precision, cfg.max_precision) is False:
            if certify_refutation(f, p, 2 * cfg.precision) or \
                    evaluate_at(f, p, 2 * cfg.precision, cfg.max_precision) is False:
                return p
    return None


# ---------------------------------------------------------------------------

def decide(f: Formula, config: SamplerConfig | None = None, dnf_cap: int = DEFAULT_DNF_CAP,
           groebner_budget: int = 10**5) -> Decision:
    """Prove, refute, or return ``unknown`` for the universal closure of ``f``."""
    cfg = config or SamplerConfig()
    if isinstance(f, Truth):
        if f.value:
            return Decision("proved", reason="trivially true")
        return Decision("refuted", point={}, reason="trivially false")
    try:
        neg_dnf = to_dnf(Not(f), dnf_cap)
    except DNFCapExceeded as exc:
        p = refute(f, cfg)
        if p is not None:
            return Decision("refuted", point=p, reason="sampling")
        return Decision("unknown", reason=str(exc), resource_limited=True)
    witnesses = []
    open_parts = []
    atoms_f = [a.lhs for a in formula_atoms(f)]

    def focus_of(parts):
        out = []
        for d in parts:
            for t in d.nonstrict + d.strict:
                if t not in out:
                    out.append(t)
        return out + [t for t in atoms_f if t not in out]

    for d in neg_dnf.disjuncts:
        w = find_infeasibility(d, groebner_budget)
        witnesses.append(w)
        if w is None:
            open_parts.append(d)
            if len(open_parts) == 1:
                # counterexamples live in open cases: try the first one right away
                p = refute(f, cfg, focus_of(open_parts))
                if p is not None:
                    return Decision("refuted", point=p, reason="certified counterexample")
    if not open_parts:
        return Decision("proved", witnesses=tuple(witnesses), reason="infeasibility witnesses")
    if len(open_parts) > 1:
        p = refute(f, cfg, focus_of(open_parts))
        if p is not None:
            return Decision("refuted", point=p, reason="certified counterexample")
    return Decision("unknown", witnesses=tuple(witnesses),
                    reason=f"{len(open_parts)} of {len(neg_dnf)} cases open")
