"""Exact sparse multivariate polynomials over the rationals and Gröbner bases.

Polynomials live in a :class:`Ring` whose indeterminates are *atoms*:
variables or function-application terms treated as opaque symbols.  The
monomial order is degree-reverse-lexicographic throughout.

:func:`groebner` runs Buchberger's algorithm while tracking, for every basis
element, its cofactor row over the *original* generators, so ideal
membership answers come with cofactors for the input polynomials themselves.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .expr import App, Term, Var, expand, from_monomials, term_key

__all__ = [
    "Ring", "Poly", "GroebnerBasis", "BudgetExceeded", "UnmappedAtomError",
    "poly_from_term", "groebner", "ideal_membership", "DEFAULT_STEP_BUDGET",
]

DEFAULT_STEP_BUDGET = 10**6


class BudgetExceeded(RuntimeError):
    """The S-polynomial reduction budget ran out before the basis was complete."""

    def __init__(self, budget: int):
        super().__init__(f"Groebner step budget of {budget} reductions exhausted")
        self.budget = budget


class UnmappedAtomError(KeyError):
    def __init__(self, atom):
        super().__init__(atom)
        self.atom = atom

    def __str__(self):
        return f"subterm {self.atom} is not an indeterminate of the ring"


def _grevlex(m: tuple):
    return (sum(m), tuple(-e for e in reversed(m)))


class Ring:
    """Polynomial ring ``Q[atoms]`` with a fixed indeterminate order."""

    __slots__ = ("atoms", "index", "_hash")

    def __init__(self, atoms: Iterable[Term]):
        self.atoms = tuple(atoms)
        self.index = {a: i for i, a in enumerate(self.atoms)}
        if len(self.index) != len(self.atoms):
            raise ValueError("duplicate ring indeterminates")
        self._hash = hash(self.atoms)

    @classmethod
    def over(cls, variables: Iterable[str], chain: Iterable[Term] = ()) -> "Ring":
        return cls([Var(v) for v in variables] + list(chain))

    def __eq__(self, other):
        return self is other or (isinstance(other, Ring) and self.atoms == other.atoms)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return "Ring(" + ", ".join(str(a) for a in self.atoms) + ")"

    @property
    def nvars(self) -> int:
        return len(self.atoms)

    def zero(self) -> "Poly":
        return Poly(self, {})

    def one(self) -> "Poly":
        return self.const(1)

    def const(self, c) -> "Poly":
        c = Fraction(c)
        return Poly(self, {(0,) * self.nvars: c} if c else {})

    def gen(self, atom) -> "Poly":
        if isinstance(atom, str):
            atom = Var(atom)
        i = self.index[atom]
        m = [0] * self.nvars
        m[i] = 1
        return Poly(self, {tuple(m): Fraction(1)})

    def from_term(self, t: Term) -> "Poly":
        out = {}
        n = self.nvars
        for mono, c in expand(t).items():
            m = [0] * n
            for atom, e in mono:
                i = self.index.get(atom)
                if i is None:
                    raise UnmappedAtomError(atom)
                m[i] = e
            out[tuple(m)] = c
        return Poly(self, out)

    def extend(self, atoms: Iterable[Term]) -> "Ring":
        extra = [a for a in atoms if a not in self.index]
        return Ring(self.atoms + tuple(extra)) if extra else self


class Poly:
    """Immutable sparse polynomial; ``terms`` maps exponent tuples to nonzero rationals."""

    __slots__ = ("ring", "terms", "_lead")

    def __init__(self, ring: Ring, terms: Mapping[tuple, Fraction]):
        self.ring = ring
        self.terms = {m: Fraction(c) for m, c in terms.items() if c}
        self._lead = None

    # -- basic protocol
    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.terms == ({(0,) * self.ring.nvars: Fraction(other)} if other else {})
        return isinstance(other, Poly) and self.ring == other.ring and self.terms == other.terms

    def __hash__(self):
        return hash((self.ring, frozenset(self.terms.items())))

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __repr__(self):
        return f"Poly({self.to_term()})"

    def __str__(self):
        return str(self.to_term())

    def _lift(self, other) -> "Poly":
        if isinstance(other, Poly):
            if other.ring != self.ring:
                raise ValueError("polynomials from different rings")
            return other
        return self.ring.const(other)

    # -- arithmetic
    def __add__(self, other):
        other = self._lift(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            v = out.get(m, 0) + c
            if v:
                out[m] = v
            else:
                out.pop(m, None)
        return Poly(self.ring, out)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.ring, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        other = self._lift(other)
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                v = out.get(m, 0) + c1 * c2
                if v:
                    out[m] = v
                else:
                    out.pop(m, None)
        return Poly(self.ring, out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative power")
        result = self.ring.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def scale(self, c) -> "Poly":
        c = Fraction(c)
        if not c:
            return self.ring.zero()
        return Poly(self.ring, {m: v * c for m, v in self.terms.items()})

    def mul_term(self, mono: tuple, c: Fraction) -> "Poly":
        return Poly(self.ring, {tuple(a + b for a, b in zip(m, mono)): v * c
                                for m, v in self.terms.items()})

    # -- structure
    def leading(self) -> tuple:
        """Leading (monomial, coefficient) under grevlex."""
        if self._lead is None:
            self._lead = max(self.terms, key=_grevlex)
        return self._lead, self.terms[self._lead]

    def degree(self) -> int:
        return max((sum(m) for m in self.terms), default=-1)

    def constant(self) -> Fraction:
        return self.terms.get((0,) * self.ring.nvars, Fraction(0))

    def is_constant(self) -> bool:
        return all(not any(m) for m in self.terms)

    def support(self) -> set:
        """Indices of indeterminates that occur."""
        return {i for m in self.terms for i, e in enumerate(m) if e}

    def monic(self) -> "Poly":
        if not self.terms:
            return self
        return self.scale(1 / self.leading()[1])

    def derivative(self, i: int) -> "Poly":
        out: dict = {}
        for m, c in self.terms.items():
            e = m[i]
            if e:
                mm = m[:i] + (e - 1,) + m[i + 1:]
                out[mm] = out.get(mm, 0) + c * e
        return Poly(self.ring, out)

    def embed(self, ring: Ring) -> "Poly":
        """Re-express in a ring whose atoms include all atoms used here."""
        if ring == self.ring:
            return self
        pos = []
        for i, a in enumerate(self.ring.atoms):
            pos.append(ring.index.get(a))
        out = {}
        for m, c in self.terms.items():
            mm = [0] * ring.nvars
            for i, e in enumerate(m):
                if e:
                    if pos[i] is None:
                        raise UnmappedAtomError(self.ring.atoms[i])
                    mm[pos[i]] = e
            out[tuple(mm)] = c
        return Poly(ring, out)

    def compose(self, images: Sequence["Poly"]) -> "Poly":
        """Substitute polynomial ``images[i]`` (in a common target ring) for indeterminate i."""
        if not images:
            return self
        target = images[0].ring
        result = target.zero()
        for m, c in self.terms.items():
            t = target.const(c)
            for i, e in enumerate(m):
                if e:
                    t = t * (images[i] ** e)
            result = result + t
        return result

    def evaluate(self, values: Sequence):
        total = 0
        for m, c in self.terms.items():
            t = c
            for v, e in zip(values, m):
                if e:
                    t = t * v ** e
            total = total + t
        return total

    def to_term(self) -> Term:
        atoms = self.ring.atoms
        mono_terms = {}
        for m, c in self.terms.items():
            key = tuple(sorted(((atoms[i], e) for i, e in enumerate(m) if e),
                               key=lambda p: term_key(p[0])))
            mono_terms[key] = c
        return from_monomials(mono_terms)


def poly_from_term(t: Term, indeterminates) -> Poly:
    """Expand ``t`` exactly over the given indeterminates.

    ``indeterminates`` is a :class:`Ring`, or a mapping from atom (term or
    variable name) to index, or a sequence of atoms.
    """
    if isinstance(indeterminates, Ring):
        return indeterminates.from_term(t)
    if isinstance(indeterminates, Mapping):
        atoms = [None] * len(indeterminates)
        for a, i in indeterminates.items():
            atoms[i] = Var(a) if isinstance(a, str) else a
        return Ring(atoms).from_term(t)
    return Ring([Var(a) if isinstance(a, str) else a for a in indeterminates]).from_term(t)


# ---------------------------------------------------------------------------
# Gröbner bases with cofactor bookkeeping

def _divides(a: tuple, b: tuple) -> bool:
    return all(x <= y for x, y in zip(a, b))


def _lcm(a: tuple, b: tuple) -> tuple:
    return tuple(max(x, y) for x, y in zip(a, b))


def _mono_div(a: tuple, b: tuple) -> tuple:
    return tuple(x - y for x, y in zip(a, b))


class _Budget:
    __slots__ = ("left", "total")

    def __init__(self, total: int):
        self.total = total
        self.left = total

    def spend(self):
        self.left -= 1
        if self.left < 0:
            raise BudgetExceeded(self.total)


def _heap_key(m: tuple):
    """Min-heap key whose smallest element is the grevlex-largest monomial."""
    return (-sum(m), tuple(reversed(m)))


def _reduce(f: Poly, basis: Sequence[Poly], budget: _Budget | None = None, full: bool = True):
    """Divide ``f`` by ``basis``: returns (quotients as dicts, remainder)."""
    ring = f.ring
    quotients = [dict() for _ in basis]
    leads = [g.leading() for g in basis]
    p = dict(f.terms)
    # each step only introduces monomials below the one eliminated, so a lazy
    # heap (stale entries skipped on pop) yields the leading monomial in order
    heap = [(_heap_key(m), m) for m in p]
    heapq.heapify(heap)
    rem: dict = {}
    while heap:
        _, m = heapq.heappop(heap)
        c = p.get(m)
        if c is None:
            continue
        for k, (lm, lc) in enumerate(leads):
            if _divides(lm, m):
                if budget is not None:
                    budget.spend()
                q_m = _mono_div(m, lm)
                q_c = c / lc
                quotients[k][q_m] = quotients[k].get(q_m, 0) + q_c
                for gm, gc in basis[k].terms.items():
                    mm = tuple(a + b for a, b in zip(gm, q_m))
                    old = p.get(mm)
                    v = (old or 0) - q_c * gc
                    if v:
                        p[mm] = v
                        if old is None:
                            heapq.heappush(heap, (_heap_key(mm), mm))
                    elif old is not None:
                        del p[mm]
                break
        else:
            if not full:
                rem.update(p)
                break
            rem[m] = c
            del p[m]
    return [Poly(ring, q) for q in quotients], Poly(ring, rem)


def _combine(rows: Sequence[Sequence[Poly]], quotients: Sequence[Poly], width: int, ring: Ring):
    out = [ring.zero() for _ in range(width)]
    for q, row in zip(quotients, rows):
        if q:
            for i in range(width):
                if row[i]:
                    out[i] = out[i] + q * row[i]
    return out


@dataclass(frozen=True)
class GroebnerBasis:
    """Reduced grevlex Gröbner basis with transformation rows.

    ``rows[j][i]`` is the cofactor of ``generators[i]`` in ``basis[j]``.
    """

    generators: tuple
    basis: tuple
    rows: tuple
    order: str = "grevlex"

    def __post_init__(self):
        for g, row in zip(self.basis, self.rows):
            combo = sum((c * p for c, p in zip(row, self.generators)), self.ring.zero())
            if combo != g:
                raise AssertionError("transformation row does not reproduce basis element")

    @property
    def ring(self) -> Ring:
        return self.generators[0].ring

    def is_unit(self) -> bool:
        return len(self.basis) == 1 and self.basis[0].is_constant() and bool(self.basis[0])

    def normal_form(self, p: Poly, budget: int | None = None) -> Poly:
        return _reduce(p, self.basis, _Budget(budget) if budget else None)[1]

    def reduce(self, p: Poly, budget: int | None = None):
        """Return (cofactors over the original generators, remainder)."""
        quotients, rem = _reduce(p, self.basis, _Budget(budget) if budget else None)
        cof = _combine(self.rows, quotients, len(self.generators), p.ring)
        return cof, rem

    def contains(self, p: Poly):
        cof, rem = self.reduce(p)
        if rem:
            return None
        check = sum((c * g for c, g in zip(cof, self.generators)), p.ring.zero())
        if check != p:
            raise AssertionError("ideal membership cofactors failed re-verification")
        return cof


def groebner(generators: Sequence[Poly], budget: int = DEFAULT_STEP_BUDGET) -> GroebnerBasis:
    """Buchberger's algorithm with cofactor rows over the input generators."""
    gens = tuple(generators)
    if not gens:
        raise ValueError("groebner needs at least one generator")
    ring = gens[0].ring
    for g in gens:
        if g.ring != ring:
            raise ValueError("generators from different rings")
    width = len(gens)
    spend = _Budget(budget)

    def unit_row(i):
        return [ring.one() if k == i else ring.zero() for k in range(width)]

    G: list = []
    R: list = []
    pairs: list = []
    counter = 0

    def add(poly, row):
        nonlocal counter
        lc = poly.leading()[1]
        poly = poly.scale(1 / lc)
        row = [r.scale(1 / lc) for r in row]
        k = len(G)
        G.append(poly)
        R.append(row)
        lk = poly.leading()[0]
        for i in range(k):
            if G[i] is None:
                continue
            li = G[i].leading()[0]
            lcm = _lcm(li, lk)
            heapq.heappush(pairs, (sum(lcm), _grevlex(lcm), counter, i, k))
            counter += 1

    for i, g in enumerate(gens):
        if not g:
            continue
        q, r = _reduce(g, [p for p in G], spend)
        if r:
            add(r, [a - b for a, b in zip(unit_row(i), _combine(R, q, width, ring))])

    done = set()
    while pairs:
        _, _, _, i, j = heapq.heappop(pairs)
        done.add((i, j))
        li, lj = G[i].leading()[0], G[j].leading()[0]
        lcm = _lcm(li, lj)
        if all(a == 0 or b == 0 for a, b in zip(li, lj)):
            continue  # coprime leading monomials
        # chain criterion
        skip = False
        for k in range(len(G)):
            if k in (i, j):
                continue
            if _divides(G[k].leading()[0], lcm):
                a, b = (min(i, k), max(i, k)), (min(j, k), max(j, k))
                if a in done and b in done:
                    skip = True
                    break
        if skip:
            continue
        mi, mj = _mono_div(lcm, li), _mono_div(lcm, lj)
        s = G[i].mul_term(mi, Fraction(1)) - G[j].mul_term(mj, Fraction(1))
        s_row = [R[i][k].mul_term(mi, Fraction(1)) - R[j][k].mul_term(mj, Fraction(1))
                 for k in range(width)]
        spend.spend()
        q, r = _reduce(s, G, spend)
        if r:
            sub = _combine(R, q, width, ring)
            add(r, [a - b for a, b in zip(s_row, sub)])

    # minimal basis: drop elements whose leading monomial is divisible by another's
    keep = []
    for i, g in enumerate(G):
        li = g.leading()[0]
        redundant = False
        for j, h in enumerate(G):
            if i == j:
                continue
            lj = h.leading()[0]
            if _divides(lj, li) and (lj != li or j < i):
                redundant = True
                break
        if not redundant:
            keep.append(i)
    basis = [G[i] for i in keep]
    rows = [R[i] for i in keep]
    # interreduce tails
    for idx in range(len(basis)):
        others = basis[:idx] + basis[idx + 1:]
        other_rows = rows[:idx] + rows[idx + 1:]
        q, r = _reduce(basis[idx], others, spend)
        row = [a - b for a, b in zip(rows[idx], _combine(other_rows, q, width, ring))]
        lc = r.leading()[1]
        basis[idx] = r.scale(1 / lc)
        rows[idx] = [x.scale(1 / lc) for x in row]
    order = sorted(range(len(basis)), key=lambda k: _grevlex(basis[k].leading()[0]))
    return GroebnerBasis(gens, tuple(basis[k] for k in order),
                         tuple(tuple(rows[k]) for k in order))


def ideal_membership(p: Poly, generators: Sequence[Poly], budget: int = DEFAULT_STEP_BUDGET):
    """Cofactors ``q`` with ``p == sum(q_i * generators_i)``, or ``None`` if ``p`` is not a member.

    The returned identity is re-verified by exact expansion.
    """
    gens = list(generators)
    if not p:
        return [p.ring.zero() for _ in gens]
    if not any(gens):
        return None
    gb = groebner(gens, budget)
    return gb.contains(p)
