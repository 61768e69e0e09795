"""Noetherian chains: application subterms closed under partial derivatives.

A chain turns an extended term into a polynomial over base variables plus
chain indeterminates.  Chain indeterminates are the (normalized) application
terms themselves, so a :class:`~odeinv.ring.Ring` over ``base + elements``
represents the chain ring directly and converting back to terms needs no
substitution step.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .expr import (App, Registry, Term, Var, ZERO, DEFAULT_REGISTRY, expand, free_vars,
                   normalize, partial_derivative, term_key)
from .ring import Poly, Ring

__all__ = ["NoetherianChain", "ChainRep", "chain_for_term", "chain_for_terms",
           "chain_union", "derivative_table_entry", "ChainError"]

MAX_CHAIN_LENGTH = 256


class ChainError(ValueError):
    pass


def _top_atoms(t: Term) -> set:
    """Application atoms (with normalized arguments) in the expansion of ``t``."""
    return {a for mono in expand(t) for a, _ in mono if isinstance(a, App)}


def _closure(seeds: Iterable[App], registry: Registry) -> list:
    seen: set = set()
    work = list(seeds)
    while work:
        h = work.pop()
        if h in seen:
            continue
        sym = registry[h.symbol]
        if sym.arity != len(h.args):
            raise ChainError(f"{h.symbol} expects {sym.arity} arguments")
        seen.add(h)
        if len(seen) > MAX_CHAIN_LENGTH:
            raise ChainError("chain construction does not close within "
                             f"{MAX_CHAIN_LENGTH} elements")
        for a in h.args:
            work.extend(_top_atoms(a))
        for k in range(sym.arity):
            work.extend(_top_atoms(sym.instantiate(k, h.args)))
    return sorted(seen, key=term_key)


class NoetherianChain:
    """Ordered chain elements over fixed base variables with a closed derivative table.

    ``table[j][i]`` is ∂h_j/∂x_i as a polynomial in :attr:`ring`.
    """

    def __init__(self, base: Sequence[str], elements: Sequence[App],
                 registry: Registry | None = None):
        self.registry = registry or DEFAULT_REGISTRY
        self.base = tuple(base)
        self.elements = tuple(elements)
        self.ring = Ring([Var(v) for v in self.base] + list(self.elements))
        for h in self.elements:
            stray = free_vars(h) - set(self.base)
            if stray:
                raise ChainError(f"chain element {h} mentions non-base variables {sorted(stray)}")
        self.table = tuple(tuple(self._entry(h, x) for x in self.base) for h in self.elements)

    def _entry(self, h: App, x: str) -> Poly:
        sym = self.registry[h.symbol]
        total = self.ring.zero()
        for k, arg in enumerate(h.args):
            darg = partial_derivative(arg, x, self.registry)
            if darg == ZERO:
                continue
            total = total + self.ring.from_term(sym.instantiate(k, h.args)) * self.ring.from_term(darg)
        # re-verify against the symbolic derivative
        if normalize(total.to_term()) != partial_derivative(h, x, self.registry):
            raise ChainError(f"derivative table entry for {h} by {x} failed re-verification")
        return total

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __eq__(self, other):
        return (isinstance(other, NoetherianChain) and self.base == other.base
                and self.elements == other.elements)

    def __hash__(self):
        return hash((self.base, self.elements))

    def __repr__(self):
        return "NoetherianChain([" + ", ".join(str(h) for h in self.elements) + "])"

    def poly(self, t: Term) -> Poly:
        return self.ring.from_term(t)

    def total_derivative(self, p: Poly, x: str) -> Poly:
        """∂p/∂x where chain indeterminates depend on ``x`` through the table."""
        i = self.base.index(x)
        nb = len(self.base)
        out = p.derivative(i)
        for j in range(len(self.elements)):
            entry = self.table[j][i]
            if entry:
                dp = p.derivative(nb + j)
                if dp:
                    out = out + dp * entry
        return out


@dataclass(frozen=True)
class ChainRep:
    """A term represented as ``generator(x, h_1(x), …, h_r(x))``."""

    chain: NoetherianChain
    generator: Poly
    term: Term = field(default=None, compare=False)

    def __post_init__(self):
        if self.term is not None and normalize(self.generator.to_term()) != normalize(self.term):
            raise ChainError("chain representation does not reproduce its term")


def chain_for_terms(terms: Iterable[Term], base: Sequence[str] | None = None,
                    registry: Registry | None = None) -> NoetherianChain:
    """Joint chain of several terms over ``base`` (default: their free variables, sorted)."""
    registry = registry or DEFAULT_REGISTRY
    terms = list(terms)
    if base is None:
        vs: set = set()
        for t in terms:
            vs |= free_vars(t)
        base = sorted(vs)
    seeds: set = set()
    for t in terms:
        seeds |= _top_atoms(t)
    return NoetherianChain(base, _closure(seeds, registry), registry)


def chain_for_term(t: Term, base: Sequence[str] | None = None,
                   registry: Registry | None = None) -> ChainRep:
    chain = chain_for_terms([t], base, registry)
    return ChainRep(chain, chain.poly(t), t)


def chain_union(a: NoetherianChain, b: NoetherianChain) -> NoetherianChain:
    """Deduplicated ordered union; base variables are merged as well."""
    base = list(a.base) + [v for v in b.base if v not in a.base]
    elements = sorted(set(a.elements) | set(b.elements), key=term_key)
    return NoetherianChain(base, elements, a.registry)


def derivative_table_entry(chain: NoetherianChain, j: int, x) -> Poly:
    if not 0 <= j < len(chain.elements):
        raise IndexError(f"chain index {j} out of range")
    if isinstance(x, int):
        if not 0 <= x < len(chain.base):
            raise IndexError(f"base index {x} out of range")
        return chain.table[j][x]
    if x not in chain.base:
        raise IndexError(f"{x!r} is not a base variable")
    return chain.table[j][chain.base.index(x)]
