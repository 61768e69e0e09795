"""Lie derivatives along ODEs and differential radical rank certificates.

Everything is computed in the polynomial ring over the base variables plus
the joint Noetherian chain of the subject term and the right-hand sides;
that ring is closed under Lie derivation, so a rank search is a sequence of
ideal-membership checks in one fixed ring.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .chain import NoetherianChain, chain_for_terms
from .expr import (Const, Registry, Term, Var, DEFAULT_REGISTRY, as_term, expand, free_vars,
                   neg, normalize)
from .ring import DEFAULT_STEP_BUDGET, Poly, ideal_membership

__all__ = [
    "ODESystem", "RankCertificate", "RankExceeded", "CertificateCache",
    "lie_derivative", "higher_lie", "rank_certificate", "lie_sequence",
    "diff_radical_formula", "ode_chain", "DEFAULT_MAX_RANK",
]

DEFAULT_MAX_RANK = 16


class RankExceeded(RuntimeError):
    """No differential radical identity of rank at most ``max_rank`` was found."""

    def __init__(self, max_rank: int, term: Term | None = None):
        self.max_rank = max_rank
        self.term = term
        where = f" for {term}" if term is not None else ""
        super().__init__(f"rank exceeds max_rank={max_rank}{where}")


@dataclass(frozen=True)
class ODESystem:
    """``x' = f(x) & Q``: state variables, right-hand sides and a domain constraint.

    Variables of the right-hand sides that have no equation of their own are
    parameters and stay constant along the flow.
    """

    states: tuple
    rhs: tuple
    domain: object = None
    registry: Registry = field(default=DEFAULT_REGISTRY, compare=False, repr=False)

    def __post_init__(self):
        states = tuple(self.states)
        rhs = tuple(normalize(as_term(f)) for f in self.rhs)
        if len(states) != len(rhs):
            raise ValueError("one right-hand side per state variable is required")
        if len(set(states)) != len(states):
            raise ValueError("duplicate state variables")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "rhs", rhs)
        if self.domain is None:
            from .formula import TRUE
            object.__setattr__(self, "domain", TRUE)

    @classmethod
    def from_equations(cls, equations: dict, domain=None, registry: Registry | None = None):
        """Build from ``{"u": "-v + ...", ...}``; strings are parsed as terms."""
        from .expr import parse_term
        registry = registry or DEFAULT_REGISTRY
        states, rhs = [], []
        for x, f in equations.items():
            states.append(x)
            rhs.append(parse_term(f, registry) if isinstance(f, str) else as_term(f))
        if isinstance(domain, str):
            from .formula import parse_formula
            domain = parse_formula(domain, registry)
        return cls(tuple(states), tuple(rhs), domain, registry)

    @property
    def parameters(self) -> tuple:
        vs: set = set()
        for f in self.rhs:
            vs |= free_vars(f)
        return tuple(sorted(vs - set(self.states)))

    @property
    def dimension(self) -> int:
        return len(self.states)

    def rhs_of(self, x: str) -> Term:
        return self.rhs[self.states.index(x)]

    def reversed(self) -> "ODESystem":
        """The time-reversed system ``x' = -f(x) & Q``."""
        return ODESystem(self.states, tuple(neg(f) for f in self.rhs), self.domain, self.registry)

    def with_domain(self, domain) -> "ODESystem":
        return ODESystem(self.states, self.rhs, domain, self.registry)

    def has_clock(self) -> bool:
        return any(f == Const(1) for f in self.rhs)

    def with_clock(self, name: str = "t") -> "ODESystem":
        """Append a fresh clock ``t' = 1`` (suffixing the name if taken)."""
        taken = set(self.states) | set(self.parameters)
        fresh, k = name, 0
        while fresh in taken:
            k += 1
            fresh = f"{name}{k}"
        return ODESystem(self.states + (fresh,), self.rhs + (Const(1),), self.domain,
                         self.registry)

    def key(self) -> tuple:
        return (self.states, self.rhs)

    def __str__(self):
        eqs = ", ".join(f"{x}' = {f}" for x, f in zip(self.states, self.rhs))
        from .formula import TRUE, formula_text
        if self.domain == TRUE:
            return "{" + eqs + "}"
        return "{" + eqs + " & " + formula_text(self.domain) + "}"


def ode_chain(ode: ODESystem, terms: Iterable[Term] = ()) -> NoetherianChain:
    """Joint chain of ``terms`` and the right-hand sides.

    Base variables are the states, then parameters, then any other free
    variables of ``terms`` (which are likewise constant along the flow).
    """
    terms = list(terms)
    base = list(ode.states) + list(ode.parameters)
    extra: set = set()
    for t in terms:
        extra |= free_vars(t)
    base += sorted(extra - set(base))
    return chain_for_terms(terms + list(ode.rhs), base, ode.registry)


def _lie_poly(p: Poly, chain: NoetherianChain, rhs_polys: Sequence[Poly],
              states: Sequence[str]) -> Poly:
    out = p.ring.zero()
    for x, f in zip(states, rhs_polys):
        if f:
            d = chain.total_derivative(p, x)
            if d:
                out = out + d * f
    return out


def lie_derivative(e, ode: ODESystem) -> Term:
    """``Σ ∂e/∂x_i · f_i`` in normal form."""
    return higher_lie(e, ode, 1)


def higher_lie(e, ode: ODESystem, i: int) -> Term:
    if i < 0:
        raise ValueError("Lie derivative order must be nonnegative")
    e = normalize(as_term(e))
    if i == 0:
        return e
    chain = ode_chain(ode, [e])
    rhs = [chain.poly(f) for f in ode.rhs]
    p = chain.poly(e)
    for _ in range(i):
        p = _lie_poly(p, chain, rhs, ode.states)
    return p.to_term()


@dataclass(frozen=True)
class RankCertificate:
    """Differential radical identity ``L_N = Σ_{i<N} g_i L_i``.

    ``lies`` holds ``L_0 … L_N`` and ``cofactors`` holds ``g_0 … g_{N-1}``,
    all as normalized terms.
    """

    term: Term
    rank: int
    lies: tuple
    cofactors: tuple

    def __post_init__(self):
        if self.rank < 1 or len(self.lies) != self.rank + 1 or len(self.cofactors) != self.rank:
            raise ValueError("malformed rank certificate")
        if not self.verify():
            raise AssertionError("rank certificate identity failed re-verification")

    def verify(self) -> bool:
        """Re-expand ``L_N − Σ g_i L_i`` and check it is identically zero."""
        residual = self.lies[-1]
        for g, L in zip(self.cofactors, self.lies):
            residual = residual - g * L
        return not expand(residual)

    @property
    def radical(self) -> tuple:
        """``L_0 … L_{N-1}``."""
        return self.lies[:-1]

    def negated(self) -> "RankCertificate":
        """Certificate for ``−e`` by linearity of Lie derivatives (same cofactors)."""
        return RankCertificate(neg(self.term), self.rank, tuple(neg(L) for L in self.lies),
                               self.cofactors)


class CertificateCache:
    """Memo of rank certificates keyed by (term, vector field).

    Reads are lock-free dictionary lookups; writes are serialized.
    """

    def __init__(self):
        self._data: dict = {}
        self._lock = threading.Lock()

    def get(self, e: Term, ode: ODESystem):
        return self._data.get((e, ode.key()))

    def put(self, cert: RankCertificate, ode: ODESystem):
        with self._lock:
            self._data.setdefault((cert.term, ode.key()), cert)

    def __len__(self):
        return len(self._data)

    def entries(self) -> list:
        """``(term, field key, certificate)`` triples in insertion order."""
        return [(t, k, c) for (t, k), c in list(self._data.items())]


def rank_certificate(e, ode: ODESystem, max_rank: int | None = None,
                     cache: CertificateCache | None = None,
                     budget: int = DEFAULT_STEP_BUDGET) -> RankCertificate:
    """Smallest ``N ≤ max_rank`` with ``L_N ∈ ⟨L_0, …, L_{N-1}⟩`` in the chain ring.

    Chain elements are treated as free indeterminates, so the identity found
    holds for the actual functions as well.  The domain constraint of ``ode``
    is not used.
    """
    max_rank = DEFAULT_MAX_RANK if max_rank is None else max_rank
    if max_rank < 1:
        raise ValueError("max_rank must be at least 1")
    e = normalize(as_term(e))
    if cache is not None:
        hit = cache.get(e, ode)
        if hit is None:
            other = cache.get(neg(e), ode)
            hit = other.negated() if other is not None else None
        if hit is not None and hit.rank <= max_rank:
            return hit
    chain = ode_chain(ode, [e])
    rhs = [chain.poly(f) for f in ode.rhs]
    lies = [chain.poly(e)]
    for n in range(1, max_rank + 1):
        nxt = _lie_poly(lies[-1], chain, rhs, ode.states)
        cof = ideal_membership(nxt, lies, budget)
        lies.append(nxt)
        if cof is not None:
            cert = RankCertificate(e, n, tuple(L.to_term() for L in lies),
                                   tuple(q.to_term() for q in cof))
            if cache is not None:
                cache.put(cert, ode)
            return cert
    raise RankExceeded(max_rank, e)


def lie_sequence(e, ode: ODESystem, max_rank: int | None = None,
                 cache: CertificateCache | None = None) -> tuple:
    """``L_0 … L_{N-1}`` for the rank ``N`` of ``e``."""
    return rank_certificate(e, ode, max_rank, cache).radical


def diff_radical_formula(e, ode: ODESystem, max_rank: int | None = None,
                         cache: CertificateCache | None = None):
    """``⋀_{i<N} L_i = 0``."""
    from .formula import sigma_zero_from_lies
    return sigma_zero_from_lies(lie_sequence(e, ode, max_rank, cache))
