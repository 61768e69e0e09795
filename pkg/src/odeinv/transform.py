"""ODE compilations and the analytic hybrid-program reduction.

* :func:`polynomialize` compiles an ODE with Noetherian right-hand sides
  into a polynomial ODE over fresh chain variables plus symbolic initial
  constraints.  Reciprocals ``y = 1/d`` can be characterized implicitly by
  ``d*y - 1 = 0`` with ``y' = -y^2 * lie(d)``.
* :func:`add_clock` appends ``t' = 1``.
* :func:`hp_reduce` computes ``ẽ`` with ``[α](e = 0) ↔ ẽ = 0`` by structural
  recursion over hybrid programs whose tests and domains have the form
  ``d != 0``.  :func:`hp_replay` re-derives the same term from a recorded
  trace without any ideal-membership search.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .chain import NoetherianChain
from .expr import (App, Const, ParseError, Registry, Term, TermParser, Var, DEFAULT_REGISTRY,
                   ONE, ZERO, applications, as_term, expand, free_vars, is_polynomial, neg,
                   normalize, substitute, to_text)
from .formula import Atom, Formula, TRUE, conj, formula_text, parse_formula
from .lie import (CertificateCache, ODESystem, RankCertificate, higher_lie, lie_derivative,
                  ode_chain, rank_certificate)
from .ring import Ring, ideal_membership

__all__ = [
    "PolyIVP", "polynomialize", "add_clock",
    "HybridProgram", "Assign", "Test", "Evolve", "Choice", "Seq", "Loop",
    "parse_program", "program_text", "hp_reduce", "hp_reduce_traced", "hp_replay",
    "HPTrace", "HPReduceError", "NonPolynomialLoop",
]


# ---------------------------------------------------------------------------
# polynomialization

@dataclass(frozen=True)
class PolyIVP:
    """Polynomial ODE with constraints pinning the fresh variables to their meaning.

    ``definitions`` maps each fresh variable to the term it stands for
    (a chain element, or ``1/d`` written as the pair ``(d, "reciprocal")``).
    """

    ode: ODESystem
    constraints: tuple
    definitions: tuple
    source: ODESystem

    def constraint_terms(self) -> list:
        return [c.lhs for c in self.constraints]

    def to_text(self) -> str:
        lines = []
        for y, d in self.definitions:
            if isinstance(d, tuple):
                lines.append(f"# {y} = 1/({to_text(d[0])})")
            else:
                lines.append(f"# {y} = {to_text(d)}")
        lines += ["[variables]", ", ".join(self.ode.states), "", "[ode]"]
        for x, f in zip(self.ode.states, self.ode.rhs):
            lines.append(f"{x}' = {to_text(f)}")
        if self.ode.parameters:
            lines += ["", "[parameters]", ", ".join(self.ode.parameters)]
        if self.ode.domain != TRUE:
            lines += ["", "[domain]", formula_text(self.ode.domain)]
        lines += ["", "[constraints]"]
        lines += [formula_text(c) for c in self.constraints]
        return "\n".join(lines) + "\n"


def _fresh(prefix: str, taken: set, count: int) -> list:
    out = []
    k = 1
    while len(out) < count:
        name = f"{prefix}{k}"
        while name in taken:
            name += "_"
        taken.add(name)
        out.append(name)
        k += 1
    return out


def _with_reciprocals(ode: ODESystem, reciprocals: Mapping[str, Term]) -> tuple:
    """Add ``y' = -y^2 lie(d)`` for each reciprocal ``y = 1/d``."""
    if not reciprocals:
        return ode, []
    for y in reciprocals:
        if y in ode.states:
            raise ValueError(f"reciprocal variable {y!r} already has an equation")
    states = list(ode.states)
    rhs = list(ode.rhs)
    constraints = []
    for y, d in reciprocals.items():
        d = normalize(as_term(d))
        ld = lie_derivative(d, ode)
        states.append(y)
        rhs.append(normalize(neg(Var(y) * Var(y) * ld)))
        constraints.append(Atom(d * Var(y) - ONE, "="))
    return ODESystem(tuple(states), tuple(rhs), ode.domain, ode.registry), constraints


def polynomialize(ode: ODESystem, reciprocals: Mapping[str, Term] | None = None,
                  keep_functions: bool = False, prefix: str = "z") -> PolyIVP:
    """Compile ``ode`` into a polynomial IVP.

    With ``keep_functions`` only the reciprocal characterization is applied
    (the partial construction that keeps ``sin``/``cos``/``exp`` in place).
    """
    reciprocals = dict(reciprocals or {})
    ext, constraints = _with_reciprocals(ode, reciprocals)
    definitions = [(y, (normalize(as_term(d)), "reciprocal")) for y, d in reciprocals.items()]
    if keep_functions:
        return PolyIVP(ext, tuple(constraints), tuple(definitions), ode)
    chain = ode_chain(ext, [c.lhs for c in constraints])
    if not chain.elements:
        return PolyIVP(ext, tuple(constraints), tuple(definitions), ode)
    taken = set(ext.states) | set(ext.parameters) | set(chain.base)
    names = _fresh(prefix, taken, len(chain.elements))
    zvars = [Var(z) for z in names]
    ring = chain.ring
    nb = len(chain.base)
    # images of ring indeterminates in the polynomial target ring
    target = Ring([Var(v) for v in chain.base] + zvars)
    images = [target.gen(Var(v)) for v in chain.base] + [target.gen(z) for z in zvars]

    def rewrite(t: Term) -> Term:
        return ring.from_term(t).compose(images).to_term()

    rhs_polys = [ring.from_term(f) for f in ext.rhs]
    states = list(ext.states) + names
    rhs = [rewrite(f) for f in ext.rhs]
    for j in range(len(chain.elements)):
        total = ring.zero()
        for i, x in enumerate(chain.base):
            if x in ext.states:
                entry = chain.table[j][i]
                if entry:
                    total = total + entry * rhs_polys[ext.states.index(x)]
        rhs.append(total.compose(images).to_term())
    poly_constraints = [Atom(rewrite(c.lhs), "=") for c in constraints]
    chain_constraints = [Atom(z - h, "=") for z, h in zip(zvars, chain.elements)]
    definitions += [(z, h) for z, h in zip(names, chain.elements)]
    domain = ext.domain
    new = ODESystem(tuple(states), tuple(rhs), domain, ode.registry)
    return PolyIVP(new, tuple(chain_constraints + poly_constraints), tuple(definitions), ode)


def add_clock(ode: ODESystem, reuse: bool = False, name: str = "t") -> ODESystem:
    if reuse and ode.has_clock():
        return ode
    return ode.with_clock(name)


# ---------------------------------------------------------------------------
# hybrid programs

class HybridProgram:
    __slots__ = ()

    def __str__(self):
        return program_text(self)


@dataclass(frozen=True)
class Assign(HybridProgram):
    var: str
    value: Term


@dataclass(frozen=True)
class Test(HybridProgram):
    """``?d != 0``."""

    guard: Term


@dataclass(frozen=True)
class Evolve(HybridProgram):
    """``{x' = f & d != 0}``; ``guard`` ``None`` means no domain constraint."""

    ode: ODESystem
    guard: Term | None = None


@dataclass(frozen=True)
class Choice(HybridProgram):
    left: HybridProgram
    right: HybridProgram


@dataclass(frozen=True)
class Seq(HybridProgram):
    first: HybridProgram
    second: HybridProgram


@dataclass(frozen=True)
class Loop(HybridProgram):
    body: HybridProgram


class ProgramParser(TermParser):
    """Grammar::

        choice  ::= seq ( "++" seq )*
        seq     ::= postfix ( ";" postfix )*
        postfix ::= atom "*"*
        atom    ::= ident ":=" term | "?" guard | "{" ode "}" | "{" choice "}" | "(" choice ")"
        ode     ::= ident' "=" term ( "," ident' "=" term )* ( "&" guard )?
        guard   ::= term "!=" term | "true"
    """

    def choice(self) -> HybridProgram:
        node = self.seq()
        while self.at("++"):
            self.advance()
            node = Choice(node, self.seq())
        return node

    def seq(self) -> HybridProgram:
        node = self.postfix()
        while self.at(";"):
            self.advance()
            if self.tok.kind == "eof" or self.at(")", "}"):
                break
            node = Seq(node, self.postfix())
        return node

    def postfix(self) -> HybridProgram:
        node = self.atom()
        while self.at("*"):
            self.advance()
            node = Loop(node)
        return node

    def guard(self) -> Term:
        if self.tok.kind == "ident" and self.tok.text == "true":
            self.advance()
            return ONE
        lhs = self.term()
        self.expect("!=")
        return normalize(lhs - self.term())

    def atom(self) -> HybridProgram:
        tok = self.tok
        if self.at("?"):
            self.advance()
            return Test(self.guard())
        if self.at("("):
            self.advance()
            inner = self.choice()
            self.expect(")")
            return inner
        if self.at("{"):
            self.advance()
            if self.tok.kind == "ident" and self.tok.text.endswith("'"):
                return self.ode_block()
            inner = self.choice()
            self.expect("}")
            return inner
        if tok.kind == "ident":
            self.advance()
            self.expect(":=")
            return Assign(tok.text, normalize(self.term()))
        self.error("expected a program")

    def ode_block(self) -> HybridProgram:
        states, rhs = [], []
        while True:
            tok = self.tok
            if tok.kind != "ident" or not tok.text.endswith("'"):
                self.error("expected a differential symbol like x'")
            self.advance()
            self.expect("=")
            states.append(tok.text[:-1])
            rhs.append(self.term())
            if not self.at(","):
                break
            self.advance()
        guard = None
        if self.at("&"):
            self.advance()
            guard = self.guard()
        self.expect("}")
        return Evolve(ODESystem(tuple(states), tuple(rhs), None, self.registry), guard)


def parse_program(text: str, registry: Registry | None = None) -> HybridProgram:
    p = ProgramParser(text, registry)
    prog = p.choice()
    p.finish()
    return prog


def program_text(a: HybridProgram) -> str:
    if isinstance(a, Assign):
        return f"{a.var} := {to_text(a.value)}"
    if isinstance(a, Test):
        return f"?{to_text(a.guard)} != 0"
    if isinstance(a, Evolve):
        eqs = ", ".join(f"{x}' = {to_text(f)}" for x, f in zip(a.ode.states, a.ode.rhs))
        dom = "" if a.guard is None else f" & {to_text(a.guard)} != 0"
        return "{" + eqs + dom + "}"
    if isinstance(a, Choice):
        return f"({program_text(a.left)} ++ {program_text(a.right)})"
    if isinstance(a, Seq):
        return f"{program_text(a.first)}; {program_text(a.second)}"
    return "{" + program_text(a.body) + "}*"


class HPReduceError(ValueError):
    pass


class NonPolynomialLoop(HPReduceError):
    def __init__(self, term):
        super().__init__(f"loop reduction needs polynomial terms, got {term}")
        self.term = term


@dataclass(frozen=True)
class HPTrace:
    """Record of one reduction step.

    ``rank`` is set for ODE steps; ``iterations`` (the traces of
    ``ẽ_{i+1} = reduce(body, ẽ_i)``) and ``cofactors`` of identity
    ``ẽ_k = Σ g_i ẽ_i`` are set for loops.
    """

    kind: str
    post: Term
    result: Term
    children: tuple = ()
    rank: RankCertificate | None = None
    cofactors: tuple = ()


def _sum_squares(terms: Sequence[Term]) -> Term:
    total: Term = ZERO
    for t in terms:
        total = total + t * t
    return normalize(total)


def hp_reduce_traced(a: HybridProgram, e, max_rank: int | None = None,
                     max_loop: int = 16, cache: CertificateCache | None = None) -> HPTrace:
    e = normalize(as_term(e))
    if isinstance(a, Assign):
        return HPTrace("assign", e, normalize(substitute(e, {a.var: a.value})))
    if isinstance(a, Test):
        return HPTrace("test", e, normalize(a.guard * e))
    if isinstance(a, Evolve):
        cert = rank_certificate(e, a.ode, max_rank, cache)
        s = _sum_squares(cert.radical)
        result = s if a.guard is None else normalize(a.guard * s)
        return HPTrace("ode", e, result, rank=cert)
    if isinstance(a, Choice):
        l = hp_reduce_traced(a.left, e, max_rank, max_loop, cache)
        r = hp_reduce_traced(a.right, e, max_rank, max_loop, cache)
        return HPTrace("choice", e, _sum_squares([l.result, r.result]), (l, r))
    if isinstance(a, Seq):
        second = hp_reduce_traced(a.second, e, max_rank, max_loop, cache)
        first = hp_reduce_traced(a.first, second.result, max_rank, max_loop, cache)
        return HPTrace("seq", e, first.result, (first, second))
    if isinstance(a, Loop):
        seq = [e]
        steps = []
        for _ in range(max_loop):
            if not is_polynomial(seq[-1]):
                raise NonPolynomialLoop(seq[-1])
            step = hp_reduce_traced(a.body, seq[-1], max_rank, max_loop, cache)
            nxt = step.result
            if not is_polynomial(nxt):
                raise NonPolynomialLoop(nxt)
            vs = sorted(set().union(*(free_vars(t) for t in seq + [nxt])))
            ring = Ring([Var(v) for v in vs])
            cof = ideal_membership(ring.from_term(nxt), [ring.from_term(t) for t in seq])
            steps.append(step)
            if cof is not None:
                return HPTrace("loop", e, _sum_squares(seq), tuple(steps),
                               cofactors=tuple(c.to_term() for c in cof))
            seq.append(nxt)
        raise HPReduceError(f"loop ideal chain did not stabilize within {max_loop} iterations")
    raise TypeError(f"not a hybrid program: {a!r}")


def hp_reduce(a: HybridProgram, e, max_rank: int | None = None, max_loop: int = 16,
              cache: CertificateCache | None = None) -> Term:
    """``ẽ`` with ``[a](e = 0) ↔ ẽ = 0``."""
    return hp_reduce_traced(a, e, max_rank, max_loop, cache).result


def hp_replay(a: HybridProgram, e, trace: HPTrace) -> Term:
    """Re-derive the reduction from ``trace`` using only expansion and Lie derivatives."""
    e = normalize(as_term(e))
    if trace.post != e:
        raise HPReduceError(f"trace postcondition {trace.post} does not match {e}")

    def done(result):
        if normalize(result) != trace.result:
            raise HPReduceError(f"{trace.kind} step result mismatch")
        return trace.result

    if isinstance(a, Assign) and trace.kind == "assign":
        return done(substitute(e, {a.var: a.value}))
    if isinstance(a, Test) and trace.kind == "test":
        return done(a.guard * e)
    if isinstance(a, Evolve) and trace.kind == "ode":
        cert = trace.rank
        if cert is None or cert.term != e or not cert.verify():
            raise HPReduceError("ODE step rank certificate invalid")
        for i in range(cert.rank):
            if higher_lie(cert.lies[i], a.ode, 1) != cert.lies[i + 1]:
                raise HPReduceError(f"Lie derivative {i + 1} does not match the ODE")
        s = _sum_squares(cert.radical)
        return done(s if a.guard is None else a.guard * s)
    if isinstance(a, Choice) and trace.kind == "choice" and len(trace.children) == 2:
        l = hp_replay(a.left, e, trace.children[0])
        r = hp_replay(a.right, e, trace.children[1])
        return done(_sum_squares([l, r]))
    if isinstance(a, Seq) and trace.kind == "seq" and len(trace.children) == 2:
        mid = hp_replay(a.second, e, trace.children[1])
        return done(hp_replay(a.first, mid, trace.children[0]))
    if isinstance(a, Loop) and trace.kind == "loop":
        seq = [e]
        for step in trace.children:
            seq.append(hp_replay(a.body, seq[-1], step))
        k = len(seq) - 1
        if k < 1 or len(trace.cofactors) != k:
            raise HPReduceError("loop stabilization witness has the wrong length")
        residual = seq[k]
        for g, t in zip(trace.cofactors, seq[:k]):
            residual = residual - g * t
        if expand(residual):
            raise HPReduceError("loop stabilization identity fails")
        return done(_sum_squares(seq[:k]))
    raise HPReduceError(f"trace kind {trace.kind!r} does not match program {program_text(a)}")
