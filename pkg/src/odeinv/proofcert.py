"""Proof certificates: emission, a versioned text format, and a search-free checker.

A certificate records which derived rule was applied with which algebraic
witnesses.  The checker re-derives every side condition from the recorded
witnesses using ring expansion, Lie derivatives and interval evaluation only;
it never computes a Gröbner basis and never samples.

Text format (one field per line, blocks nest)::

    odeinv-certificate v1
    claim = invariant
    candidate = <formula>
    ode.state[0] = u
    ode.rhs[0] = <term>
    ode.domain = <formula>
    begin <Kind>
      <key> = <value>
      begin <Kind>
        ...
      end
    end

Witness values sit after ``=`` so a mutation of a coefficient never touches
the structure.  See ``docs/certificate-format.md`` for the full grammar.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .arith.decide import certify_refutation
from .arith.interval import interval_sign
from .arith.prove import (PsatzWitness, SturmWitness, TrivialWitness, check_infeasibility)
from .arith.smtlib import export_smtlib, fingerprint
from .conditions import (analytic_term, cut_init_vc, dbx_vc, domain_of, dri_vc, sai_vcs,
                         trivially_valid, vdbx_vcs)
from .expr import (Const, ParseError, Term, Var, evaluate, free_vars, neg, normalize, parse_term,
                   to_text)
from .formula import (TRUE, And, Atom, Formula, Not, conj, exact_sign, formula_atoms, formula_text,
                      formula_vars, parse_formula, to_dnf)
from .lie import CertificateCache, ODESystem, RankCertificate, lie_derivative
from .transform import HPReduceError, HPTrace, hp_replay, parse_program, program_text

__all__ = [
    "FORMAT_VERSION", "HEADER", "CertificateFormatError", "CheckResult",
    "ProofCertificate", "RankWitness", "ArithLeaf", "DbxEq", "DbxGeq", "Vdbx", "DRI", "SAI",
    "DC", "HPReduce", "serialize", "deserialize", "check_certificate", "rank_witnesses",
    "leaf_from_decision", "dbx_ghosts", "atom_trace", "TERM_KEYS",
]

FORMAT_VERSION = 1
HEADER = f"odeinv-certificate v{FORMAT_VERSION}"
CHECK_DNF_CAP = 1 << 20

# keys whose values are terms, formulas or rationals (the fuzzable witness data)
TERM_KEYS = ("e", "g", "es", "G", "term", "lies", "cofactors", "multiplier", "square", "point",
             "value", "post", "result", "ghost", "vc", "P", "cut")


class CertificateFormatError(ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(where + message)
        self.line, self.column = line, column


class CheckFailure(Exception):
    def __init__(self, path: str, reason: str):
        super().__init__(f"{path}: {reason}")
        self.path, self.reason = path, reason


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    path: str = ""
    reason: str = ""
    second_class: tuple = ()

    def __str__(self):
        if self.ok:
            extra = "" if not self.second_class else \
                " (second-class evidence at " + ", ".join(self.second_class) + ")"
            return "ok" + extra
        return f"failure at {self.path}: {self.reason}"


# ---------------------------------------------------------------------------
# nodes

@dataclass(frozen=True)
class RankWitness:
    """Rank certificate of ``term`` along the node's vector field (``forward``) or its reverse."""

    term: Term
    field: str
    lies: tuple
    cofactors: tuple


@dataclass(frozen=True)
class ArithLeaf:
    """A verification condition plus the evidence that decides it.

    ``evidence`` is ``identity``, ``psatz`` (one case witness per disjunct of
    the negation's DNF), ``refutation`` (a rational point) or ``smt``.
    """

    rule: str
    vc: Formula
    evidence: str
    cases: tuple = ()
    point: tuple = ()
    precision: int = 64
    solver: str = ""
    answer: str = ""
    lemmas: bool = False
    digest: str = ""
    values: tuple = ()  # refutations: (atom index, "value" | "sign", number)

    @property
    def refutes(self) -> bool:
        return self.evidence == "refutation"


@dataclass(frozen=True)
class DbxEq:
    e: Term
    g: Term
    leaf: ArithLeaf
    ghosts: tuple = ()


@dataclass(frozen=True)
class DbxGeq:
    e: Term
    g: Term
    strict: bool
    leaf: ArithLeaf
    ghosts: tuple = ()


@dataclass(frozen=True)
class Vdbx:
    es: tuple
    G: tuple
    leaves: tuple


@dataclass(frozen=True)
class DRI:
    e: Term
    ranks: tuple
    leaf: ArithLeaf


@dataclass(frozen=True)
class SAI:
    P: Formula
    ranks: tuple
    forward: ArithLeaf | None
    backward: ArithLeaf | None
    clock: str = ""


@dataclass(frozen=True)
class DC:
    cut: Formula
    init: ArithLeaf
    cut_proof: object
    main: object


@dataclass(frozen=True)
class HPReduce:
    program: str
    post: Term
    result: Term
    trace: HPTrace


@dataclass(frozen=True)
class ProofCertificate:
    """``claim`` is ``invariant``, ``not-invariant`` or ``reduction``."""

    claim: str
    candidate: Formula | None
    ode: ODESystem | None
    root: object = None


# ---------------------------------------------------------------------------
# helpers shared with the producer

def dbx_ghosts(e: Term, g: Term, ode: ODESystem) -> tuple:
    """Ghost right-hand sides ``y' = −g·y`` and ``z' = (g/2)·z`` used by the Darboux derivation."""
    taken = set(ode.states) | free_vars(e) | free_vars(g)
    names = []
    for base in ("y", "z"):
        n = base
        while n in taken:
            n += "_"
        taken.add(n)
        names.append(n)
    y, z = Var(names[0]), Var(names[1])
    return (normalize(neg(g) * y), normalize(g * z * Const(Fraction(1, 2))))


def rank_witnesses(cache: CertificateCache, ode: ODESystem) -> tuple:
    """Rank certificates recorded in ``cache`` for ``ode`` and its reverse, canonically ordered."""
    fwd, bwd = ode.key(), ode.reversed().key()
    out = []
    for term, key, cert in cache.entries():
        if key == fwd:
            tag = "forward"
        elif key == bwd:
            tag = "backward"
        else:
            continue
        out.append(RankWitness(cert.term, tag, cert.lies, cert.cofactors))
    out.sort(key=lambda r: (r.field, to_text(r.term)))
    dedup = []
    for r in out:
        if not dedup or (dedup[-1].field, dedup[-1].term) != (r.field, r.term):
            dedup.append(r)
    return tuple(dedup)


def atom_trace(f: Formula, point: dict, precision: int = 64) -> tuple:
    """Exact values of polynomial atoms (signs for transcendental ones) at ``point``."""
    out = []
    for i, a in enumerate(formula_atoms(f)):
        v = exact_sign(a.lhs, point)
        if v is not None:
            out.append((i, "value", Fraction(evaluate(a.lhs, point))))
        else:
            s = interval_sign(a.lhs, point, precision)
            out.append((i, "sign", 2 if s is None else s))
    return tuple(out)


def leaf_from_decision(vc, decision=None, solver: str = "", answer: str = "",
                       lemmas: bool = False) -> ArithLeaf | None:
    """Turn a decided VC into a leaf; ``None`` if the VC is open."""
    decision = decision if decision is not None else vc.decision
    f = vc.formula
    if solver and answer == "unsat":
        return ArithLeaf(vc.rule, f, "smt", solver=solver, answer=answer, lemmas=lemmas,
                         digest=fingerprint(export_smtlib([f], lemmas=lemmas)))
    if decision is None:
        return None
    if decision.status == "proved":
        if trivially_valid(f):
            return ArithLeaf(vc.rule, f, "identity")
        return ArithLeaf(vc.rule, f, "psatz", cases=tuple(decision.witnesses))
    if decision.status == "refuted":
        pts = tuple(sorted((k, Fraction(v)) for k, v in decision.point.items()))
        return ArithLeaf(vc.rule, f, "refutation", point=pts, values=atom_trace(f, dict(pts)))
    return None


# ---------------------------------------------------------------------------
# serialization

class _Writer:
    def __init__(self):
        self.lines: list = []
        self.depth = 0

    def put(self, key: str, value) -> None:
        self.lines.append("  " * self.depth + f"{key} = {value}")

    def begin(self, kind: str) -> None:
        self.lines.append("  " * self.depth + f"begin {kind}")
        self.depth += 1

    def end(self) -> None:
        self.depth -= 1
        self.lines.append("  " * self.depth + "end")


def _w_rank(w: _Writer, r: RankWitness) -> None:
    w.begin("Rank")
    w.put("term", to_text(r.term))
    w.put("field", r.field)
    for i, L in enumerate(r.lies):
        w.put(f"lies[{i}]", to_text(L))
    for i, g in enumerate(r.cofactors):
        w.put(f"cofactors[{i}]", to_text(g))
    w.end()


def _w_case(w: _Writer, c) -> None:
    w.begin("Case")
    if isinstance(c, TrivialWitness):
        w.put("kind", "trivial")
        w.put("index", c.index)
    elif isinstance(c, SturmWitness):
        w.put("kind", "sturm")
        w.put("variable", c.variable)
    else:
        w.put("kind", "psatz")
        for j, m in c.multipliers:
            w.put(f"multiplier[{j}]", to_text(m))
        w.put("square", to_text(c.square_part))
    w.end()


def _w_leaf(w: _Writer, leaf: ArithLeaf, role: str = "") -> None:
    w.begin("ArithLeaf")
    if role:
        w.put("role", role)
    w.put("rule", leaf.rule)
    w.put("vc", formula_text(leaf.vc))
    w.put("evidence", leaf.evidence)
    if leaf.evidence == "refutation":
        w.put("precision", leaf.precision)
        for k, v in leaf.point:
            w.put(f"point[{k}]", v)
        for i, kind, v in leaf.values:
            w.put(f"{kind}[{i}]", v)
    elif leaf.evidence == "smt":
        w.put("solver", leaf.solver)
        w.put("answer", leaf.answer)
        w.put("lemmas", "true" if leaf.lemmas else "false")
        w.put("fingerprint", leaf.digest)
    for c in leaf.cases:
        _w_case(w, c)
    w.end()


def _w_trace(w: _Writer, t: HPTrace) -> None:
    w.begin("HPStep")
    w.put("kind", t.kind)
    w.put("post", to_text(t.post))
    w.put("result", to_text(t.result))
    for i, g in enumerate(t.cofactors):
        w.put(f"cofactors[{i}]", to_text(g))
    if t.rank is not None:
        _w_rank(w, RankWitness(t.rank.term, "forward", t.rank.lies, t.rank.cofactors))
    for c in t.children:
        _w_trace(w, c)
    w.end()


def _w_node(w: _Writer, n, role: str = "") -> None:
    kind = type(n).__name__
    w.begin(kind)
    if role:
        w.put("role", role)
    if isinstance(n, DbxEq):
        w.put("e", to_text(n.e))
        w.put("g", to_text(n.g))
        for i, gh in enumerate(n.ghosts):
            w.put(f"ghost[{i}]", to_text(gh))
        _w_leaf(w, n.leaf)
    elif isinstance(n, DbxGeq):
        w.put("e", to_text(n.e))
        w.put("g", to_text(n.g))
        w.put("strict", "true" if n.strict else "false")
        for i, gh in enumerate(n.ghosts):
            w.put(f"ghost[{i}]", to_text(gh))
        _w_leaf(w, n.leaf)
    elif isinstance(n, Vdbx):
        for i, e in enumerate(n.es):
            w.put(f"es[{i}]", to_text(e))
        for i, row in enumerate(n.G):
            for j, g in enumerate(row):
                w.put(f"G[{i},{j}]", to_text(g))
        for leaf in n.leaves:
            _w_leaf(w, leaf)
    elif isinstance(n, DRI):
        w.put("e", to_text(n.e))
        for r in n.ranks:
            _w_rank(w, r)
        _w_leaf(w, n.leaf)
    elif isinstance(n, SAI):
        w.put("P", formula_text(n.P))
        w.put("clock", n.clock or "none")
        for r in n.ranks:
            _w_rank(w, r)
        if n.forward is not None:
            _w_leaf(w, n.forward, "forward")
        if n.backward is not None:
            _w_leaf(w, n.backward, "backward")
    elif isinstance(n, DC):
        w.put("cut", formula_text(n.cut))
        _w_leaf(w, n.init, "init")
        _w_node(w, n.cut_proof, "cut")
        _w_node(w, n.main, "main")
    elif isinstance(n, HPReduce):
        w.put("program", n.program)
        w.put("post", to_text(n.post))
        w.put("result", to_text(n.result))
        _w_trace(w, n.trace)
    else:
        raise TypeError(f"unknown certificate node {n!r}")
    w.end()


def serialize(cert: ProofCertificate) -> str:
    """Canonical text; identical certificates give identical bytes."""
    w = _Writer()
    w.lines.append(HEADER)
    w.put("claim", cert.claim)
    if cert.candidate is not None:
        w.put("candidate", formula_text(cert.candidate))
    if cert.ode is not None:
        for i, (x, f) in enumerate(zip(cert.ode.states, cert.ode.rhs)):
            w.put(f"ode.state[{i}]", x)
            w.put(f"ode.rhs[{i}]", to_text(f))
        w.put("ode.domain", formula_text(domain_of(cert.ode)))
    if cert.root is not None:
        _w_node(w, cert.root)
    return "\n".join(w.lines) + "\n"


# -- parsing

@dataclass
class _Block:
    kind: str
    line: int
    fields: list = field(default_factory=list)  # (key, value, line, column)
    children: list = field(default_factory=list)

    def get(self, key, default=None):
        for k, v, ln, col in self.fields:
            if k == key:
                return v, ln, col
        if default is not None:
            return default
        raise CertificateFormatError(f"{self.kind} block is missing field {key!r}", self.line, 1)

    def indexed(self, name) -> list:
        """Fields ``name[i]`` in index order; indices must be 0..n-1."""
        out = []
        for k, v, ln, col in self.fields:
            if k.startswith(name + "[") and k.endswith("]"):
                out.append((k[len(name) + 1:-1], v, ln, col))
        return out

    def kids(self, kind) -> list:
        return [c for c in self.children if c.kind == kind]

    def role(self) -> str:
        for k, v, _, _ in self.fields:
            if k == "role":
                return v
        return ""


def _blocks(text: str) -> tuple:
    lines = text.split("\n")
    if not lines or lines[0].strip() != HEADER:
        first = lines[0].strip() if lines else ""
        if first.startswith("odeinv-certificate v"):
            raise CertificateFormatError(f"unsupported certificate version {first.split()[-1]!r}", 1, 1)
        raise CertificateFormatError(f"expected header {HEADER!r}", 1, 1)
    top = _Block("top", 1)
    stack = [top]
    for n, raw in enumerate(lines[1:], start=2):
        s = raw.strip()
        col = len(raw) - len(raw.lstrip()) + 1
        if not s or s.startswith("#"):
            continue
        if s.startswith("begin "):
            kind = s[6:].strip()
            if not kind.isidentifier():
                raise CertificateFormatError(f"bad block kind {kind!r}", n, col + 6)
            b = _Block(kind, n)
            stack[-1].children.append(b)
            stack.append(b)
        elif s == "end":
            if len(stack) == 1:
                raise CertificateFormatError("unmatched 'end'", n, col)
            stack.pop()
        else:
            if " = " not in s:
                raise CertificateFormatError("expected 'key = value'", n, col)
            k, v = s.split(" = ", 1)
            stack[-1].fields.append((k.strip(), v.strip(), n, col + len(k) + 3))
    if len(stack) != 1:
        raise CertificateFormatError(f"unterminated block {stack[-1].kind!r}", stack[-1].line, 1)
    return top


def _term(v, ln, col) -> Term:
    try:
        return normalize(parse_term(v))
    except ParseError as exc:
        raise CertificateFormatError(f"bad term: {exc}", ln, col) from None


def _formula(v, ln, col) -> Formula:
    try:
        return parse_formula(v)
    except ParseError as exc:
        raise CertificateFormatError(f"bad formula: {exc}", ln, col) from None


def _int(v, ln, col) -> int:
    try:
        return int(v)
    except ValueError:
        raise CertificateFormatError(f"expected an integer, got {v!r}", ln, col) from None


def _seq(b: _Block, name: str, conv) -> tuple:
    items = b.indexed(name)
    out = []
    for i, (idx, v, ln, col) in enumerate(items):
        if idx != str(i):
            raise CertificateFormatError(f"expected {name}[{i}]", ln, col)
        out.append(conv(v, ln, col))
    return tuple(out)


def _r_rank(b: _Block) -> RankWitness:
    fld, ln, col = b.get("field")
    if fld not in ("forward", "backward"):
        raise CertificateFormatError("field must be forward or backward", ln, col)
    return RankWitness(_term(*b.get("term")), fld, _seq(b, "lies", _term), _seq(b, "cofactors", _term))


def _r_case(b: _Block):
    kind, ln, col = b.get("kind")
    if kind == "trivial":
        return TrivialWitness(_int(*b.get("index")))
    if kind == "sturm":
        return SturmWitness(b.get("variable")[0])
    if kind == "psatz":
        mults = []
        for idx, v, l2, c2 in b.indexed("multiplier"):
            mults.append((_int(idx, l2, c2), _term(v, l2, c2)))
        return PsatzWitness(tuple(mults), _term(*b.get("square")))
    raise CertificateFormatError(f"unknown case kind {kind!r}", ln, col)


def _r_leaf(b: _Block) -> ArithLeaf:
    if b.kind != "ArithLeaf":
        raise CertificateFormatError(f"expected ArithLeaf, found {b.kind}", b.line, 1)
    ev, ln, col = b.get("evidence")
    kw = dict(rule=b.get("rule")[0], vc=_formula(*b.get("vc")), evidence=ev,
              cases=tuple(_r_case(c) for c in b.kids("Case")))
    if ev == "refutation":
        kw["precision"] = _int(*b.get("precision"))
        pts = []
        for k, v, l2, c2 in b.indexed("point"):
            try:
                pts.append((k, Fraction(v)))
            except ValueError:
                raise CertificateFormatError(f"bad rational {v!r}", l2, c2) from None
        kw["point"] = tuple(pts)
        vals = []
        for kind in ("value", "sign"):
            for idx, v, l2, c2 in b.indexed(kind):
                try:
                    vals.append((_int(idx, l2, c2), kind, Fraction(v) if kind == "value" else int(v)))
                except ValueError:
                    raise CertificateFormatError(f"bad {kind} {v!r}", l2, c2) from None
        kw["values"] = tuple(sorted(vals))
    elif ev == "smt":
        kw.update(solver=b.get("solver")[0], answer=b.get("answer")[0],
                  lemmas=b.get("lemmas")[0] == "true", digest=b.get("fingerprint")[0])
    elif ev not in ("identity", "psatz"):
        raise CertificateFormatError(f"unknown evidence kind {ev!r}", ln, col)
    return ArithLeaf(**kw)


def _r_trace(b: _Block) -> HPTrace:
    if b.kind != "HPStep":
        raise CertificateFormatError(f"expected HPStep, found {b.kind}", b.line, 1)
    rank = None
    ranks = b.kids("Rank")
    if ranks:
        r = _r_rank(ranks[0])
        try:
            rank = RankCertificate(r.term, len(r.cofactors), r.lies, r.cofactors)
        except (ValueError, AssertionError) as exc:
            rank = _BrokenRank(str(exc))
    return HPTrace(b.get("kind")[0], _term(*b.get("post")), _term(*b.get("result")),
                   tuple(_r_trace(c) for c in b.kids("HPStep")), rank,
                   _seq(b, "cofactors", _term))


class _BrokenRank:
    """Placeholder for a rank certificate whose identity failed while loading."""

    def __init__(self, reason):
        self.reason = reason
        self.term = None

    def verify(self):
        return False


def _leaf_by_role(b: _Block, role: str):
    for c in b.kids("ArithLeaf"):
        if c.role() == role:
            return _r_leaf(c)
    return None


def _r_node(b: _Block):
    k = b.kind
    if k in ("DbxEq", "DbxGeq"):
        leaves = b.kids("ArithLeaf")
        if len(leaves) != 1:
            raise CertificateFormatError(f"{k} needs exactly one ArithLeaf", b.line, 1)
        e, g = _term(*b.get("e")), _term(*b.get("g"))
        ghosts = _seq(b, "ghost", _term)
        if k == "DbxEq":
            return DbxEq(e, g, _r_leaf(leaves[0]), ghosts)
        strict = b.get("strict")[0] == "true"
        return DbxGeq(e, g, strict, _r_leaf(leaves[0]), ghosts)
    if k == "Vdbx":
        es = _seq(b, "es", _term)
        n = len(es)
        cells = {}
        for idx, v, ln, col in b.indexed("G"):
            try:
                i, j = (int(s) for s in idx.split(","))
            except ValueError:
                raise CertificateFormatError(f"bad matrix index {idx!r}", ln, col) from None
            cells[(i, j)] = _term(v, ln, col)
        if set(cells) != {(i, j) for i in range(n) for j in range(n)}:
            raise CertificateFormatError("G must be a complete square matrix", b.line, 1)
        G = tuple(tuple(cells[(i, j)] for j in range(n)) for i in range(n))
        return Vdbx(es, G, tuple(_r_leaf(c) for c in b.kids("ArithLeaf")))
    if k == "DRI":
        leaves = b.kids("ArithLeaf")
        if len(leaves) != 1:
            raise CertificateFormatError("DRI needs exactly one ArithLeaf", b.line, 1)
        return DRI(_term(*b.get("e")), tuple(_r_rank(r) for r in b.kids("Rank")), _r_leaf(leaves[0]))
    if k == "SAI":
        clock = b.get("clock")[0]
        return SAI(_formula(*b.get("P")), tuple(_r_rank(r) for r in b.kids("Rank")),
                   _leaf_by_role(b, "forward"), _leaf_by_role(b, "backward"),
                   "" if clock == "none" else clock)
    if k == "DC":
        init = _leaf_by_role(b, "init")
        subs = {c.role(): c for c in b.children if c.kind != "ArithLeaf"}
        if init is None or set(subs) != {"cut", "main"}:
            raise CertificateFormatError("DC needs an init leaf and cut/main sub-certificates", b.line, 1)
        return DC(_formula(*b.get("cut")), init, _r_node(subs["cut"]), _r_node(subs["main"]))
    if k == "HPReduce":
        steps = b.kids("HPStep")
        if len(steps) != 1:
            raise CertificateFormatError("HPReduce needs exactly one HPStep", b.line, 1)
        return HPReduce(b.get("program")[0], _term(*b.get("post")), _term(*b.get("result")),
                        _r_trace(steps[0]))
    raise CertificateFormatError(f"unknown node kind {k!r}", b.line, 1)


def deserialize(text) -> ProofCertificate:
    """Parse certificate text; raises :class:`CertificateFormatError` with a position."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError:
            raise CertificateFormatError("certificate is not UTF-8 text", 1, 1) from None
    top = _blocks(text)
    claim, ln, col = top.get("claim")
    if claim not in ("invariant", "not-invariant", "reduction"):
        raise CertificateFormatError(f"unknown claim {claim!r}", ln, col)
    cand = top.get("candidate", (None, 0, 0))
    candidate = _formula(*cand) if cand[0] is not None else None
    states = _seq(top, "ode.state", lambda v, l, c: v)
    ode = None
    if states:
        rhs = _seq(top, "ode.rhs", _term)
        if len(rhs) != len(states):
            raise CertificateFormatError("ode.state and ode.rhs lengths differ", top.line, 1)
        dom = _formula(*top.get("ode.domain"))
        ode = ODESystem(tuple(states), tuple(rhs), dom)
    if len(top.children) > 1:
        raise CertificateFormatError("more than one root node", top.children[1].line, 1)
    root = _r_node(top.children[0]) if top.children else None
    return ProofCertificate(claim, candidate, ode, root)


# ---------------------------------------------------------------------------
# checking

class _ReplayCache(CertificateCache):
    """Cache of replayed rank witnesses; a miss is a certificate failure, never a search."""

    def get(self, e, ode):
        hit = self._data.get((e, ode.key()))
        if hit is not None:
            return hit
        other = self._data.get((neg(e), ode.key()))
        if other is not None:
            return other.negated()
        raise _MissingRank(e)


class _MissingRank(Exception):
    def __init__(self, term):
        super().__init__(f"no rank witness recorded for {to_text(term)}")


def _replay_ranks(ranks: Sequence[RankWitness], ode: ODESystem, path: str) -> _ReplayCache:
    cache = _ReplayCache()
    rev = ode.reversed()
    for i, r in enumerate(ranks):
        p = f"{path}/Rank[{i}]"
        field_ode = ode if r.field == "forward" else rev
        lies = r.lies
        if not lies or lies[0] != r.term:
            raise CheckFailure(p, "lies[0] differs from the term")
        for k in range(len(lies) - 1):
            if lie_derivative(lies[k], field_ode) != lies[k + 1]:
                raise CheckFailure(p, f"lies[{k + 1}] is not the Lie derivative of lies[{k}]")
        try:
            cert = RankCertificate(r.term, len(r.cofactors), lies, r.cofactors)
        except (ValueError, AssertionError):
            raise CheckFailure(p, "differential radical identity L_N = Σ g_i L_i fails") from None
        cache.put(cert, field_ode)
    return cache


def _same(a: Formula, b: Formula) -> bool:
    return a == b or formula_text(a) == formula_text(b)


def _check_leaf(leaf: ArithLeaf, vc, path: str, want: str, notes: list) -> None:
    """``want`` is ``proof`` or ``refutation``."""
    if leaf is None:
        raise CheckFailure(path, "missing arithmetic leaf")
    if leaf.rule != vc.rule:
        raise CheckFailure(path, f"rule tag {leaf.rule!r} should be {vc.rule!r}")
    if not _same(leaf.vc, vc.formula):
        raise CheckFailure(path, "recorded verification condition differs from the regenerated one")
    f = vc.formula
    if want == "refutation":
        if leaf.evidence != "refutation":
            raise CheckFailure(path, "a refutation needs a counterexample point")
        pt = dict(leaf.point)
        if set(pt) != formula_vars(f):
            raise CheckFailure(path, "point must assign exactly the condition's variables")
        if tuple(leaf.values) != atom_trace(f, pt, leaf.precision):
            raise CheckFailure(path, "recorded atom values at the point do not match")
        if leaf.precision < 8:
            raise CheckFailure(path, "precision below 8 bits")
        if not certify_refutation(f, pt, leaf.precision):
            raise CheckFailure(path, "point does not certifiably falsify the condition")
        if not certify_refutation(f, pt, 2 * leaf.precision):
            raise CheckFailure(path, "re-certification at doubled precision disagrees")
        return
    if leaf.evidence == "identity":
        if not trivially_valid(f):
            raise CheckFailure(path, "condition is not valid by expansion alone")
        return
    if leaf.evidence == "psatz":
        dnf = to_dnf(Not(f), CHECK_DNF_CAP)
        if len(dnf.disjuncts) != len(leaf.cases):
            raise CheckFailure(path, f"{len(leaf.cases)} case witnesses for {len(dnf.disjuncts)} cases")
        for i, (d, w) in enumerate(zip(dnf.disjuncts, leaf.cases)):
            if not check_infeasibility(d, w):
                raise CheckFailure(f"{path}/Case[{i}]", "infeasibility witness does not verify")
        return
    if leaf.evidence == "smt":
        if leaf.answer != "unsat":
            raise CheckFailure(path, f"solver answer {leaf.answer!r} does not prove the condition")
        if fingerprint(export_smtlib([f], lemmas=leaf.lemmas)) != leaf.digest:
            raise CheckFailure(path, "SMT fingerprint does not match the regenerated export")
        notes.append(path)
        return
    raise CheckFailure(path, f"evidence {leaf.evidence!r} cannot prove a condition")


def _equation_target(candidate: Formula, e: Term) -> bool:
    t = analytic_term(candidate)
    return t is not None and (t == e or t == neg(e))


def _check_node(n, ode: ODESystem, target: Formula, claim: str, path: str, notes: list) -> None:
    kind = type(n).__name__
    path = f"{path}/{kind}"
    if claim == "not-invariant" and not isinstance(n, (DRI, SAI)):
        raise CheckFailure(path, "only the equivalence rules DRI/DRIQ/SAI can disprove invariance")
    if isinstance(n, (DbxEq, DbxGeq)):
        ineq = isinstance(n, DbxGeq)
        if ineq:
            rel = ">" if n.strict else ">="
            if not (isinstance(target, Atom) and target.rel == rel and target.lhs == n.e):
                raise CheckFailure(path, f"node proves {to_text(n.e)} {rel} 0, not the claimed formula")
        elif not _equation_target(target, n.e):
            raise CheckFailure(path, f"node proves {to_text(n.e)} = 0, not the claimed formula")
        if tuple(n.ghosts) != dbx_ghosts(n.e, n.g, ode):
            raise CheckFailure(path, "ghost metadata does not match the cofactor")
        _check_leaf(n.leaf, dbx_vc(n.e, n.g, ode, inequality=ineq), path + "/ArithLeaf", "proof", notes)
        return
    if isinstance(n, Vdbx):
        parts = target.args if isinstance(target, And) else (target,)
        if len(parts) != len(n.es) or not all(_equation_target(p, e) for p, e in zip(parts, n.es)):
            raise CheckFailure(path, "components do not match the claimed conjunction of equations")
        try:
            vcs = vdbx_vcs(n.es, n.G, ode)
        except ValueError as exc:
            raise CheckFailure(path, str(exc)) from None
        if len(n.leaves) != len(vcs):
            raise CheckFailure(path, "one leaf per component is required")
        for i, (leaf, vc) in enumerate(zip(n.leaves, vcs)):
            _check_leaf(leaf, vc, f"{path}/ArithLeaf[{i}]", "proof", notes)
        return
    if isinstance(n, DRI):
        if not _equation_target(target, n.e):
            raise CheckFailure(path, f"node is about {to_text(n.e)} = 0, not the claimed formula")
        cache = _replay_ranks(n.ranks, ode, path)
        try:
            vc = dri_vc(n.e, ode, cache, max_rank=1 << 30)
        except _MissingRank as exc:
            raise CheckFailure(path, str(exc)) from None
        want = "refutation" if claim == "not-invariant" else "proof"
        _check_leaf(n.leaf, vc, path + "/ArithLeaf", want, notes)
        return
    if isinstance(n, SAI):
        if not _same(n.P, target):
            raise CheckFailure(path, "node is about a different formula than the claim")
        field_ode = ode
        if n.clock:
            if n.clock in ode.states or n.clock in formula_vars(target):
                raise CheckFailure(path, f"clock name {n.clock!r} is not fresh")
            field_ode = ode.with_clock(n.clock)
        cache = _replay_ranks(n.ranks, field_ode, path)
        try:
            fwd, bwd = sai_vcs(n.P, field_ode, cache, max_rank=1 << 30)
        except _MissingRank as exc:
            raise CheckFailure(path, str(exc)) from None
        if claim == "not-invariant":
            leaves = [(n.forward, fwd, "forward"), (n.backward, bwd, "backward")]
            present = [(l, v, r) for l, v, r in leaves if l is not None]
            if not present:
                raise CheckFailure(path, "no refuted premise recorded")
            for l, v, r in present:
                _check_leaf(l, v, f"{path}/ArithLeaf[{r}]", "refutation", notes)
            return
        _check_leaf(n.forward, fwd, path + "/ArithLeaf[forward]", "proof", notes)
        _check_leaf(n.backward, bwd, path + "/ArithLeaf[backward]", "proof", notes)
        return
    if isinstance(n, DC):
        _check_leaf(n.init, cut_init_vc(target, n.cut, ode), path + "/ArithLeaf[init]", "proof", notes)
        _check_node(n.cut_proof, ode, n.cut, claim, path + "[cut]", notes)
        narrowed = ode.with_domain(conj([q for q in (domain_of(ode), n.cut) if q != TRUE]))
        _check_node(n.main, narrowed, target, claim, path + "[main]", notes)
        return
    raise CheckFailure(path, f"node kind {kind} is not valid here")


def _check_reduction(n, path: str) -> None:
    path = f"{path}/HPReduce"
    if not isinstance(n, HPReduce):
        raise CheckFailure(path, "a reduction claim needs an HPReduce node")
    try:
        prog = parse_program(n.program)
    except ParseError as exc:
        raise CheckFailure(path, f"program does not parse: {exc}") from None
    try:
        result = hp_replay(prog, n.post, n.trace)
    except (HPReduceError, AttributeError, TypeError) as exc:
        raise CheckFailure(path, f"replay failed: {exc}") from None
    if result != n.result:
        raise CheckFailure(path, "replayed reduction differs from the recorded result")


def check_certificate(cert) -> CheckResult:
    """Re-check every node; report the first failing node path."""
    if isinstance(cert, (str, bytes)):
        cert = deserialize(cert)
    notes: list = []
    try:
        if cert.claim == "reduction":
            _check_reduction(cert.root, "root")
        else:
            target = cert.candidate
            if target is None:
                raise CheckFailure("root", "certificate has no candidate")
            if cert.root is None:
                if cert.claim == "invariant" and target == TRUE:
                    return CheckResult(True)
                raise CheckFailure("root", "empty certificate for a nontrivial claim")
            if cert.ode is None:
                raise CheckFailure("root", "certificate has no ODE")
            _check_node(cert.root, cert.ode, target, cert.claim, "root", notes)
    except CheckFailure as exc:
        return CheckResult(False, exc.path, exc.reason)
    return CheckResult(True, second_class=tuple(notes))
