"""Invariance checking: generate rule premises, discharge them, aggregate verdicts.

The sufficient rules (``dbx``, ``dbx≥``, ``vdbx``) can only establish
invariance.  Disproofs come exclusively from the equivalence forms: the
radical invariant axiom (with or without domain) and the semianalytic
invariant axiom.  Every decisive verdict carries a certificate that
:func:`odeinv.proofcert.check_certificate` accepts.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .arith.decide import Decision, SamplerConfig, decide
from .arith.smtlib import export_smtlib, run_solver, solver_available
from .conditions import (VerificationCondition, analytic_term, cut_init_vc, dbx_residual, dbx_vc,
                         domain_of, dri_vc, guarded, sai_vcs, vdbx_vcs)
from .expr import ZERO, Term, as_term, expand, normalize, term_key, to_text
from .formula import (DEFAULT_DNF_CAP, TRUE, And, Atom, DNFCapExceeded, Formula, conj,
                      formula_vars)
from .lie import (DEFAULT_MAX_RANK, CertificateCache, ODESystem, RankExceeded, lie_derivative)
from .proofcert import (DC, DRI, SAI, DbxEq, DbxGeq, ProofCertificate, Vdbx, dbx_ghosts,
                        leaf_from_decision, rank_witnesses)
from .ring import BudgetExceeded, Ring, ideal_membership

__all__ = [
    "CheckConfig", "Invariant", "NotInvariant", "Undetermined", "SAI_CAVEAT",
    "synthesize_cofactor", "synthesize_matrix", "check_darboux_eq", "check_darboux_geq",
    "check_vdbx", "analytic_invariance", "semianalytic_invariance", "check_invariance",
    "discharge", "combined_verdict", "VerificationCondition", "premises", "METHODS",
]

SAI_CAVEAT = ("A refuted semianalytic premise shows that this candidate P is not an invariant; "
              "it does not show that the safety property fails, since another invariant "
              "implying it may still exist.")


@dataclass(frozen=True)
class CheckConfig:
    max_rank: int = DEFAULT_MAX_RANK
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    dnf_cap: int = DEFAULT_DNF_CAP
    groebner_budget: int = 10**5
    smt_solver: str = ""
    smt_lemmas: bool = False


@dataclass(frozen=True)
class Invariant:
    certificate: ProofCertificate
    vcs: tuple = ()
    method: str = ""
    status = "invariant"
    exit_code = 0


@dataclass(frozen=True)
class NotInvariant:
    vc: VerificationCondition
    point: dict
    certificate: ProofCertificate
    vcs: tuple = ()
    method: str = ""
    caveat: str = ""
    status = "not-invariant"
    exit_code = 1


@dataclass(frozen=True)
class Undetermined:
    open_vcs: tuple
    vcs: tuple = ()
    method: str = ""
    reason: str = ""
    resource_limited: bool = False
    status = "undetermined"
    exit_code = 4


# ---------------------------------------------------------------------------
# cofactor synthesis

def _ring_of(terms: Sequence[Term]) -> Ring:
    atoms = set()
    for t in terms:
        for mono in expand(t):
            for a, _ in mono:
                atoms.add(a)
    return Ring(sorted(atoms, key=term_key))


def synthesize_cofactor(e, ode: ODESystem) -> Term | None:
    """``g`` with ``lie(e) = g·e`` exactly in the chain ring, or ``None``."""
    e = normalize(as_term(e))
    lie = lie_derivative(e, ode)
    if not expand(lie):
        return ZERO
    if not expand(e):
        return None
    ring = _ring_of([e, lie])
    cof = ideal_membership(ring.from_term(lie), [ring.from_term(e)])
    return None if cof is None else cof[0].to_term()


def _domain_equations(q: Formula) -> list:
    parts = q.args if isinstance(q, And) else (q,)
    return [a.lhs for a in parts if isinstance(a, Atom) and a.rel == "="]


def synthesize_matrix(es: Sequence[Term], ode: ODESystem):
    """Cofactor matrix ``G`` with ``lie(e_i) − Σ G_ij e_j`` in the ideal of the domain equations.

    Returns ``None`` when some Lie derivative is outside the ideal.
    """
    es = [normalize(as_term(e)) for e in es]
    extra = _domain_equations(domain_of(ode))
    lies = [lie_derivative(e, ode) for e in es]
    ring = _ring_of(es + extra + lies)
    gens = [ring.from_term(t) for t in es + extra]
    G = []
    for lie in lies:
        if not expand(lie):
            G.append([ZERO] * len(es))
            continue
        cof = ideal_membership(ring.from_term(lie), gens)
        if cof is None:
            return None
        G.append([c.to_term() for c in cof[:len(es)]])
    return G


# ---------------------------------------------------------------------------
# discharging

def discharge(vc: VerificationCondition, config: CheckConfig | None = None) -> VerificationCondition:
    """Run the arithmetic backend (and the optional external solver) on ``vc``."""
    cfg = config or CheckConfig()
    if vc.decision is not None:
        return vc
    d = decide(vc.formula, cfg.sampler, cfg.dnf_cap, cfg.groebner_budget)
    if d.status == "unknown" and cfg.smt_solver and solver_available(cfg.smt_solver):
        answers = run_solver(export_smtlib([vc.formula], lemmas=cfg.smt_lemmas), cfg.smt_solver)
        answer = answers[0] if answers else "unknown"
        if answer == "unsat":
            vc.solver, vc.answer, vc.lemmas = cfg.smt_solver, answer, cfg.smt_lemmas
            d = Decision("proved", reason=f"{cfg.smt_solver}: unsat (second-class evidence)")
    vc.decision = d
    return vc


def combined_verdict(vcs: Sequence[VerificationCondition]) -> str:
    if any(v.verdict == "refuted" for v in vcs):
        return "refuted"
    if all(v.verdict == "proved" for v in vcs):
        return "proved"
    return "unknown"


def _leaf(vc):
    return leaf_from_decision(vc, solver=vc.solver, answer=vc.answer, lemmas=vc.lemmas)


def _undetermined(vcs, method, reason="", limited=None) -> Undetermined:
    open_vcs = tuple(v for v in vcs if v.verdict != "proved")
    if limited is None:
        limited = any(getattr(v.decision, "resource_limited", False) for v in vcs)
    return Undetermined(open_vcs, tuple(vcs), method, reason, limited)


# ---------------------------------------------------------------------------
# sufficient rules

def check_darboux_eq(e, g=None, ode: ODESystem | None = None,
                     config: CheckConfig | None = None) -> VerificationCondition:
    """Premise ``Q → lie(e) = g·e``; proved outright when it is a ring identity."""
    e = normalize(as_term(e))
    if g is None:
        g = synthesize_cofactor(e, ode)
        if g is None:
            lie = lie_derivative(e, ode)
            vc = VerificationCondition(guarded([domain_of(ode)], Atom(lie, "=")), "dbx",
                                       note=f"no cofactor found; lie(e) = {to_text(lie)}")
            vc.decision = Decision("unknown", reason="cofactor synthesis failed")
            return vc
    vc = dbx_vc(e, g, ode)
    vc.note = f"g = {to_text(normalize(as_term(g)))}"
    return discharge(vc, config)


def check_darboux_geq(e, g=None, ode: ODESystem | None = None, strict: bool = False,
                      config: CheckConfig | None = None) -> VerificationCondition:
    """Premise ``Q → lie(e) ≥ g·e`` for ``e ≥ 0`` (or ``e > 0`` with ``strict``)."""
    e = normalize(as_term(e))
    if g is None:
        g = synthesize_cofactor(e, ode)
        if g is None:
            lie = lie_derivative(e, ode)
            vc = VerificationCondition(guarded([domain_of(ode)], Atom(lie, ">=")), "dbx≥",
                                       note=f"no cofactor found; lie(e) = {to_text(lie)}")
            vc.decision = Decision("unknown", reason="cofactor synthesis failed")
            return vc
    vc = dbx_vc(e, g, ode, inequality=True)
    vc.note = f"g = {to_text(normalize(as_term(g)))}; postcondition {'>' if strict else '>='} 0"
    return discharge(vc, config)


def check_vdbx(es, G=None, ode: ODESystem | None = None,
               config: CheckConfig | None = None) -> list:
    """Component premises ``Q → lie(e_i) = Σ_j G_ij e_j``."""
    es = [normalize(as_term(e)) for e in es]
    if G is None:
        G = synthesize_matrix(es, ode)
        if G is None:
            vcs = []
            for i, e in enumerate(es):
                vc = VerificationCondition(guarded([domain_of(ode)], Atom(lie_derivative(e, ode), "=")),
                                           "vdbx", note=f"component {i}: no cofactor matrix found")
                vc.decision = Decision("unknown", reason="cofactor matrix synthesis failed")
                vcs.append(vc)
            return vcs
    return [discharge(vc, config) for vc in vdbx_vcs(es, G, ode)]


def _cert(claim, candidate, ode, root) -> ProofCertificate:
    return ProofCertificate(claim, candidate, ode, root)


def _prove_dbx(candidate, e, ode, cfg):
    g = synthesize_cofactor(e, ode)
    vc = check_darboux_eq(e, g, ode, cfg)
    if vc.verdict == "proved":
        node = DbxEq(e, normalize(as_term(g)), _leaf(vc), dbx_ghosts(e, normalize(as_term(g)), ode))
        return Invariant(_cert("invariant", candidate, ode, node), (vc,), "dbx")
    return _undetermined([vc], "dbx", "Darboux equality premise not proved")


def _prove_dbx_geq(candidate: Atom, ode, cfg):
    e, strict = candidate.lhs, candidate.rel == ">"
    g = synthesize_cofactor(e, ode)
    vc = check_darboux_geq(e, g, ode, strict, cfg)
    if vc.verdict == "proved":
        g = normalize(as_term(g))
        node = DbxGeq(e, g, strict, _leaf(vc), dbx_ghosts(e, g, ode))
        return Invariant(_cert("invariant", candidate, ode, node), (vc,), "dbx≥")
    return _undetermined([vc], "dbx≥", "Darboux inequality premise not proved")


def _prove_vdbx(candidate, es, ode, cfg):
    G = synthesize_matrix(es, ode)
    vcs = check_vdbx(es, G, ode, cfg)
    if G is not None and combined_verdict(vcs) == "proved":
        node = Vdbx(tuple(es), tuple(tuple(normalize(as_term(g)) for g in row) for row in G),
                    tuple(_leaf(v) for v in vcs))
        return Invariant(_cert("invariant", candidate, ode, node), tuple(vcs), "vdbx")
    return _undetermined(vcs, "vdbx", "vectorial Darboux premises not proved")


# ---------------------------------------------------------------------------
# equivalence rules

def analytic_invariance(e, ode: ODESystem, config: CheckConfig | None = None,
                        candidate: Formula | None = None):
    """Decide invariance of ``e = 0`` through the differential radical characterization."""
    cfg = config or CheckConfig()
    if isinstance(e, Formula):
        candidate = e
        e = analytic_term(e)
        if e is None:
            raise ValueError("analytic invariance needs an equational candidate")
    e = normalize(as_term(e))
    if candidate is None:
        candidate = Atom(e, "=")
    cache = CertificateCache()
    try:
        vc = dri_vc(e, ode, cache, cfg.max_rank, cfg.dnf_cap)
    except (RankExceeded, BudgetExceeded, DNFCapExceeded) as exc:
        return Undetermined((), (), "DRI", str(exc), True)
    discharge(vc, cfg)
    ranks = rank_witnesses(cache, ode)
    method = vc.rule
    if vc.verdict == "proved":
        node = DRI(e, ranks, _leaf(vc))
        return Invariant(_cert("invariant", candidate, ode, node), (vc,), method)
    if vc.verdict == "refuted":
        node = DRI(e, ranks, _leaf(vc))
        return NotInvariant(vc, dict(vc.point), _cert("not-invariant", candidate, ode, node),
                            (vc,), method)
    return _undetermined([vc], method, vc.decision.reason)


def _clock_name(ode: ODESystem, p: Formula) -> str:
    taken = set(ode.states) | set(ode.parameters) | formula_vars(p)
    name = "t"
    while name in taken:
        name += "_"
    return name


def semianalytic_invariance(p: Formula, ode: ODESystem, config: CheckConfig | None = None,
                            clock: bool = True):
    """Decide invariance of ``P`` through the semianalytic invariant characterization.

    A clock ``t' = 1`` is appended when no state already has a unit right-hand
    side.  The forward premise is decided first; a refutation there already
    settles the verdict.
    """
    cfg = config or CheckConfig()
    if p == TRUE:
        return Invariant(_cert("invariant", p, ode, None), (), "trivial")
    clock_name = ""
    field_ode = ode
    if clock and not ode.has_clock():
        clock_name = _clock_name(ode, p)
        field_ode = ode.with_clock(clock_name)
    cache = CertificateCache()
    try:
        fwd, bwd = sai_vcs(p, field_ode, cache, cfg.max_rank, cfg.dnf_cap)
    except (RankExceeded, BudgetExceeded, DNFCapExceeded) as exc:
        return Undetermined((), (), "SAI", str(exc), True)
    discharge(fwd, cfg)
    ranks = rank_witnesses(cache, field_ode)
    if fwd.verdict == "refuted":
        node = SAI(p, ranks, _leaf(fwd), None, clock_name)
        return NotInvariant(fwd, dict(fwd.point), _cert("not-invariant", p, ode, node),
                            (fwd, bwd), "SAI", SAI_CAVEAT)
    discharge(bwd, cfg)
    if bwd.verdict == "refuted":
        node = SAI(p, ranks, None, _leaf(bwd), clock_name)
        return NotInvariant(bwd, dict(bwd.point), _cert("not-invariant", p, ode, node),
                            (fwd, bwd), "SAI", SAI_CAVEAT)
    if fwd.verdict == "proved" and bwd.verdict == "proved":
        node = SAI(p, ranks, _leaf(fwd), _leaf(bwd), clock_name)
        return Invariant(_cert("invariant", p, ode, node), (fwd, bwd), "SAI")
    return _undetermined([fwd, bwd], "SAI", "semianalytic premises open")


# ---------------------------------------------------------------------------
# dispatcher

METHODS = ("auto", "dbx", "dbx-geq", "vdbx", "dri", "sai")


def _equations(candidate: Formula):
    parts = candidate.args if isinstance(candidate, And) else (candidate,)
    if all(isinstance(a, Atom) and a.rel == "=" for a in parts):
        return [a.lhs for a in parts]
    return None


def _single(candidate, ode, cfg, method):
    e = analytic_term(candidate)
    eqs = _equations(candidate)
    if method == "dbx":
        if e is None:
            raise ValueError("dbx needs an equational candidate")
        return _prove_dbx(candidate, e, ode, cfg)
    if method == "dbx-geq":
        if not (isinstance(candidate, Atom) and candidate.rel in (">=", ">")):
            raise ValueError("dbx-geq needs a single inequality candidate")
        return _prove_dbx_geq(candidate, ode, cfg)
    if method == "vdbx":
        if eqs is None:
            raise ValueError("vdbx needs a conjunction of equations")
        return _prove_vdbx(candidate, eqs, ode, cfg)
    if method == "dri":
        if e is None:
            raise ValueError("dri needs an equational candidate")
        return analytic_invariance(e, ode, cfg, candidate)
    if method == "sai":
        return semianalytic_invariance(candidate, ode, cfg)
    # auto: cheap sufficient rules first, then the complete characterizations
    attempts = []
    if e is not None:
        if len(eqs or []) > 1:
            r = _prove_vdbx(candidate, eqs, ode, cfg)
        else:
            r = _prove_dbx(candidate, e, ode, cfg)
        if isinstance(r, Invariant):
            return r
        attempts.extend(r.vcs)
        r = analytic_invariance(e, ode, cfg, candidate)
    else:
        if isinstance(candidate, Atom) and candidate.rel in (">=", ">"):
            r = _prove_dbx_geq(candidate, ode, cfg)
            if isinstance(r, Invariant):
                return r
            attempts.extend(r.vcs)
        r = semianalytic_invariance(candidate, ode, cfg)
    if isinstance(r, Undetermined):
        return Undetermined(r.open_vcs, tuple(attempts) + r.vcs, r.method, r.reason,
                            r.resource_limited)
    return r


def check_invariance(candidate: Formula, ode: ODESystem, config: CheckConfig | None = None,
                     method: str = "auto", cuts: Sequence[Formula] = ()):
    """Verdict for ``candidate → [ode & Q] candidate``.

    ``cuts`` are proved invariant first (each must follow from the candidate
    and ``Q``) and then added to the domain, nesting differential cuts.
    """
    cfg = config or CheckConfig()
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    if candidate == TRUE:
        return Invariant(_cert("invariant", candidate, ode, None), (), "trivial")
    if not cuts:
        return _single(candidate, ode, cfg, method)
    cut, rest = cuts[0], cuts[1:]
    init = discharge(cut_init_vc(candidate, cut, ode), cfg)
    if init.verdict != "proved":
        return _undetermined([init], "dC", "cut does not follow from the candidate")
    sub = check_invariance(cut, ode, cfg, "auto")
    if not isinstance(sub, Invariant):
        return Undetermined(getattr(sub, "open_vcs", ()) or tuple(sub.vcs), tuple(sub.vcs), "dC",
                            "cut formula not proved invariant")
    narrowed = ode.with_domain(conj([q for q in (domain_of(ode), cut) if q != TRUE]))
    main = check_invariance(candidate, narrowed, cfg, method, rest)
    if not isinstance(main, Invariant):
        return Undetermined(getattr(main, "open_vcs", ()), tuple(main.vcs), "dC",
                            "candidate not proved under the cut")
    node = DC(cut, _leaf(init), sub.certificate.root, main.certificate.root)
    return Invariant(_cert("invariant", candidate, ode, node),
                     (init,) + tuple(sub.vcs) + tuple(main.vcs), "dC")


def premises(candidate: Formula, ode: ODESystem, config: CheckConfig | None = None,
             method: str = "auto") -> list:
    """Undischarged premises of the rule ``method`` would apply (for export).

    ``auto`` picks the complete characterization: the radical equivalence for
    analytic candidates, the semianalytic one (with clock) otherwise.
    """
    cfg = config or CheckConfig()
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    e = analytic_term(candidate)
    if method in ("dbx", "dbx-geq"):
        if method == "dbx-geq":
            if not (isinstance(candidate, Atom) and candidate.rel in (">=", ">")):
                raise ValueError("dbx-geq needs a single inequality candidate")
            e = candidate.lhs
        if e is None:
            raise ValueError("dbx needs an equational candidate")
        g = synthesize_cofactor(e, ode)
        if g is None:
            rel = ">=" if method == "dbx-geq" else "="
            return [VerificationCondition(guarded([domain_of(ode)], Atom(lie_derivative(e, ode), rel)),
                                          "dbx" if rel == "=" else "dbx≥", note="no cofactor found")]
        return [dbx_vc(e, g, ode, inequality=method == "dbx-geq")]
    if method == "vdbx":
        eqs = _equations(candidate)
        if eqs is None:
            raise ValueError("vdbx needs a conjunction of equations")
        G = synthesize_matrix(eqs, ode)
        if G is None:
            raise ValueError("no cofactor matrix found")
        return vdbx_vcs(eqs, G, ode)
    if e is not None and method in ("auto", "dri"):
        return [dri_vc(e, ode, CertificateCache(), cfg.max_rank, cfg.dnf_cap)]
    if method == "dri":
        raise ValueError("dri needs an equational candidate")
    field_ode = ode if ode.has_clock() else ode.with_clock(_clock_name(ode, candidate))
    return list(sai_vcs(candidate, field_ode, CertificateCache(), cfg.max_rank, cfg.dnf_cap))
