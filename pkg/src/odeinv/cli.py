"""Command-line front end.

Subcommands::

    odeinv check FILE        decide invariance of [candidate] along [ode]
    odeinv rank FILE         differential radical rank of [term]
    odeinv progress FILE     progress formula of [candidate]
    odeinv polyize FILE      polynomial IVP for a Noetherian ODE
    odeinv reduce-hp FILE    reduce [program] against [postcondition]
    odeinv export-smt FILE   SMT-LIB script of the rule premises
    odeinv cert-check CERT   check a certificate without search
    odeinv simulate FILE     RK4 trajectory as CSV (test oracle only)

Exit codes: 0 invariant / ok, 1 not invariant, 2 certificate check failure,
3 parse or format error, 4 undetermined, 5 resource limit, 6 I/O error.

Reports end with a ``key: value`` block after a ``--`` line; all output is
deterministic for fixed input, seed and flags.
"""
from __future__ import annotations

import argparse
import sys
import warnings
from fractions import Fraction

from . import __version__
from .arith.decide import (DEFAULT_PRECISION, DEFAULT_SAMPLE_BUDGET, DEFAULT_SEED, SamplerConfig,
                           certify_refutation)
from .arith.simulate import SimulationWarning, simulate
from .arith.smtlib import export_smtlib, fingerprint
from .conditions import analytic_term
from .expr import ParseError, to_text
from .formula import DEFAULT_DNF_CAP, DNFCapExceeded, formula_text, progress_semianalytic
from .invariance import (METHODS, SAI_CAVEAT, CheckConfig, Invariant, NotInvariant, check_invariance,
                         premises)
from .lie import DEFAULT_MAX_RANK, CertificateCache, RankExceeded, ode_chain, rank_certificate
from .problem import ProblemError, load_problem
from .proofcert import (HPReduce, ProofCertificate, CertificateFormatError, check_certificate,
                        deserialize, serialize)
from .ring import BudgetExceeded
from .transform import HPReduceError, NonPolynomialLoop, hp_reduce_traced, polynomialize, program_text

__all__ = ["main", "build_parser", "EXIT_CODES"]

EXIT_OK, EXIT_NOT_INVARIANT, EXIT_CERT, EXIT_PARSE, EXIT_UNDETERMINED, EXIT_RESOURCE, EXIT_IO = range(7)
EXIT_CODES = {
    0: "invariant / ok",
    1: "not invariant",
    2: "certificate check failure",
    3: "parse or format error",
    4: "undetermined",
    5: "resource limit exceeded",
    6: "I/O error",
}
_RESOURCE = (RankExceeded, BudgetExceeded, DNFCapExceeded)


class _Usage(Exception):
    pass


def _num(q) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


class _Out:
    """Human lines first, then the machine-readable block."""

    def __init__(self, stream):
        self.stream = stream
        self.human: list = []
        self.machine: list = []

    def say(self, line: str = "") -> None:
        self.human.append(line)

    def kv(self, key: str, value) -> None:
        if isinstance(value, bool):
            value = "true" if value else "false"
        self.machine.append(f"{key}: {value}")

    def flush(self) -> None:
        lines = list(self.human)
        if self.machine:
            lines += ["--"] + self.machine
        self.stream.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# configuration

def _config(args, prob) -> CheckConfig:
    def pick(flag, option, default):
        v = getattr(args, flag, None)
        if v is not None:
            return v
        return prob.option(option, default) if prob is not None else default

    sampler = SamplerConfig(seed=pick("seed", "seed", DEFAULT_SEED),
                            budget=pick("sample_budget", "sample_budget", DEFAULT_SAMPLE_BUDGET),
                            precision=pick("precision", "precision", DEFAULT_PRECISION))
    lemmas = bool(args.smt_lemmas) or bool(prob.option("smt_lemmas", False) if prob else False)
    return CheckConfig(max_rank=pick("max_rank", "max_rank", DEFAULT_MAX_RANK),
                       sampler=sampler,
                       dnf_cap=pick("dnf_cap", "dnf_cap", DEFAULT_DNF_CAP),
                       groebner_budget=pick("groebner_budget", "groebner_budget", 10**5),
                       smt_solver=pick("smt_solver", "smt_solver", ""),
                       smt_lemmas=lemmas)


def _method(args, prob) -> str:
    m = args.method or prob.option("method", "auto")
    if m not in METHODS:
        raise _Usage(f"unknown method {m!r}; expected one of {', '.join(METHODS)}")
    return m


def _need(prob, attr, section):
    v = getattr(prob, attr)
    if v is None:
        raise ProblemError(f"missing [{section}] section", source=prob.source)
    return v


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _point_text(point) -> str:
    return ", ".join(f"{k} = {_num(v)}" for k, v in sorted(point.items()))


# ---------------------------------------------------------------------------
# subcommands

def cmd_check(args, out: _Out) -> int:
    prob = load_problem(args.file)
    ode = prob.system()
    candidate = _need(prob, "candidate", "candidate")
    cfg = _config(args, prob)
    method = _method(args, prob)
    try:
        r = check_invariance(candidate, ode, cfg, method, prob.cuts)
    except ValueError as exc:
        raise _Usage(str(exc)) from None
    out.say(f"candidate: {formula_text(candidate)}")
    out.say(f"ode: {ode}")
    for vc in r.vcs:
        out.say(f"  {vc.verdict:<8} [{vc.rule}]" + (f" {formula_text(vc.formula)}" if args.verbose else ""))
    out.kv("file", args.file)
    out.kv("status", r.status)
    out.kv("method", r.method)
    out.kv("vcs", len(r.vcs))
    for i, vc in enumerate(r.vcs):
        out.kv(f"vc[{i}].rule", vc.rule)
        out.kv(f"vc[{i}].verdict", vc.verdict)
    code = r.exit_code
    if isinstance(r, Invariant):
        out.say(f"The candidate is invariant ({r.method}).")
    elif isinstance(r, NotInvariant):
        p = r.point
        bits = cfg.sampler.precision
        first = certify_refutation(r.vc.formula, p, bits)
        second = certify_refutation(r.vc.formula, p, 2 * bits)
        out.say(f"The candidate is not invariant ({r.method}); the premise [{r.vc.rule}] fails at")
        out.say(f"  {_point_text(p)}")
        if r.caveat:
            out.say(f"Note: {r.caveat}")
        out.kv("refuted_vc", r.vc.rule)
        for k in sorted(p):
            out.kv(f"point.{k}", _num(p[k]))
        out.kv(f"witness.certified_{bits}", first)
        out.kv(f"witness.certified_{2 * bits}", second)
        if r.caveat:
            out.kv("caveat", "candidate-only")
    else:
        out.say(f"Undetermined ({r.method}): {r.reason or 'premises remain open'}.")
        out.kv("reason", r.reason or "open premises")
        out.kv("resource_limited", r.resource_limited)
        if r.resource_limited:
            code = EXIT_RESOURCE
    cert = getattr(r, "certificate", None)
    if cert is not None and args.cert:
        _write(args.cert, serialize(cert))
        out.kv("certificate", args.cert)
    out.kv("exit", code)
    return code


def cmd_rank(args, out: _Out) -> int:
    prob = load_problem(args.file)
    ode = prob.system()
    e = prob.term
    if e is None and prob.candidate is not None:
        e = analytic_term(prob.candidate)
    if e is None:
        raise ProblemError("rank needs a [term] section or an equational candidate",
                           source=prob.source)
    cfg = _config(args, prob)
    cert = rank_certificate(e, ode, cfg.max_rank, budget=cfg.groebner_budget)
    chain = ode_chain(ode, [e])
    out.say(f"term: {to_text(cert.term)}")
    out.say(f"ode: {ode}")
    if chain.elements:
        out.say("chain: " + ", ".join(to_text(h) for h in chain.elements))
    out.say(f"N = {cert.rank}")
    for i, L in enumerate(cert.lies):
        out.say(f"L{i} = {to_text(L)}")
    out.say(f"L{cert.rank} = " + " + ".join(f"({to_text(g)})*L{i}" for i, g in enumerate(cert.cofactors)))
    out.kv("rank", cert.rank)
    for i, L in enumerate(cert.lies):
        out.kv(f"lie[{i}]", to_text(L))
    for i, g in enumerate(cert.cofactors):
        out.kv(f"cofactor[{i}]", to_text(g))
    out.kv("identity", "verified" if cert.verify() else "FAILED")
    return EXIT_OK


def cmd_progress(args, out: _Out) -> int:
    prob = load_problem(args.file)
    ode = prob.system()
    p = _need(prob, "candidate", "candidate")
    cfg = _config(args, prob)
    cache = CertificateCache()
    directions = ("forward", "backward") if args.direction == "both" else (args.direction,)
    out.say(f"P: {formula_text(p)}")
    for d in directions:
        s = progress_semianalytic(p, ode, d, cache, cfg.max_rank, cfg.dnf_cap)
        out.say(f"sigma_{d}(P): {formula_text(s)}")
        out.kv(f"sigma.{d}", formula_text(s))
    # reversing the field only flips signs of Lie derivatives, so ranks agree
    ranks = {}
    for t, _, c in cache.entries():
        ranks.setdefault(to_text(t), c.rank)
    for t, n in ranks.items():
        out.kv(f"rank[{t}]", n)
    return EXIT_OK


def cmd_polyize(args, out: _Out) -> int:
    prob = load_problem(args.file)
    ode = _need(prob, "ode", "ode")
    ivp = polynomialize(ode, dict(prob.reciprocals), keep_functions=args.keep_functions,
                        prefix=args.prefix)
    text = ivp.to_text()
    if args.output:
        _write(args.output, text)
    out.stream.write(text)
    return EXIT_OK


def cmd_reduce_hp(args, out: _Out) -> int:
    prob = load_problem(args.file)
    prog = _need(prob, "program", "program")
    if prob.postcondition is not None:
        e = analytic_term(prob.postcondition)
        if e is None:
            raise ProblemError("[postcondition] must be analytic (equations only)", source=prob.source)
    elif prob.term is not None:
        e = prob.term
    else:
        raise ProblemError("reduce-hp needs a [postcondition] or [term] section", source=prob.source)
    cfg = _config(args, prob)
    max_loop = args.max_loop if args.max_loop is not None else prob.option("max_loop", 16)
    trace = hp_reduce_traced(prog, e, cfg.max_rank, max_loop)
    out.say(f"program: {program_text(prog)}")
    out.say(f"postcondition: {to_text(trace.post)} = 0")
    out.say(f"reduced: {to_text(trace.result)} = 0")
    out.kv("reduced", to_text(trace.result))
    if args.cert:
        node = HPReduce(program_text(prog), trace.post, trace.result, trace)
        _write(args.cert, serialize(ProofCertificate("reduction", None, None, node)))
        out.kv("certificate", args.cert)
    return EXIT_OK


def cmd_export_smt(args, out: _Out) -> int:
    prob = load_problem(args.file)
    ode = prob.system()
    candidate = _need(prob, "candidate", "candidate")
    cfg = _config(args, prob)
    try:
        vcs = premises(candidate, ode, cfg, _method(args, prob))
    except ValueError as exc:
        raise _Usage(str(exc)) from None
    script = export_smtlib(vcs, lemmas=cfg.smt_lemmas)
    if args.output:
        _write(args.output, script)
        out.say(f"wrote {len(vcs)} condition(s) to {args.output}")
        out.kv("vcs", len(vcs))
        out.kv("sha256", fingerprint(script))
    else:
        out.stream.write(script)
    return EXIT_OK


def cmd_cert_check(args, out: _Out) -> int:
    with open(args.cert, encoding="utf-8") as fh:
        text = fh.read()
    cert = deserialize(text)
    res = check_certificate(cert)
    out.say(f"{args.cert}: {res}")
    out.kv("claim", cert.claim)
    out.kv("ok", res.ok)
    if not res.ok:
        out.kv("path", res.path)
        out.kv("reason", res.reason)
    if res.second_class:
        out.kv("second_class", ", ".join(res.second_class))
    return EXIT_OK if res.ok else EXIT_CERT


def _init_point(items) -> dict:
    point = {}
    for item in items or []:
        name, eq, value = item.partition("=")
        if not eq:
            raise _Usage(f"--init expects name=value, got {item!r}")
        try:
            point[name.strip()] = Fraction(value.strip())
        except ValueError:
            raise _Usage(f"--init value is not a rational number: {value!r}") from None
    return point


def cmd_simulate(args, out: _Out) -> int:
    prob = load_problem(args.file)
    ode = prob.system()
    init = _init_point(args.init)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", SimulationWarning)
        try:
            traj = simulate(ode, init, Fraction(args.horizon), Fraction(args.step),
                            args.tolerance, args.precision, args.record_every)
        except ValueError as exc:
            raise _Usage(str(exc)) from None
    text = traj.to_csv()
    if args.output:
        _write(args.output, text)
    else:
        out.stream.write(text)
    for w in caught:
        sys.stderr.write(f"warning: {w.message}\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing

def _budgets(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-rank", type=int, help=f"rank search bound (default {DEFAULT_MAX_RANK})")
    p.add_argument("--sample-budget", type=int,
                   help=f"counterexample sampling budget (default {DEFAULT_SAMPLE_BUDGET})")
    p.add_argument("--precision", type=int,
                   help=f"interval precision in bits (default {DEFAULT_PRECISION})")
    p.add_argument("--seed", type=int, help=f"sampler seed (default {DEFAULT_SEED})")
    p.add_argument("--dnf-cap", type=int, help=f"DNF size bound (default {DEFAULT_DNF_CAP})")
    p.add_argument("--groebner-budget", type=int, help="Buchberger step budget (default 100000)")
    p.add_argument("--smt-lemmas", action="store_true",
                   help="assert exp/sin/cos lemmas in SMT scripts")
    p.add_argument("--smt-solver", help="external solver for premises left open (e.g. z3)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="odeinv",
                                 description="Invariance checking for ODEs with analytic right-hand sides.",
                                 epilog="exit codes: " + "; ".join(f"{k} {v}" for k, v in EXIT_CODES.items()))
    ap.add_argument("--version", action="version", version=f"odeinv {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="decide invariance of the candidate")
    p.add_argument("file")
    p.add_argument("--method", help="one of " + ", ".join(METHODS))
    p.add_argument("--cert", metavar="OUT", help="write the certificate here")
    p.add_argument("-v", "--verbose", action="store_true", help="print every premise in full")
    _budgets(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("rank", help="differential radical rank and cofactors")
    p.add_argument("file")
    _budgets(p)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("progress", help="progress formula of the candidate")
    p.add_argument("file")
    p.add_argument("--direction", choices=("forward", "backward", "both"), default="forward")
    _budgets(p)
    p.set_defaults(func=cmd_progress)

    p = sub.add_parser("polyize", help="compile to a polynomial IVP")
    p.add_argument("file")
    p.add_argument("--keep-functions", action="store_true",
                   help="only characterize reciprocals; keep sin/cos/exp")
    p.add_argument("--prefix", default="z", help="fresh variable prefix (default z)")
    p.add_argument("-o", "--output", help="also write the IVP to this file")
    p.set_defaults(func=cmd_polyize)

    p = sub.add_parser("reduce-hp", help="reduce a hybrid program against e = 0")
    p.add_argument("file")
    p.add_argument("--max-loop", type=int, help="loop iteration bound (default 16)")
    p.add_argument("--cert", metavar="OUT", help="write the reduction certificate here")
    _budgets(p)
    p.set_defaults(func=cmd_reduce_hp)

    p = sub.add_parser("export-smt", help="SMT-LIB script of the rule premises")
    p.add_argument("file")
    p.add_argument("--method", help="one of " + ", ".join(METHODS))
    p.add_argument("-o", "--output", help="write the script here instead of stdout")
    _budgets(p)
    p.set_defaults(func=cmd_export_smt)

    p = sub.add_parser("cert-check", help="check a certificate")
    p.add_argument("cert")
    p.set_defaults(func=cmd_cert_check, smt_lemmas=False)

    p = sub.add_parser("simulate", help="RK4 trajectory as CSV")
    p.add_argument("file")
    p.add_argument("--init", action="append", metavar="NAME=VALUE", help="initial value (repeat)")
    p.add_argument("--horizon", default="1")
    p.add_argument("--step", default="1/100")
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--precision", type=int, help="mpmath precision in bits (default: floats)")
    p.add_argument("--record-every", type=int, default=1)
    p.add_argument("-o", "--output", help="write the CSV here instead of stdout")
    p.set_defaults(func=cmd_simulate, smt_lemmas=False)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:  # argparse usage errors count as parse errors
        return EXIT_OK if exc.code == 0 else EXIT_PARSE
    out = _Out(sys.stdout)
    try:
        code = args.func(args, out)
    except (ProblemError, ParseError, CertificateFormatError, _Usage) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_PARSE
    except _RESOURCE as exc:
        sys.stderr.write(f"resource limit: {exc}\n")
        return EXIT_RESOURCE
    except NonPolynomialLoop as exc:
        sys.stderr.write(f"reduction not applicable: {exc}\n")
        return EXIT_UNDETERMINED
    except HPReduceError as exc:
        sys.stderr.write(f"reduction failed: {exc}\n")
        return EXIT_RESOURCE
    except OSError as exc:
        sys.stderr.write(f"I/O error: {exc}\n")
        return EXIT_IO
    if out.human or out.machine:
        out.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())
