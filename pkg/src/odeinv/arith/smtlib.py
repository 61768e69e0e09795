"""SMT-LIB 2 export of verification conditions.

Each condition becomes a ``(push 1) … (assert (not vc)) (check-sat) (pop 1)``
block, so an external solver answering ``unsat`` proves the condition.
``exp``/``sin``/``cos`` are uninterpreted functions ``f_exp``/``f_sin``/
``f_cos``; with ``lemmas`` enabled the script also asserts positivity of
``exp``, the range ``[-1, 1]`` of ``sin``/``cos`` and the Pythagorean
identity for every argument that occurs.  Output is byte-stable: symbols and
lemmas are emitted in sorted order.
"""
from __future__ import annotations

import hashlib
import shutil
import subprocess
from fractions import Fraction
from typing import Sequence

from ..expr import Add, App, Const, Mul, Term, Var, applications, expand, free_vars, normalize, term_key
from ..formula import And, Atom, Formula, Iff, Implies, Not, Or, Truth, formula_atoms

__all__ = ["export_smtlib", "smt_term", "smt_formula", "fingerprint", "run_solver",
           "solver_available"]

_FUNCS = {"exp": "f_exp", "sin": "f_sin", "cos": "f_cos"}


def _num(q: Fraction) -> str:
    q = Fraction(q)
    mag = abs(q)
    body = str(mag.numerator) if mag.denominator == 1 else f"(/ {mag.numerator} {mag.denominator})"
    return f"(- {body})" if q < 0 else body


def _sym(name: str) -> str:
    return name if name.replace("_", "").isalnum() and not name[0].isdigit() else f"|{name}|"


def smt_term(t: Term) -> str:
    """Render a term, expanding integer powers into products."""
    poly = expand(t)
    if not poly:
        return "0"
    parts = []
    for mono, c in sorted(poly.items(), key=lambda mc: [(term_key(a), e) for a, e in mc[0]]):
        factors = []
        for atom, e in mono:
            s = _atom(atom)
            factors.extend([s] * e)
        if c != 1 or not factors:
            factors.insert(0, _num(c))
        parts.append(factors[0] if len(factors) == 1 else "(* " + " ".join(factors) + ")")
    return parts[0] if len(parts) == 1 else "(+ " + " ".join(parts) + ")"


def _atom(a: Term) -> str:
    if isinstance(a, Var):
        return _sym(a.name)
    if isinstance(a, App):
        f = _FUNCS.get(a.symbol, "f_" + a.symbol)
        return f"({f} " + " ".join(smt_term(x) for x in a.args) + ")"
    return smt_term(a)


def smt_formula(f: Formula) -> str:
    if isinstance(f, Truth):
        return "true" if f.value else "false"
    if isinstance(f, Atom):
        return f"({f.rel} {smt_term(f.lhs)} 0)"
    if isinstance(f, And):
        return "(and " + " ".join(smt_formula(a) for a in f.args) + ")"
    if isinstance(f, Or):
        return "(or " + " ".join(smt_formula(a) for a in f.args) + ")"
    if isinstance(f, Not):
        return f"(not {smt_formula(f.arg)})"
    if isinstance(f, Implies):
        return f"(=> {smt_formula(f.lhs)} {smt_formula(f.rhs)})"
    if isinstance(f, Iff):
        return f"(= {smt_formula(f.lhs)} {smt_formula(f.rhs)})"
    raise TypeError(f"not a formula: {f!r}")


def _apps(formulas: Sequence[Formula]) -> list:
    seen = set()
    for f in formulas:
        for a in formula_atoms(f):
            for app in applications(a.lhs):
                seen.add(App(app.symbol, tuple(normalize(x) for x in app.args)))
    return sorted(seen, key=term_key)


def _lemmas(apps: list) -> list:
    out = []
    trig_args = set()
    for a in apps:
        s = _atom(a)
        if a.symbol == "exp":
            out.append(f"(assert (> {s} 0))")
        elif a.symbol in ("sin", "cos"):
            out.append(f"(assert (and (<= (- 1) {s}) (<= {s} 1)))")
            trig_args.add(a.args)
    for args in sorted(trig_args, key=lambda xs: [term_key(x) for x in xs]):
        s, c = _atom(App("sin", args)), _atom(App("cos", args))
        out.append(f"(assert (= (+ (* {s} {s}) (* {c} {c})) 1))")
    return out


def export_smtlib(vcs, lemmas: bool = False, labels: Sequence[str] | None = None) -> str:
    """SMT-LIB script checking each condition's negation for unsatisfiability.

    ``vcs`` is a formula, a verification condition, or a sequence of either.
    """
    if isinstance(vcs, Formula) or hasattr(vcs, "formula"):
        vcs = [vcs]
    formulas, tags = [], []
    for i, v in enumerate(vcs):
        f = v.formula if hasattr(v, "formula") else v
        formulas.append(f)
        tag = labels[i] if labels else getattr(v, "rule", f"vc{i}")
        tags.append(tag)
    apps = _apps(formulas)
    names = set()
    for f in formulas:
        for a in formula_atoms(f):
            names |= free_vars(a.lhs)
    logic = "QF_UFNRA" if apps else "QF_NRA"
    lines = ["; odeinv verification conditions", f"(set-logic {logic})"]
    for n in sorted(names):
        lines.append(f"(declare-fun {_sym(n)} () Real)")
    arities = sorted({(a.symbol, len(a.args)) for a in apps})
    for sym, k in arities:
        lines.append(f"(declare-fun {_FUNCS.get(sym, 'f_' + sym)} (" + " ".join(["Real"] * k) + ") Real)")
    if lemmas:
        lines.extend(_lemmas(apps))
    for tag, f in zip(tags, formulas):
        lines.append(f"; {tag}")
        lines.append("(push 1)")
        lines.append(f"(assert (not {smt_formula(f)}))")
        lines.append("(check-sat)")
        lines.append("(pop 1)")
    lines.append("(exit)")
    return "\n".join(lines) + "\n"


def fingerprint(script: str) -> str:
    return hashlib.sha256(script.encode("utf-8")).hexdigest()


def solver_available(name: str = "z3") -> bool:
    return shutil.which(name) is not None


def run_solver(script: str, name: str = "z3", timeout: float = 30.0) -> list:
    """Run an external solver binary on ``script``; one answer per ``check-sat``."""
    exe = shutil.which(name)
    if exe is None:
        raise FileNotFoundError(f"solver {name!r} not found on PATH")
    args = [exe, "-in", "-smt2"] if name == "z3" else [exe, "--lang", "smt2"]
    try:
        proc = subprocess.run(args, input=script, capture_output=True, text=True, timeout=timeout)
    except subprocess.TimeoutExpired:
        return ["timeout"]
    return [ln.strip() for ln in proc.stdout.splitlines() if ln.strip() in ("sat", "unsat", "unknown")]
