"""Problem files: the input format of the command-line tool.

A problem file is a sequence of bracketed sections.  Blank lines and text
after ``#`` are ignored.  Grammar (EBNF)::

    file        ::= { section }
    section     ::= "[" name "]" newline { line newline }
    variables   ::= ident { ("," | " ") ident }          (also: parameters)
    ode         ::= { ident "'" "=" term }                (one equation per line)
    reciprocals ::= { ident "=" "1" "/" term }            (one per line)
    domain      ::= formula                               (lines are joined)
    candidate   ::= formula
    cuts        ::= { formula }                           (one per line)
    constraints ::= { formula }                           (one per line)
    term        ::= term                                  (lines are joined)
    postcondition ::= formula                             (analytic)
    program     ::= hybrid program                        (lines are joined)
    options     ::= { ident "=" value }

Every variable mentioned anywhere must be declared in ``[variables]``,
``[parameters]`` or ``[reciprocals]``.  A variable listed in ``[variables]``
needs an equation in ``[ode]`` whenever that section is present.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .expr import DEFAULT_REGISTRY, ParseError, Term, free_vars, normalize, parse_term
from .formula import TRUE, Formula, formula_vars, parse_formula
from .lie import ODESystem
from .transform import HybridProgram, parse_program, polynomialize

__all__ = ["ProblemFile", "ProblemError", "parse_problem", "load_problem", "SECTIONS", "OPTIONS"]

SECTIONS = ("variables", "parameters", "ode", "reciprocals", "domain", "candidate", "cuts",
            "constraints", "term", "postcondition", "program", "options")

# option name -> converter; values are validated at parse time
OPTIONS = {
    "method": str,
    "max_rank": int,
    "sample_budget": int,
    "seed": int,
    "precision": int,
    "dnf_cap": int,
    "groebner_budget": int,
    "max_loop": int,
    "smt_lemmas": lambda v: {"true": True, "false": False}[v.lower()],
    "smt_solver": str,
}

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_HEADER = re.compile(r"\[\s*([A-Za-z_]+)\s*\]\Z")
_EQUATION = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*'\s*=(.*)\Z")


class ProblemError(ValueError):
    """Malformed problem file; carries the 1-based line number when known."""

    def __init__(self, message: str, line: int = 0, source: str = ""):
        where = source or "<problem>"
        super().__init__(f"{where}:{line}: {message}" if line else f"{where}: {message}")
        self.line = line


@dataclass(frozen=True)
class ProblemFile:
    variables: tuple = ()
    parameters: tuple = ()
    ode: ODESystem | None = None
    reciprocals: tuple = ()
    candidate: Formula | None = None
    cuts: tuple = ()
    constraints: tuple = ()
    term: Term | None = None
    postcondition: Formula | None = None
    program: HybridProgram | None = None
    options: dict = field(default_factory=dict)
    source: str = ""

    def system(self) -> ODESystem:
        """The ODE, extended by ``y' = -y^2 lie(d)`` for each reciprocal ``y = 1/d``."""
        if self.ode is None:
            raise ProblemError("no [ode] section", source=self.source)
        if not self.reciprocals:
            return self.ode
        return polynomialize(self.ode, dict(self.reciprocals), keep_functions=True).ode

    def option(self, name: str, default=None):
        return self.options.get(name, default)


def _sections(text: str, source: str) -> dict:
    out: dict = {}
    current = None
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _HEADER.match(line)
        if m:
            name = m.group(1).lower()
            if name not in SECTIONS:
                raise ProblemError(f"unknown section [{name}]", n, source)
            if name in out:
                raise ProblemError(f"duplicate section [{name}]", n, source)
            out[name] = []
            current = name
            continue
        if current is None:
            raise ProblemError("content before the first section header", n, source)
        out[current].append((n, line))
    return out


def _names(lines, source) -> tuple:
    names = []
    for n, line in lines:
        for tok in re.split(r"[,\s]+", line):
            if not tok:
                continue
            if not _IDENT.match(tok):
                raise ProblemError(f"not an identifier: {tok!r}", n, source)
            if tok in names:
                raise ProblemError(f"{tok!r} declared twice", n, source)
            names.append(tok)
    return tuple(names)


def _joined(lines) -> tuple:
    return (lines[0][0] if lines else 0), " ".join(line for _, line in lines)


def _wrap(fn, text, n, source, what):
    try:
        return fn(text, DEFAULT_REGISTRY)
    except ParseError as exc:
        raise ProblemError(f"{what}: {exc}", n, source) from None
    except KeyError as exc:  # unknown function symbol
        raise ProblemError(f"{what}: unknown function symbol {exc}", n, source) from None


def parse_problem(text: str, source: str = "") -> ProblemFile:
    sec = _sections(text, source)
    variables = _names(sec.get("variables", []), source)
    parameters = _names(sec.get("parameters", []), source)
    clash = set(variables) & set(parameters)
    if clash:
        raise ProblemError(f"declared both as variable and parameter: {sorted(clash)}",
                           source=source)

    reciprocals = []
    for n, line in sec.get("reciprocals", []):
        name, eq, rest = line.partition("=")
        name, rest = name.strip(), rest.strip()
        if not eq or not _IDENT.match(name) or not rest.startswith("1/"):
            raise ProblemError("expected 'y = 1/term'", n, source)
        d = _wrap(parse_term, rest[2:], n, source, "reciprocal")
        reciprocals.append((n, name, normalize(d)))
    rnames = tuple(name for _, name, _ in reciprocals)
    for name in rnames:
        if name in variables or name in parameters or rnames.count(name) > 1:
            raise ProblemError(f"reciprocal name {name!r} is already declared", source=source)
    declared = set(variables) | set(parameters) | set(rnames)

    def require(names, n, what):
        missing = sorted(set(names) - declared)
        if missing:
            raise ProblemError(f"undeclared variable(s) {', '.join(missing)} in {what}", n, source)

    for n, _, d in reciprocals:
        require(free_vars(d), n, "reciprocal")

    ode = None
    if "ode" in sec:
        states, rhs = [], []
        for n, line in sec["ode"]:
            m = _EQUATION.match(line)
            if not m:
                raise ProblemError("expected an equation x' = term", n, source)
            x = m.group(1)
            if x not in variables:
                raise ProblemError(f"equation for undeclared variable {x!r}", n, source)
            if x in states:
                raise ProblemError(f"second equation for {x!r}", n, source)
            f = _wrap(parse_term, m.group(2), n, source, "right-hand side")
            require(free_vars(f), n, f"the equation for {x}")
            states.append(x)
            rhs.append(f)
        missing = [x for x in variables if x not in states]
        if missing:
            raise ProblemError(f"variable(s) without an equation: {', '.join(missing)}",
                               source=source)
        n, text_q = _joined(sec.get("domain", []))
        domain = TRUE
        if text_q:
            domain = _wrap(parse_formula, text_q, n, source, "domain")
            require(formula_vars(domain), n, "the domain")
        ode = ODESystem(tuple(states), tuple(rhs), domain)
    elif "domain" in sec:
        raise ProblemError("[domain] needs an [ode] section", sec["domain"][0][0], source)

    def formula_section(name):
        if name not in sec:
            return None
        n, body = _joined(sec[name])
        if not body:
            raise ProblemError(f"empty [{name}] section", source=source)
        f = _wrap(parse_formula, body, n, source, name)
        require(formula_vars(f), n, f"the {name}")
        return f

    candidate = formula_section("candidate")
    postcondition = formula_section("postcondition")
    def formula_lines(name):
        out = []
        for n, line in sec.get(name, []):
            c = _wrap(parse_formula, line, n, source, name)
            require(formula_vars(c), n, f"[{name}]")
            out.append(c)
        return tuple(out)

    cuts = formula_lines("cuts")
    constraints = formula_lines("constraints")

    term = None
    if "term" in sec:
        n, body = _joined(sec["term"])
        term = _wrap(parse_term, body, n, source, "term")
        require(free_vars(term), n, "the term")

    program = None
    if "program" in sec:
        n, body = _joined(sec["program"])
        program = _wrap(parse_program, body, n, source, "program")
        require(_program_vars(program), n, "the program")

    options = {}
    for n, line in sec.get("options", []):
        key, eq, value = line.partition("=")
        key, value = key.strip().replace("-", "_"), value.strip()
        if not eq or key not in OPTIONS:
            raise ProblemError(f"unknown option {key!r}", n, source)
        try:
            options[key] = OPTIONS[key](value)
        except (ValueError, KeyError):
            raise ProblemError(f"bad value for option {key!r}: {value!r}", n, source) from None

    return ProblemFile(variables, parameters, ode, tuple((y, d) for _, y, d in reciprocals),
                       candidate, cuts, constraints, term, postcondition, program, options, source)


def _program_vars(a) -> set:
    from .transform import Assign, Choice, Evolve, Loop, Seq, Test
    if isinstance(a, Assign):
        return {a.var} | free_vars(a.value)
    if isinstance(a, Test):
        return free_vars(a.guard)
    if isinstance(a, Evolve):
        vs = set(a.ode.states)
        for f in a.ode.rhs:
            vs |= free_vars(f)
        return vs | (free_vars(a.guard) if a.guard is not None else set())
    if isinstance(a, (Choice,)):
        return _program_vars(a.left) | _program_vars(a.right)
    if isinstance(a, Seq):
        return _program_vars(a.first) | _program_vars(a.second)
    if isinstance(a, Loop):
        return _program_vars(a.body)
    return set()


def load_problem(path) -> ProblemFile:
    """Read and parse ``path``; I/O failures propagate as :class:`OSError`."""
    p = Path(path)
    return parse_problem(p.read_text(encoding="utf-8"), str(path))
