"""Extended terms: syntax trees, parsing, canonical form and partial derivatives.

Terms are built from variables, rational constants, sums, products and
applications of registered function symbols (``exp``, ``sin``, ``cos`` out of
the box).  Every function symbol carries one derivative template per argument
so that partial derivatives stay inside the term language.
"""
from __future__ import annotations

import re
from functools import lru_cache
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Union

__all__ = [
    "Term", "Var", "Const", "Add", "Mul", "App",
    "FunctionSymbol", "Registry", "DEFAULT_REGISTRY", "RegistryError",
    "ParseError", "UnknownSymbolError",
    "parse_term", "normalize", "partial_derivative", "expand", "from_monomials",
    "substitute", "free_vars", "applications", "is_polynomial", "depth",
    "term_key", "to_text", "as_term", "ZERO", "ONE", "evaluate",
    "TermParser", "tokenize", "neg",
]


class Term:
    """Base class of the term variants; values are immutable and hashable."""

    __slots__ = ()

    def __add__(self, other):
        return Add((self, as_term(other)))

    def __radd__(self, other):
        return Add((as_term(other), self))

    def __sub__(self, other):
        return Add((self, Mul((Const(Fraction(-1)), as_term(other)))))

    def __rsub__(self, other):
        return Add((as_term(other), Mul((Const(Fraction(-1)), self))))

    def __mul__(self, other):
        return Mul((self, as_term(other)))

    def __rmul__(self, other):
        return Mul((as_term(other), self))

    def __neg__(self):
        return Mul((Const(Fraction(-1)), self))

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise ValueError("exponent must be a natural number")
        if n == 0:
            return ONE
        if n == 1:
            return self
        return Mul((self,) * n)

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True, repr=False)
class Var(Term):
    name: str

    def __repr__(self):
        return f"Var({self.name!r})"


@dataclass(frozen=True, repr=False)
class Const(Term):
    value: Fraction

    def __post_init__(self):
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))

    def __repr__(self):
        return f"Const({self.value})"


def _cached_hash(self):
    # compound terms are hashed often (memo tables keyed by term); cache it
    h = self.__dict__.get("_hash")
    if h is None:
        h = hash((type(self).__name__,) + tuple(getattr(self, f) for f in self._fields))
        object.__setattr__(self, "_hash", h)
    return h


@dataclass(frozen=True, repr=False)
class Add(Term):
    args: tuple
    _fields = ("args",)
    __hash__ = _cached_hash

    def __repr__(self):
        return "Add(" + ", ".join(map(repr, self.args)) + ")"


@dataclass(frozen=True, repr=False)
class Mul(Term):
    args: tuple
    _fields = ("args",)
    __hash__ = _cached_hash

    def __repr__(self):
        return "Mul(" + ", ".join(map(repr, self.args)) + ")"


@dataclass(frozen=True, repr=False)
class App(Term):
    symbol: str
    args: tuple
    _fields = ("symbol", "args")
    __hash__ = _cached_hash

    def __repr__(self):
        return f"App({self.symbol!r}, [" + ", ".join(map(repr, self.args)) + "])"


ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))


def as_term(x) -> Term:
    if isinstance(x, Term):
        return x
    if isinstance(x, (int, Fraction)):
        return Const(Fraction(x))
    if isinstance(x, str):
        return parse_term(x)
    raise TypeError(f"cannot convert {type(x).__name__} to a term")


# ---------------------------------------------------------------------------
# function symbols

class RegistryError(ValueError):
    pass


class UnknownSymbolError(KeyError):
    def __init__(self, name):
        super().__init__(name)
        self.name = name

    def __str__(self):
        return f"unknown function symbol {self.name!r}"


def _formal(i: int) -> Var:
    return Var(f"#{i}")


@dataclass(frozen=True)
class FunctionSymbol:
    """A fixed function symbol with its partial-derivative templates.

    ``derivatives[k]`` is a term over the formal arguments ``#0 .. #(arity-1)``
    representing the partial derivative with respect to argument ``k``.
    """

    name: str
    arity: int
    derivatives: tuple

    def instantiate(self, k: int, args) -> Term:
        return substitute(self.derivatives[k], {f"#{i}": a for i, a in enumerate(args)})


class Registry:
    """An ordered set of function symbols closed under their derivative templates."""

    def __init__(self, symbols: Iterable[FunctionSymbol] = ()):
        self.symbols = {}
        for s in symbols:
            if s.name in self.symbols:
                raise RegistryError(f"duplicate symbol {s.name!r}")
            if len(s.derivatives) != s.arity:
                raise RegistryError(f"{s.name}: expected {s.arity} derivative templates")
            self.symbols[s.name] = s
        # closure: templates may only mention registered symbols at their arity
        for s in self.symbols.values():
            for tmpl in s.derivatives:
                for app in applications(tmpl):
                    other = self.symbols.get(app.symbol)
                    if other is None:
                        raise RegistryError(
                            f"derivative of {s.name} needs unregistered symbol {app.symbol!r}")
                    if other.arity != len(app.args):
                        raise RegistryError(f"arity mismatch for {app.symbol!r} in {s.name}")
                for v in free_vars(tmpl):
                    if not v.startswith("#") or int(v[1:]) >= s.arity:
                        raise RegistryError(f"template of {s.name} mentions stray variable {v!r}")

    def __contains__(self, name):
        return name in self.symbols

    def __getitem__(self, name) -> FunctionSymbol:
        try:
            return self.symbols[name]
        except KeyError:
            raise UnknownSymbolError(name) from None

    def order(self, name: str) -> int:
        try:
            return list(self.symbols).index(name)
        except ValueError:
            return len(self.symbols)



_SYMBOL_RANK = {"sin": 0, "cos": 1, "exp": 2}


# ---------------------------------------------------------------------------
# structural helpers

@lru_cache(maxsize=None)
def term_key(t: Term):
    """Total structural order used for atoms and chain elements."""
    if isinstance(t, Var):
        return (1, t.name)
    if isinstance(t, App):
        return (2, depth(t), _SYMBOL_RANK.get(t.symbol, 99), t.symbol,
                tuple(term_key(a) for a in t.args))
    if isinstance(t, Const):
        return (0, t.value)
    if isinstance(t, Add):
        return (3, tuple(term_key(a) for a in t.args))
    return (4, tuple(term_key(a) for a in t.args))


@lru_cache(maxsize=None)
def depth(t: Term) -> int:
    """Nesting depth of function applications (0 for polynomial terms)."""
    if isinstance(t, App):
        return 1 + max((depth(a) for a in t.args), default=0)
    if isinstance(t, (Add, Mul)):
        return max((depth(a) for a in t.args), default=0)
    return 0


def free_vars(t: Term) -> set:
    out: set = set()
    stack = [t]
    while stack:
        s = stack.pop()
        if isinstance(s, Var):
            out.add(s.name)
        elif isinstance(s, (Add, Mul, App)):
            stack.extend(s.args)
    return out


def applications(t: Term) -> set:
    """All application subterms, nested ones included."""
    out: set = set()
    stack = [t]
    while stack:
        s = stack.pop()
        if isinstance(s, App):
            out.add(s)
        if isinstance(s, (Add, Mul, App)):
            stack.extend(s.args)
    return out


def is_polynomial(t: Term) -> bool:
    return not applications(t)


def substitute(t: Term, mapping: Mapping[str, Term]) -> Term:
    if isinstance(t, Var):
        return mapping.get(t.name, t)
    if isinstance(t, Const):
        return t
    if isinstance(t, Add):
        return Add(tuple(substitute(a, mapping) for a in t.args))
    if isinstance(t, Mul):
        return Mul(tuple(substitute(a, mapping) for a in t.args))
    return App(t.symbol, tuple(substitute(a, mapping) for a in t.args))


# ---------------------------------------------------------------------------
# canonical form

# A monomial is a tuple of (atom, exponent) pairs sorted by term_key; atoms are
# variables or applications whose arguments are already normalized.

def _mono_mul(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for atom, e in b:
        d[atom] = d.get(atom, 0) + e
    return tuple(sorted(d.items(), key=lambda p: term_key(p[0])))


def _poly_mul(p: dict, q: dict) -> dict:
    out: dict = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            m = _mono_mul(m1, m2)
            c = out.get(m, 0) + c1 * c2
            if c:
                out[m] = c
            else:
                out.pop(m, None)
    return out


def expand(t: Term) -> dict:
    """Expand ``t`` into ``{monomial: coefficient}`` over variable/application atoms."""
    return dict(_expand(t))


@lru_cache(maxsize=1 << 16)
def _expand(t: Term) -> dict:
    # cached results are shared: never mutate them
    if isinstance(t, Const):
        return {(): t.value} if t.value else {}
    if isinstance(t, Var):
        return {((t, 1),): Fraction(1)}
    if isinstance(t, App):
        atom = App(t.symbol, tuple(normalize(a) for a in t.args))
        return {((atom, 1),): Fraction(1)}
    if isinstance(t, Add):
        out: dict = {}
        for a in t.args:
            for m, c in _expand(a).items():
                c = out.get(m, 0) + c
                if c:
                    out[m] = c
                else:
                    out.pop(m, None)
        return out
    acc = {(): Fraction(1)}
    for a in t.args:
        acc = _poly_mul(acc, _expand(a))
        if not acc:
            return {}
    return acc


def _mono_sort_key(item):
    mono = item[0]
    deg = sum(e for _, e in mono)
    return (-deg, tuple((term_key(a), -e) for a, e in mono))


def from_monomials(poly: Mapping[tuple, Fraction]) -> Term:
    """Rebuild the canonical term for an expanded polynomial."""
    summands = []
    for mono, c in sorted(poly.items(), key=_mono_sort_key):
        factors = []
        for atom, e in mono:
            factors.extend([atom] * e)
        if not factors:
            summands.append(Const(Fraction(c)))
        elif c == 1:
            summands.append(factors[0] if len(factors) == 1 else Mul(tuple(factors)))
        else:
            summands.append(Mul((Const(Fraction(c)), *factors)))
    if not summands:
        return ZERO
    if len(summands) == 1:
        return summands[0]
    return Add(tuple(summands))


def normalize(t: Term) -> Term:
    """Canonical form: expanded, constants folded, monomials in a fixed order.

    >>> to_text(normalize(parse_term("x + 0")))
    'x'
    """
    return from_monomials(_expand(t))


# ---------------------------------------------------------------------------
# derivatives

def _diff(t: Term, x: str, registry: Registry) -> Term:
    if isinstance(t, Var):
        return ONE if t.name == x else ZERO
    if isinstance(t, Const):
        return ZERO
    if isinstance(t, Add):
        return Add(tuple(_diff(a, x, registry) for a in t.args))
    if isinstance(t, Mul):
        terms = []
        for i, a in enumerate(t.args):
            da = _diff(a, x, registry)
            terms.append(Mul(t.args[:i] + (da,) + t.args[i + 1:]))
        return Add(tuple(terms)) if terms else ZERO
    sym = registry[t.symbol]
    if sym.arity != len(t.args):
        raise RegistryError(f"{t.symbol} expects {sym.arity} arguments")
    return Add(tuple(Mul((sym.instantiate(k, t.args), _diff(a, x, registry)))
                     for k, a in enumerate(t.args)))


def partial_derivative(t: Term, x: str, registry: Registry | None = None) -> Term:
    """Symbolic partial derivative of ``t`` by variable ``x``, normalized."""
    registry = registry or DEFAULT_REGISTRY
    for app in applications(t):
        registry[app.symbol]
    return normalize(_diff(t, x, registry))


_x0 = _formal(0)
DEFAULT_REGISTRY = Registry([
    FunctionSymbol("sin", 1, (App("cos", (_x0,)),)),
    FunctionSymbol("cos", 1, (Mul((Const(Fraction(-1)), App("sin", (_x0,)))),)),
    FunctionSymbol("exp", 1, (App("exp", (_x0,)),)),
])


# ---------------------------------------------------------------------------
# printing

def _const_text(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def _factor_text(t: Term) -> str:
    if isinstance(t, Add):
        return "(" + to_text(t) + ")"
    if isinstance(t, Const) and (t.value < 0 or t.value.denominator != 1):
        return "(" + _const_text(t.value) + ")"
    return to_text(t)


def _product_text(args: tuple) -> str:
    coeff = Fraction(1)
    rest = []
    for a in args:
        if isinstance(a, Const):
            coeff *= a.value
        else:
            rest.append(a)
    if not rest:
        return _const_text(coeff)
    parts = []
    i = 0
    while i < len(rest):
        j = i
        while j + 1 < len(rest) and rest[j + 1] == rest[i]:
            j += 1
        base = _factor_text(rest[i])
        if isinstance(rest[i], Mul):
            base = "(" + base + ")"
        parts.append(base if j == i else f"{base}^{j - i + 1}")
        i = j + 1
    body = "*".join(parts)
    if coeff == 1:
        return body
    if coeff == -1:
        return "-" + body
    return _const_text(coeff) + "*" + body


def to_text(t: Term) -> str:
    """Render a term in the concrete grammar accepted by :func:`parse_term`."""
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Const):
        return _const_text(t.value)
    if isinstance(t, App):
        return t.symbol + "(" + ", ".join(to_text(a) for a in t.args) + ")"
    if isinstance(t, Mul):
        return _product_text(t.args)
    out = ""
    for i, a in enumerate(t.args):
        s = to_text(a) if not isinstance(a, Add) else "(" + to_text(a) + ")"
        if i == 0:
            out = s
        elif s.startswith("-"):
            out += " - " + s[1:]
        else:
            out += " + " + s
    return out or "0"


# ---------------------------------------------------------------------------
# parsing

class ParseError(ValueError):
    """Syntax error carrying a 0-based character offset into the source text."""

    def __init__(self, message: str, pos: int, text: str = ""):
        self.pos = pos
        self.text = text
        line = text.count("\n", 0, pos) + 1
        col = pos - (text.rfind("\n", 0, pos) + 1) + 1
        self.line, self.column = line, col
        super().__init__(f"{message} at line {line}, column {col}")


_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>\d+(?:\.\d*)?)
  | (?P<ident>[^\W\d]\w*'?)
  | (?P<op>:=|->|<->|<=|>=|!=|\+\+|[-+*/^(),=<>!&|;?{}\[\]])
""", re.VERBOSE | re.UNICODE)


@dataclass
class Token:
    kind: str
    text: str
    pos: int


def tokenize(text: str) -> list:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        if kind == "num" and "." in m.group():
            raise ParseError("decimal literals are not allowed; write a fraction such as 9/2",
                             pos, text)
        if kind != "ws":
            tokens.append(Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(Token("eof", "", len(text)))
    return tokens


class TermParser:
    """Recursive-descent parser for terms; :mod:`odeinv.formula` extends it."""

    def __init__(self, text: str, registry: Registry | None = None):
        self.text = text
        self.registry = registry or DEFAULT_REGISTRY
        self.tokens = tokenize(text)
        self.i = 0

    # token plumbing
    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def at(self, *texts) -> bool:
        return self.tok.text in texts and self.tok.kind == "op"

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}")
        return self.advance()

    def error(self, message: str, pos: int | None = None):
        found = self.tok.text or "end of input"
        raise ParseError(f"{message}, found {found!r}", self.tok.pos if pos is None else pos,
                         self.text)

    def finish(self):
        if self.tok.kind != "eof":
            self.error("unexpected trailing input")

    # grammar
    def term(self) -> Term:
        parts = [self.product()]
        while self.at("+", "-"):
            op = self.advance().text
            rhs = self.product()
            parts.append(rhs if op == "+" else Mul((Const(Fraction(-1)), rhs)))
        return parts[0] if len(parts) == 1 else Add(tuple(parts))

    def product(self) -> Term:
        factors = [self.unary()]
        while self.at("*", "/"):
            op = self.advance()
            rhs = self.unary()
            if op.text == "*":
                factors.append(rhs)
                continue
            if not is_polynomial(rhs) or free_vars(rhs):
                raise ParseError("division is only allowed by a constant", op.pos, self.text)
            d = expand(rhs).get((), Fraction(0))
            if not d:
                raise ParseError("division by zero", op.pos, self.text)
            factors.append(Const(1 / d))
        if len(factors) == 1:
            return factors[0]
        # fold a leading literal ratio like 9/2 into one constant
        if all(isinstance(f, Const) for f in factors):
            v = Fraction(1)
            for f in factors:
                v *= f.value
            return Const(v)
        return Mul(tuple(factors))

    def unary(self) -> Term:
        if self.at("-"):
            self.advance()
            inner = self.unary()
            if isinstance(inner, Const):
                return Const(-inner.value)
            return Mul((Const(Fraction(-1)), inner))
        if self.at("+"):
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Term:
        base = self.primary()
        if self.at("^"):
            self.advance()
            tok = self.tok
            if tok.kind != "num":
                self.error("exponent must be a natural number literal")
            self.advance()
            n = int(tok.text)
            if n == 0:
                return ONE
            return base if n == 1 else Mul((base,) * n)
        return base

    def primary(self) -> Term:
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return Const(Fraction(int(tok.text)))
        if tok.kind == "ident":
            self.advance()
            if tok.text.endswith("'"):
                self.error("differential symbols are not terms", tok.pos)
            if self.at("("):
                if tok.text not in self.registry:
                    raise ParseError(f"unknown function symbol {tok.text!r}", tok.pos, self.text)
                sym = self.registry[tok.text]
                self.advance()
                args = [self.term()]
                while self.at(","):
                    self.advance()
                    args.append(self.term())
                self.expect(")")
                if len(args) != sym.arity:
                    raise ParseError(f"{sym.name} expects {sym.arity} argument(s)", tok.pos,
                                     self.text)
                return App(sym.name, tuple(args))
            return Var(tok.text)
        if self.at("("):
            self.advance()
            inner = self.term()
            self.expect(")")
            return inner
        self.error("expected a term")


def parse_term(text: str, registry: Registry | None = None) -> Term:
    """Parse the concrete term grammar.

    Subtraction and natural powers desugar to sums and products; decimal
    literals are rejected so every constant stays an exact rational.
    """
    p = TermParser(text, registry)
    t = p.term()
    p.finish()
    return t


TermLike = Union[Term, str, int, Fraction]


def evaluate(t: Term, env: Mapping[str, object], functions: Mapping | None = None):
    """Evaluate ``t`` with variable values from ``env``.

    Values may be any ring-like numbers (Fractions, floats, intervals).
    Applications need an implementation in ``functions``; without one a
    :class:`KeyError` is raised, so exact evaluation of transcendental terms
    never silently falls back to floating point.
    """
    if isinstance(t, Const):
        return t.value
    if isinstance(t, Var):
        return env[t.name]
    if isinstance(t, Add):
        vals = [evaluate(a, env, functions) for a in t.args]
        total = vals[0] if vals else Fraction(0)
        for v in vals[1:]:
            total = total + v
        return total
    if isinstance(t, Mul):
        vals = [evaluate(a, env, functions) for a in t.args]
        prod = vals[0] if vals else Fraction(1)
        for v in vals[1:]:
            prod = prod * v
        return prod
    if functions is None or t.symbol not in functions:
        raise KeyError(f"no numeric implementation for {t.symbol!r}")
    return functions[t.symbol](*[evaluate(a, env, functions) for a in t.args])


@lru_cache(maxsize=1 << 14)
def neg(t: Term) -> Term:
    """Normalized negation ``-t``."""
    return from_monomials({m: -c for m, c in _expand(t).items()})
