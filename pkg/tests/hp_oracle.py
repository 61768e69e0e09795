"""Brute-force execution semantics of analytic hybrid programs over x, y.

ODEs are linear with constant coefficients; their flows are matrix
exponentials computed once with ``mpmath.expm`` and applied at a fixed set of
times.  Loops are unrolled a bounded number of times.
"""
import random
from fractions import Fraction

import mpmath

from odeinv.expr import Const, Var, evaluate, normalize, parse_term
from odeinv.lie import ODESystem
from odeinv.transform import Assign, Choice, Evolve, Loop, Seq, Test

STATE = ("x", "y")
TIMES = (Fraction(0), Fraction(37, 100), Fraction(113, 100))
ZERO_TOL = 1e-6
MAX_STATES = 5000
DPS = 40

LINEAR = [
    ((0, 1), (-1, 0)),
    ((0, 1), (0, 0)),
    ((1, 0), (0, -1)),
    ((0, 0), (1, 0)),
    ((-1, 1), (0, -1)),
]
ASSIGN_TERMS = ["x + 1", "y - x", "2*x", "x*y", "x^2 - 1", "-y", "y + 1/2", "0"]
GUARDS = ["x", "y", "x - y", "x*y - 1", "x + 1"]
POSTS = ["x", "y", "x - y", "x + y - 1", "x*y", "x^2 - y"]


class TooManyStates(RuntimeError):
    pass


def _flows(matrix):
    with mpmath.workdps(DPS):
        A = mpmath.matrix([[mpmath.mpf(c) for c in row] for row in matrix])
        return [mpmath.expm(A * mpmath.mpf(t.numerator) / t.denominator) for t in TIMES]


_FLOWS = {}


def _ode(matrix) -> ODESystem:
    rhs = []
    for row in matrix:
        t = Const(Fraction(0))
        for c, v in zip(row, STATE):
            t = t + Const(Fraction(c)) * Var(v)
        rhs.append(normalize(t))
    ode = ODESystem(STATE, tuple(rhs))
    if ode not in _FLOWS:
        _FLOWS[ode] = _flows(matrix)
    return ode


def _value(t, state):
    with mpmath.workdps(DPS):
        return evaluate(t, state)


def reachable(a, state, unroll=5):
    """Final states of ``a`` from ``state``, with repeats."""
    if isinstance(a, Assign):
        s = dict(state)
        s[a.var] = _value(a.value, state)
        out = [s]
    elif isinstance(a, Test):
        out = [] if abs(_value(a.guard, state)) <= ZERO_TOL else [state]
    elif isinstance(a, Evolve):
        x, y = state["x"], state["y"]
        with mpmath.workdps(DPS):
            out = [{"x": F[0, 0] * x + F[0, 1] * y, "y": F[1, 0] * x + F[1, 1] * y}
                   for F in _FLOWS[a.ode]]
    elif isinstance(a, Choice):
        out = reachable(a.left, state, unroll) + reachable(a.right, state, unroll)
    elif isinstance(a, Seq):
        out = []
        for s in reachable(a.first, state, unroll):
            out += reachable(a.second, s, unroll)
            if len(out) > MAX_STATES:
                raise TooManyStates(len(out))
    elif isinstance(a, Loop):
        frontier, out = [state], [state]
        for _ in range(unroll):
            nxt = []
            for s in frontier:
                nxt += reachable(a.body, s, unroll)
            out += nxt
            frontier = nxt
            if not frontier or len(out) > MAX_STATES:
                break
    else:
        raise TypeError(a)
    if len(out) > MAX_STATES:
        raise TooManyStates(len(out))
    return out


def box_holds(a, e, state, unroll=5) -> bool:
    """``[a](e = 0)`` by exhaustive bounded execution."""
    with mpmath.workdps(DPS):
        start = {k: mpmath.mpf(v.numerator) / v.denominator for k, v in state.items()}
    return all(abs(_value(e, s)) <= ZERO_TOL for s in reachable(a, start, unroll))


def random_program(rng: random.Random, depth: int = 3):
    """Program of nesting depth at most ``depth``; loops are never directly nested."""
    if depth <= 1 or rng.random() < 0.3:
        kind = rng.choice(["assign", "assign", "test", "ode", "ode"])
        if kind == "assign":
            return Assign(rng.choice(STATE), normalize(parse_term(rng.choice(ASSIGN_TERMS))))
        if kind == "test":
            return Test(normalize(parse_term(rng.choice(GUARDS))))
        return Evolve(_ode(rng.choice(LINEAR)))
    kind = rng.choice(["seq", "seq", "choice", "loop"])
    if kind == "loop":
        body = random_program(rng, depth - 1)
        return body if isinstance(body, Loop) else Loop(body)
    a, b = random_program(rng, depth - 1), random_program(rng, depth - 1)
    return Seq(a, b) if kind == "seq" else Choice(a, b)


def random_post(rng: random.Random):
    return normalize(parse_term(rng.choice(POSTS)))


def depth(a) -> int:
    if isinstance(a, Choice):
        return 1 + max(depth(a.left), depth(a.right))
    if isinstance(a, Seq):
        return 1 + max(depth(a.first), depth(a.second))
    if isinstance(a, Loop):
        return 1 + depth(a.body)
    return 1
