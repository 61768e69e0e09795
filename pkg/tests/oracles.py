"""Independent reference implementations used by the tests (sympy, mpmath)."""
from fractions import Fraction

import mpmath
import sympy

from odeinv.expr import to_text


def to_sympy(t):
    return sympy.sympify(to_text(t).replace("^", "**"), rational=True)


def sympy_equal(a, b) -> bool:
    return sympy.expand(to_sympy(a) - to_sympy(b)) == 0


def sympy_value(t, point: dict):
    """High-precision value of a term at a rational point."""
    expr = to_sympy(t)
    subs = {sympy.Symbol(k): sympy.Rational(v.numerator, v.denominator) for k, v in point.items()}
    return expr.subs(subs)


def mp_value(t, point: dict, dps: int = 50):
    with mpmath.workdps(dps):
        env = {k: mpmath.mpf(v.numerator) / v.denominator for k, v in point.items()}
        f = sympy.lambdify(sorted(env), to_sympy(t), modules="mpmath")
        return f(*[env[k] for k in sorted(env)])


def lie_sympy(e, ode):
    """Σ ∂e/∂x_i · f_i computed by sympy."""
    expr = to_sympy(e)
    total = 0
    for x, f in zip(ode.states, ode.rhs):
        total += sympy.diff(expr, sympy.Symbol(x)) * to_sympy(f)
    return sympy.expand(total)


def as_fraction(v) -> Fraction:
    v = sympy.nsimplify(v, rational=True) if not isinstance(v, sympy.Rational) else v
    return Fraction(int(v.p), int(v.q))
