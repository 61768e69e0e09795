"""Rigorous interval arithmetic with rational endpoints.

Endpoints are exact :class:`~fractions.Fraction` values.  Operations on
degenerate intervals (points) stay exact, so polynomial terms at rational
points evaluate without any widening.  Non-degenerate results are rounded
outward to dyadic rationals with ``prec`` fractional bits to keep
denominators bounded.

``exp``, ``sin`` and ``cos`` are enclosed with truncated Taylor series and
explicit remainder bounds; ``pi`` comes from Machin's formula.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Mapping

from ..expr import Term, evaluate

__all__ = ["Interval", "eval_interval", "interval_sign", "pi_enclosure",
           "exp_interval", "sin_interval", "cos_interval", "DEFAULT_PRECISION",
           "MAX_PRECISION"]

DEFAULT_PRECISION = 64
MAX_PRECISION = 4096


def _floor_dyadic(q: Fraction, prec: int) -> Fraction:
    scale = 1 << prec
    return Fraction(math.floor(q * scale), scale)


def _ceil_dyadic(q: Fraction, prec: int) -> Fraction:
    scale = 1 << prec
    return Fraction(math.ceil(q * scale), scale)


class Interval:
    """Closed interval ``[lo, hi]`` carrying the working precision for rounding."""

    __slots__ = ("lo", "hi", "prec")

    def __init__(self, lo, hi=None, prec: int = DEFAULT_PRECISION):
        lo = Fraction(lo)
        hi = lo if hi is None else Fraction(hi)
        if lo > hi:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        self.lo, self.hi, self.prec = lo, hi, prec

    @classmethod
    def point(cls, q, prec: int = DEFAULT_PRECISION) -> "Interval":
        return cls(q, q, prec)

    def _make(self, lo, hi) -> "Interval":
        if lo != hi:
            lo, hi = _floor_dyadic(lo, self.prec), _ceil_dyadic(hi, self.prec)
        return Interval(lo, hi, self.prec)

    def _coerce(self, other) -> "Interval":
        if isinstance(other, Interval):
            return other
        return Interval(other, other, self.prec)

    # arithmetic
    def __add__(self, other):
        o = self._coerce(other)
        return self._make(self.lo + o.lo, self.hi + o.hi)

    __radd__ = __add__

    def __neg__(self):
        return Interval(-self.hi, -self.lo, self.prec)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        if self.is_point() and o.is_point():
            return Interval(self.lo * o.lo, None, self.prec)
        ps = (self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi)
        return self._make(min(ps), max(ps))

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative interval power")
        if n == 0:
            return Interval(1, 1, self.prec)
        if self.is_point():
            return Interval(self.lo ** n, None, self.prec)
        a, b = self.lo ** n, self.hi ** n
        if n % 2 == 0 and self.lo <= 0 <= self.hi:
            return self._make(Fraction(0), max(a, b))
        return self._make(min(a, b), max(a, b))

    # queries
    def is_point(self) -> bool:
        return self.lo == self.hi

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    @property
    def rad(self) -> Fraction:
        return (self.hi - self.lo) / 2

    def __contains__(self, x) -> bool:
        return self.lo <= Fraction(x) <= self.hi

    def sign(self):
        """-1, 0 or 1 when certain, else ``None``."""
        if self.lo > 0:
            return 1
        if self.hi < 0:
            return -1
        if self.lo == self.hi == 0:
            return 0
        return None

    def hull(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi), self.prec)

    def __repr__(self):
        return f"Interval({self.lo}, {self.hi})"

    def __str__(self):
        if self.is_point():
            return f"[{self.lo}]"
        return f"[{float(self.lo):.17g}, {float(self.hi):.17g}]"


# ---------------------------------------------------------------------------
# elementary functions at rational points

def _atan_inv(n: int, prec: int) -> tuple:
    """Enclosure of atan(1/n) for integer n >= 2 by the alternating series."""
    x = Fraction(1, n)
    total = Fraction(0)
    term = x
    k = 0
    eps = Fraction(1, 1 << (prec + 4))
    while True:
        t = term / (2 * k + 1)
        if t < eps:
            # alternating with decreasing terms: next term bounds the error
            return total - t, total + t
        total += t if k % 2 == 0 else -t
        term *= x * x
        k += 1


@lru_cache(maxsize=32)
def pi_enclosure(prec: int) -> tuple:
    """Rational (lo, hi) with lo < pi < hi and hi - lo < 2^-prec."""
    a_lo, a_hi = _atan_inv(5, prec + 6)
    b_lo, b_hi = _atan_inv(239, prec + 6)
    lo = 16 * a_lo - 4 * b_hi
    hi = 16 * a_hi - 4 * b_lo
    return _floor_dyadic(lo, prec + 2), _ceil_dyadic(hi, prec + 2)


def _exp_small(r: Fraction, prec: int) -> tuple:
    """exp(r) for |r| <= 1/2: partial sum with tail bound 2|r|^M/M!."""
    total = Fraction(0)
    term = Fraction(1)
    n = 0
    eps = Fraction(1, 1 << prec)
    ar = abs(r)
    while True:
        total += term
        n += 1
        term = term * r / n
        bound = 2 * abs(term)
        if bound < eps or ar == 0:
            if ar == 0:
                return total, total
            return (_floor_dyadic(total - bound, prec + 4), _ceil_dyadic(total + bound, prec + 4))


def _exp_point(q: Fraction, prec: int) -> tuple:
    if q == 0:
        return Fraction(1), Fraction(1)
    k = 0
    r = q
    while abs(r) > Fraction(1, 2):
        r /= 2
        k += 1
    mag = max(1, math.ceil(abs(float(q)) * 1.4427)) + 2  # bits of exp(|q|)
    work = prec + k + mag + 8
    lo, hi = _exp_small(r, work)
    lo = max(lo, Fraction(1, 1 << work))
    for _ in range(k):
        lo, hi = _floor_dyadic(lo * lo, work), _ceil_dyadic(hi * hi, work)
    return _floor_dyadic(lo, prec), _ceil_dyadic(hi, prec)


def _sincos_taylor(m: Fraction, prec: int, which: str) -> tuple:
    """sin or cos at rational m with |m| <= 1 via Taylor plus Lagrange remainder."""
    start = 1 if which == "sin" else 0
    total = Fraction(0)
    term = m if start else Fraction(1)
    n = start
    eps = Fraction(1, 1 << prec)
    sign = 1
    while True:
        total += sign * term
        nxt = term * m * m / ((n + 1) * (n + 2))
        n += 2
        sign = -sign
        if abs(nxt) < eps or m == 0:
            if m == 0:
                return total, total
            b = abs(nxt)
            return _floor_dyadic(total - b, prec + 2), _ceil_dyadic(total + b, prec + 2)
        term = nxt


def _sincos_point(q: Fraction, prec: int, which: str) -> tuple:
    if q == 0:
        return (Fraction(0),) * 2 if which == "sin" else (Fraction(1),) * 2
    mag = max(0, math.ceil(math.log2(abs(float(q)) + 1)))
    work = prec + mag + 8
    p_lo, p_hi = pi_enclosure(work)
    half_pi = (p_lo + p_hi) / 4
    k = math.floor(q / half_pi + Fraction(1, 2))
    # r = q - k*pi/2 as an enclosure
    if k >= 0:
        r_lo, r_hi = q - k * p_hi / 2, q - k * p_lo / 2
    else:
        r_lo, r_hi = q - k * p_lo / 2, q - k * p_hi / 2
    m = (r_lo + r_hi) / 2
    rad = (r_hi - r_lo) / 2
    quadrant = k % 4
    use = {("sin", 0): ("sin", 1), ("sin", 1): ("cos", 1), ("sin", 2): ("sin", -1),
           ("sin", 3): ("cos", -1), ("cos", 0): ("cos", 1), ("cos", 1): ("sin", -1),
           ("cos", 2): ("cos", -1), ("cos", 3): ("sin", 1)}[(which, quadrant)]
    lo, hi = _sincos_taylor(m, work, use[0])
    lo, hi = lo - rad, hi + rad  # sin and cos are 1-Lipschitz
    if use[1] < 0:
        lo, hi = -hi, -lo
    return (max(Fraction(-1), _floor_dyadic(lo, prec)), min(Fraction(1), _ceil_dyadic(hi, prec)))


def _as_interval(x, prec: int) -> Interval:
    if isinstance(x, Interval):
        return x
    return Interval(x, x, prec)


def exp_interval(x, prec: int = DEFAULT_PRECISION) -> Interval:
    x = _as_interval(x, prec)
    if x.is_point():
        lo, hi = _exp_point(x.lo, prec)
    else:
        lo, hi = _exp_point(x.lo, prec)[0], _exp_point(x.hi, prec)[1]
    return Interval(lo, hi, prec)


def _trig(x, prec: int, which: str) -> Interval:
    x = _as_interval(x, prec)
    lo, hi = _sincos_point(x.mid, prec, which)
    if not x.is_point():
        lo, hi = max(Fraction(-1), lo - x.rad), min(Fraction(1), hi + x.rad)
        lo, hi = _floor_dyadic(lo, prec), _ceil_dyadic(hi, prec)
    return Interval(lo, hi, prec)


def sin_interval(x, prec: int = DEFAULT_PRECISION) -> Interval:
    return _trig(x, prec, "sin")


def cos_interval(x, prec: int = DEFAULT_PRECISION) -> Interval:
    return _trig(x, prec, "cos")


def interval_functions(prec: int) -> dict:
    return {
        "exp": lambda a: exp_interval(a, prec),
        "sin": lambda a: sin_interval(a, prec),
        "cos": lambda a: cos_interval(a, prec),
    }


def eval_interval(t: Term, point: Mapping, precision: int = DEFAULT_PRECISION) -> Interval:
    """Enclosure of the value of ``t`` at ``point`` (rationals or intervals)."""
    if precision < 8:
        raise ValueError("precision must be at least 8 bits")
    env = {k: _as_interval(v, precision) for k, v in point.items()}
    v = evaluate(t, env, interval_functions(precision))
    return _as_interval(v, precision)


def interval_sign(t: Term, point: Mapping, precision: int = DEFAULT_PRECISION,
                  max_precision: int = MAX_PRECISION):
    """Certified sign of ``t`` at ``point``, doubling precision until decided.

    Returns ``None`` when the enclosure still straddles zero at ``max_precision``.
    """
    p = precision
    while True:
        s = eval_interval(t, point, p).sign()
        if s is not None or p >= max_precision:
            return s
        p *= 2
