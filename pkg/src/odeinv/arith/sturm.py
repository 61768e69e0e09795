"""Univariate real root isolation and exact feasibility via Sturm sequences.

Polynomials are dense coefficient lists over :class:`~fractions.Fraction`,
lowest degree first.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

__all__ = ["upoly_eval", "sturm_sequence", "count_roots", "isolate_roots",
           "squarefree", "upoly_gcd", "univariate_feasible", "rational_roots"]


def _trim(p: list) -> list:
    p = list(p)
    while p and p[-1] == 0:
        p.pop()
    return p


def upoly_eval(p: Sequence[Fraction], x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(p):
        acc = acc * x + c
    return acc


def _deriv(p: list) -> list:
    return _trim([i * c for i, c in enumerate(p)][1:])


def _divmod(a: list, b: list) -> tuple:
    a = _trim(a)
    b = _trim(b)
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    q = [Fraction(0)] * max(1, len(a) - len(b) + 1)
    r = list(a)
    while len(r) >= len(b) and r:
        k = len(r) - len(b)
        c = r[-1] / b[-1]
        q[k] = c
        for i, bc in enumerate(b):
            r[i + k] -= c * bc
        r = _trim(r)
    return _trim(q), r


def upoly_gcd(a: list, b: list) -> list:
    a, b = _trim(a), _trim(b)
    while b:
        a, b = b, _divmod(a, b)[1]
    if not a:
        return a
    lc = a[-1]
    return [c / lc for c in a]


def squarefree(p: list) -> list:
    p = _trim(p)
    if len(p) <= 1:
        return p
    g = upoly_gcd(p, _deriv(p))
    q = _divmod(p, g)[0]
    lc = q[-1]
    return [c / lc for c in q]


def sturm_sequence(p: list) -> list:
    seq = [_trim(p), _deriv(p)]
    while seq[-1]:
        r = _divmod(seq[-2], seq[-1])[1]
        if not r:
            break
        seq.append([-c for c in r])
    return [s for s in seq if s]


def _sign_changes(seq: list, x: Fraction) -> int:
    signs = [s for s in ((upoly_eval(p, x) > 0) - (upoly_eval(p, x) < 0) for p in seq) if s]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def count_roots(seq: list, a: Fraction, b: Fraction) -> int:
    """Distinct real roots of seq[0] in (a, b], for a < b."""
    return _sign_changes(seq, a) - _sign_changes(seq, b)


def _cauchy_bound(p: list) -> Fraction:
    lc = abs(p[-1])
    return 1 + max((abs(c) / lc for c in p[:-1]), default=Fraction(0))


def isolate_roots(p: list) -> list:
    """Disjoint rational intervals (a, b), each containing exactly one real root.

    Endpoints are never roots, so sign tests at endpoints are meaningful.
    """
    p = squarefree(p)
    if len(p) <= 1:
        return []
    seq = sturm_sequence(p)
    bound = _cauchy_bound(p) + 1
    out = []
    work = [(-bound, bound)]
    while work:
        a, b = work.pop()
        n = count_roots(seq, a, b)
        if n == 0:
            continue
        if n == 1:
            out.append((a, b))
            continue
        m = (a + b) / 2
        k = 1
        while upoly_eval(p, m) == 0:
            m = a + (b - a) * Fraction(2 ** k + 1, 2 ** (k + 1))
            k += 1
        work.append((m, b))
        work.append((a, m))
    return sorted(out)


def rational_roots(p: list, max_coeff: int = 10**8) -> list:
    """Rational roots by the rational root theorem (skipped for huge coefficients)."""
    import math
    p = _trim(p)
    if len(p) <= 1:
        return []
    den = 1
    for c in p:
        den = den * c.denominator // math.gcd(den, c.denominator)
    ints = [int(c * den) for c in p]
    roots = []
    if ints[0] == 0:
        roots.append(Fraction(0))
        while ints and ints[0] == 0:
            ints.pop(0)
    if len(ints) <= 1:
        return roots
    a0, an = abs(ints[0]), abs(ints[-1])
    if a0 > max_coeff or an > max_coeff:
        return roots
    ps = _divisors(a0)
    qs = _divisors(an)
    seen = set(roots)
    for num in ps:
        for d in qs:
            for s in (1, -1):
                r = Fraction(s * num, d)
                if r not in seen and upoly_eval([Fraction(c) for c in ints], r) == 0:
                    seen.add(r)
                    roots.append(r)
    return sorted(roots)


def _divisors(n: int) -> list:
    out = []
    i = 1
    while i * i <= n:
        if n % i == 0:
            out.append(i)
            if i != n // i:
                out.append(n // i)
        i += 1
    return sorted(out)


def _sign(x: Fraction) -> int:
    return (x > 0) - (x < 0)


def univariate_feasible(constraints: Sequence[tuple]):
    """Decide ``∃x. ⋀ p_j(x) rel_j 0`` exactly, rel in {">=", ">"}.

    Returns ``(False, None)`` when infeasible, ``(True, point)`` with a rational
    witness, or ``(True, None)`` when the only solutions are irrational roots.
    """
    polys = [(_trim(p), rel) for p, rel in constraints]
    for p, rel in polys:
        if len(p) <= 1:
            c = p[0] if p else Fraction(0)
            if c < 0 or (rel == ">" and c == 0):
                return False, None
    live = [(p, rel) for p, rel in polys if len(p) > 1]
    if not live:
        return True, Fraction(0)
    prod = [Fraction(1)]
    for p, _ in live:
        prod = _mul(prod, p)
    boxes = isolate_roots(prod)

    def ok_at(x):
        for p, rel in live:
            v = upoly_eval(p, x)
            if v < 0 or (rel == ">" and v == 0):
                return False
        return True

    # sample points strictly between consecutive roots (and beyond the extremes)
    samples = []
    if not boxes:
        samples.append(Fraction(0))
    for a, b in boxes:
        samples.extend([a, b])
    for x in samples:
        if ok_at(x):
            return True, x
    # the roots themselves
    sf = squarefree(prod)
    for a, b in boxes:
        ok = True
        for p, rel in live:
            g = upoly_gcd(p, sf)
            zero = len(g) > 1 and count_roots(sturm_sequence(g), a, b) > 0
            if zero:
                if rel == ">":
                    ok = False
                    break
                continue
            if upoly_eval(p, a) < 0:
                ok = False
                break
        if ok:
            rr = [r for p, _ in live for r in rational_roots(p) if a < r < b]
            return True, (rr[0] if rr else None)
    return False, None


def _mul(a: list, b: list) -> list:
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out
