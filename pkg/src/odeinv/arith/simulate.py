"""Fixed-step RK4 integration, used only as a test oracle.

The right-hand side is compiled once into a Python function over the
expanded monomials.  Each step is also taken as two half steps; the
difference (scaled by 1/15, Richardson) is the local error estimate recorded
for that step, and the half-step result is kept.  When the estimate exceeds
``tolerance`` the trajectory is truncated with a warning.

Arithmetic is binary floating point by default.  Passing ``precision`` (in
bits) switches to :mod:`mpmath` multiprecision floats.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from ..expr import App, Term, Var, expand, term_key
from ..lie import ODESystem

__all__ = ["Trajectory", "simulate", "compile_rhs", "compile_term", "SimulationWarning"]


class SimulationWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution: ``times[k]`` and ``states[k]`` (tuple in ``variables`` order)."""

    variables: tuple
    times: tuple
    states: tuple
    errors: tuple
    truncated: bool = False

    def at(self, k: int) -> dict:
        return dict(zip(self.variables, self.states[k]))

    @property
    def final(self) -> dict:
        return self.at(len(self.states) - 1)

    def to_csv(self) -> str:
        lines = ["t," + ",".join(self.variables) + ",error"]
        for t, s, e in zip(self.times, self.states, (0.0,) + self.errors):
            lines.append(",".join(repr(float(x)) for x in (t, *s, e)))
        return "\n".join(lines) + "\n"


def _num(x, mp):
    if hasattr(x, "mid"):  # interval
        x = x.mid
    if mp is not None:
        if isinstance(x, Fraction):
            return mp.mpf(x.numerator) / x.denominator
        return mp.mpf(x)
    return float(x)


def _source(t: Term, names: dict, consts: list) -> str:
    poly = expand(t)
    if not poly:
        return "0"
    parts = []
    for mono, c in sorted(poly.items(), key=lambda mc: [(term_key(a), e) for a, e in mc[0]]):
        consts.append(c)
        factors = [f"k[{len(consts) - 1}]"]
        for atom, e in mono:
            if isinstance(atom, Var):
                base = names[atom.name]
            elif isinstance(atom, App):
                args = ", ".join(_source(a, names, consts) for a in atom.args)
                base = f"F_{atom.symbol}({args})"
            else:
                base = f"({_source(atom, names, consts)})"
            factors.append(base if e == 1 else f"{base}**{e}")
        parts.append("*".join(factors))
    return " + ".join(parts)


def _namespace(mp):
    if mp is not None:
        return {"F_exp": mp.exp, "F_sin": mp.sin, "F_cos": mp.cos}
    return {"F_exp": math.exp, "F_sin": math.sin, "F_cos": math.cos}


def compile_rhs(ode: ODESystem, params: Mapping, mp=None):
    """``f(s) -> list`` evaluating the vector field at state tuple ``s``."""
    names = {x: f"s[{i}]" for i, x in enumerate(ode.states)}
    names.update({p: f"p[{p!r}]" for p in ode.parameters})
    consts: list = []
    body = ", ".join(_source(f, names, consts) for f in ode.rhs)
    ns = _namespace(mp)
    ns["k"] = [_num(c, mp) for c in consts]
    ns["p"] = {p: _num(params[p], mp) for p in ode.parameters}
    exec(f"def _f(s):\n    return [{body}]\n", ns)
    return ns["_f"]


def compile_term(t: Term, variables, mp=None):
    """``g(s)`` evaluating ``t`` with ``s`` ordered as ``variables``."""
    names = {x: f"s[{i}]" for i, x in enumerate(variables)}
    consts: list = []
    body = _source(t, names, consts)
    ns = _namespace(mp)
    ns["k"] = [_num(c, mp) for c in consts]
    exec(f"def _g(s):\n    return {body}\n", ns)
    return ns["_g"]


def _rk4(f, s, h):
    k1 = f(s)
    k2 = f([a + h / 2 * b for a, b in zip(s, k1)])
    k3 = f([a + h / 2 * b for a, b in zip(s, k2)])
    k4 = f([a + h * b for a, b in zip(s, k3)])
    return [a + h / 6 * (b1 + 2 * b2 + 2 * b3 + b4) for a, b1, b2, b3, b4 in zip(s, k1, k2, k3, k4)]


def simulate(ode: ODESystem, init: Mapping, horizon, step, tolerance: float = 1e-6,
             precision: int | None = None, record_every: int = 1) -> Trajectory:
    """Integrate ``ode`` from ``init`` (states and parameters) over ``[0, horizon]``."""
    if step <= 0:
        raise ValueError("step must be positive")
    if precision is not None:
        import mpmath
        with mpmath.workprec(precision):
            return _integrate(ode, init, horizon, step, tolerance, mpmath.mp, record_every)
    return _integrate(ode, init, horizon, step, tolerance, None, record_every)


def _integrate(ode, init, horizon, step, tolerance, mp, record_every) -> Trajectory:
    missing = [x for x in ode.states + ode.parameters if x not in init]
    if missing:
        raise ValueError(f"initial point misses {missing}")
    f = compile_rhs(ode, init, mp)
    h = _num(step, mp)
    n = max(1, int(math.ceil(float(horizon) / float(step) - 1e-12)))
    s = [_num(init[x], mp) for x in ode.states]
    times, states, errors = [_num(0, mp)], [tuple(s)], []
    truncated = False
    t = _num(0, mp)
    for k in range(n):
        full = _rk4(f, s, h)
        half = _rk4(f, _rk4(f, s, h / 2), h / 2)
        err = max((abs(a - b) for a, b in zip(full, half)), default=0) / 15
        s = half
        t = t + h
        if not all(math.isfinite(float(x)) for x in s) or err > tolerance:
            truncated = True
            warnings.warn(f"simulation truncated at t={float(t):.6g}: local error estimate "
                          f"{float(err):.3g} exceeds {tolerance:g}", SimulationWarning, stacklevel=2)
            break
        if (k + 1) % record_every == 0 or k == n - 1:
            times.append(t)
            states.append(tuple(s))
            errors.append(err)
    return Trajectory(tuple(ode.states), tuple(times), tuple(states), tuple(errors), truncated)
