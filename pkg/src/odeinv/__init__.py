"""Invariance checking for ODEs whose right-hand sides are Noetherian functions.

The package decides whether a semianalytic set is invariant along an ODE by
reducing the question to arithmetic verification conditions, discharges
them with exact and interval-certified methods, and emits certificates that
a search-free checker replays.
"""
__version__ = "0.1.0"

from .expr import Term, Var, Const, App, parse_term, normalize, to_text, partial_derivative
from .formula import Formula, Atom, parse_formula, formula_text, to_dnf
from .lie import ODESystem, CertificateCache, RankCertificate, lie_derivative, rank_certificate
from .invariance import (CheckConfig, Invariant, NotInvariant, Undetermined, check_invariance,
                         synthesize_cofactor, check_darboux_eq)
from .proofcert import serialize, deserialize, check_certificate
from .transform import polynomialize, parse_program, hp_reduce
from .problem import load_problem, parse_problem

__all__ = [
    "__version__", "Term", "Var", "Const", "App", "parse_term", "normalize", "to_text",
    "partial_derivative", "Formula", "Atom", "parse_formula", "formula_text", "to_dnf",
    "ODESystem", "CertificateCache", "RankCertificate", "lie_derivative", "rank_certificate",
    "CheckConfig", "Invariant", "NotInvariant", "Undetermined", "check_invariance",
    "synthesize_cofactor", "check_darboux_eq", "serialize", "deserialize", "check_certificate",
    "polynomialize", "parse_program", "hp_reduce", "load_problem", "parse_problem",
]
