"""Arithmetic backend: interval evaluation, proving, refutation, SMT export, simulation."""
from .decide import Decision, SamplerConfig, certify_refutation, decide, evaluate_at, refute
from .interval import Interval, eval_interval, interval_sign
from .prove import (PsatzWitness, SturmWitness, TrivialWitness, check_infeasibility,
                    find_infeasibility)
from .simulate import Trajectory, simulate
from .smtlib import export_smtlib, fingerprint, run_solver, solver_available
from .sturm import isolate_roots, sturm_sequence, univariate_feasible

__all__ = [
    "Decision", "SamplerConfig", "decide", "refute", "certify_refutation", "evaluate_at",
    "Interval", "eval_interval", "interval_sign",
    "PsatzWitness", "SturmWitness", "TrivialWitness", "check_infeasibility", "find_infeasibility",
    "Trajectory", "simulate", "export_smtlib", "fingerprint", "run_solver", "solver_available",
    "isolate_roots", "sturm_sequence", "univariate_feasible",
]
