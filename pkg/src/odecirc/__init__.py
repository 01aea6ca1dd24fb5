"""Discrete-ODE function algebras, their evaluators, and circuit compilation."""
from .circuit import BitVector, Circuit, Gate, decode, encode, simulate, validate_normal_form
from .compiler import compile_term, depth_profile
from .dsl import parse_dsl
from .errors import OdeCircError
from .estimators import CircuitCompiler, TermEvaluator
from .evaluator import Evaluator, StepEvaluator, evaluate, step_oracle
from .modes import CheckedTerm, diagnose, get_mode, specialize, validate
from .stdlib import REGISTRY, default_oracles

__all__ = [
    "BitVector", "Circuit", "Gate", "decode", "encode", "simulate", "validate_normal_form",
    "compile_term", "depth_profile", "parse_dsl", "OdeCircError", "CircuitCompiler",
    "TermEvaluator", "Evaluator", "StepEvaluator", "evaluate", "step_oracle", "CheckedTerm",
    "diagnose", "get_mode", "specialize", "validate", "REGISTRY", "default_oracles",
]
