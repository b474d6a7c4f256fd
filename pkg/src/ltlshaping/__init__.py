"""Co-safe LTL task automata, progression-based reward shaping and tabular RL."""

__version__ = "0.1.0"

from .dfa import Dfa, DfaAnalysis, analyze, compile_formula, fixture_dfa, minimize
from .ltl import parse, progress, simplify
from .metrics import distances, partition, progression, update_distances
from .rewards import RewardContext, RewardKind, advance_round, make_context, reward

__all__ = [
    "Dfa",
    "DfaAnalysis",
    "RewardContext",
    "RewardKind",
    "__version__",
    "advance_round",
    "analyze",
    "compile_formula",
    "distances",
    "fixture_dfa",
    "make_context",
    "minimize",
    "parse",
    "partition",
    "progress",
    "progression",
    "reward",
    "simplify",
    "update_distances",
]
