"""Grammatical Evolution and Probabilistic Grammatical Evolution for symbolic regression."""

from .engine import EngineConfig, RunTrace, run
from .grammar import PCFG, Grammar, GrammarError, parse_bnf, to_pcfg, validate
from .mapper import GE, PGE, Genotype, MappingResult, map_ge, map_pge
from .problems import compile, evaluate, fitness, load_boston, pagie_dataset, rrse
from .update import renormalize, update_probabilities

__all__ = [
    "EngineConfig", "RunTrace", "run",
    "PCFG", "Grammar", "GrammarError", "parse_bnf", "to_pcfg", "validate",
    "GE", "PGE", "Genotype", "MappingResult", "map_ge", "map_pge",
    "compile", "evaluate", "fitness", "load_boston", "pagie_dataset", "rrse",
    "renormalize", "update_probabilities",
]
