"""Generational loop shared by GE and PGE."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .grammar import PCFG, Grammar, to_pcfg
from .mapper import GE, PGE, Genotype, MappingResult, map_ge, map_pge
from .problems import WORST_FITNESS
from .update import check_learning_factor, update_probabilities

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EngineConfig:
    """Defaults are the experimental settings used for both algorithms."""

    population_size: int = 1000
    generations: int = 50
    elitism_fraction: float = 0.10
    mutation_prob: float = 0.05
    crossover_prob: float = 0.90
    tournament_size: int = 3
    genotype_length: int = 128
    max_wraps: int = 0
    learning_factor: float = 0.01
    seed: int = 0
    mode: str = PGE

    def __post_init__(self):
        if self.mode not in (GE, PGE):
            raise ValueError(f"mode must be {GE!r} or {PGE!r}")
        if not self.population_size >= self.tournament_size >= 1:
            raise ValueError("need population_size >= tournament_size >= 1")
        for name in ("elitism_fraction", "mutation_prob", "crossover_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.genotype_length < 1:
            raise ValueError("genotype_length must be at least 1")
        if self.generations < 0 or self.max_wraps < 0:
            raise ValueError("generations and max_wraps must be non-negative")
        check_learning_factor(self.learning_factor)

    @property
    def n_elites(self) -> int:
        return int(round(self.elitism_fraction * self.population_size))

    def with_(self, **changes) -> EngineConfig:
        return replace(self, **changes)


@dataclass
class Individual:
    genotype: Genotype
    mapping: Optional[MappingResult] = None
    fitness: float = WORST_FITNESS
    evaluated: bool = False

    @property
    def phenotype(self):
        return self.mapping.phenotype if self.mapping else None


@dataclass(frozen=True)
class Snapshot:
    """Best individual as it was when first found."""

    generation: int
    genotype: Genotype
    phenotype: Optional[str]
    fitness: float
    counters: dict


@dataclass
class GenerationRecord:
    generation: int
    best_fitness: float
    best_ever_fitness: float
    mean_fitness: float
    invalid_count: int
    probs: Optional[dict] = None


@dataclass
class RunTrace:
    records: list[GenerationRecord] = field(default_factory=list)
    best: Optional[Snapshot] = None
    final_pcfg: Optional[PCFG] = None


# -- operators ---------------------------------------------------------------

def random_genotype(mode: str, length: int, rng: np.random.Generator) -> Genotype:
    if mode == GE:
        return Genotype(GE, tuple(rng.integers(0, 256, size=length).tolist()))
    return Genotype(PGE, tuple(rng.random(length).tolist()))


def init_population(config: EngineConfig, rng: np.random.Generator | None = None) -> list[Individual]:
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    return [Individual(random_genotype(config.mode, config.genotype_length, rng))
            for _ in range(config.population_size)]


def tournament_select(population: list[Individual], k: int, rng: np.random.Generator) -> Individual:
    """Best of ``k`` uniform draws with replacement; the earliest draw wins ties."""
    winner = None
    for i in rng.integers(0, len(population), size=k):
        cand = population[i]
        if winner is None or cand.fitness < winner.fitness:
            winner = cand
    return winner


def crossover_at(a: Genotype, b: Genotype, cut: int) -> tuple[Genotype, Genotype]:
    return (Genotype(a.mode, a.codons[:cut] + b.codons[cut:]),
            Genotype(b.mode, b.codons[:cut] + a.codons[cut:]))


def one_point_crossover(a: Genotype, b: Genotype, rng: np.random.Generator,
                        prob: float = 1.0) -> tuple[Genotype, Genotype]:
    if a.mode != b.mode:
        raise ValueError("cannot cross genotypes of different modes")
    if len(a) != len(b):
        raise ValueError(f"genotype lengths differ: {len(a)} vs {len(b)}")
    if len(a) < 2 or rng.random() >= prob:
        return a, b
    cut = int(rng.integers(1, len(a)))
    return crossover_at(a, b, cut)


def mutate(g: Genotype, rng: np.random.Generator, prob: float) -> Genotype:
    """Replace each codon with a fresh uniform draw with probability ``prob``."""
    hits = np.flatnonzero(rng.random(len(g)) < prob)
    if len(hits) == 0:
        return g
    codons = list(g.codons)
    if g.mode == GE:
        fresh = rng.integers(0, 256, size=len(hits)).tolist()
    else:
        fresh = rng.random(len(hits)).tolist()
    for i, v in zip(hits.tolist(), fresh):
        codons[i] = v
    return Genotype(g.mode, tuple(codons))


def choose_adaptation_individual(generation: int, best_of_gen, best_overall):
    """Even generations learn from the generation's best, odd ones from the best so far."""
    return best_of_gen if generation % 2 == 0 else best_overall


# -- main loop ---------------------------------------------------------------

def _evaluate(population, grammar_or_pcfg, problem, config, ge_cache):
    # GE mappings never change, so they are carried over from the previous generation
    kept = {}
    for ind in population:
        if config.mode == GE:
            mapping = ge_cache.get(ind.genotype.codons)
            if mapping is None:
                mapping = map_ge(ind.genotype, grammar_or_pcfg, config.max_wraps)
            kept[ind.genotype.codons] = mapping
        else:
            mapping = map_pge(ind.genotype, grammar_or_pcfg, config.max_wraps)
        ind.mapping = mapping
        ind.fitness = problem.train_fitness(mapping.phenotype) if mapping.valid else WORST_FITNESS
        ind.evaluated = True
    return kept


def run(config: EngineConfig, grammar_or_pcfg, problem) -> RunTrace:
    """Evolve for ``config.generations`` generations after the initial one.

    ``problem`` needs a ``train_fitness(phenotype)`` method. In PGE mode the
    grammar probabilities are adapted once per generation and the whole
    population is re-mapped with the new probabilities.
    """
    rng = np.random.default_rng(config.seed)
    if isinstance(grammar_or_pcfg, PCFG):
        pcfg = grammar_or_pcfg.copy()
        grammar = pcfg.grammar
    else:
        grammar = grammar_or_pcfg
        pcfg = to_pcfg(grammar)
    mapping_target = grammar if config.mode == GE else pcfg

    population = init_population(config, rng)
    trace = RunTrace()
    best: Snapshot | None = None
    ge_cache: dict = {}

    for gen in range(config.generations + 1):
        ge_cache = _evaluate(population, mapping_target, problem, config, ge_cache)

        gen_best = min(population, key=lambda ind: ind.fitness)
        if best is None or gen_best.fitness < best.fitness:
            best = Snapshot(gen, gen_best.genotype, gen_best.phenotype,
                            gen_best.fitness, gen_best.mapping.counters)
        valid = [ind.fitness for ind in population if ind.mapping.valid]
        trace.records.append(GenerationRecord(
            generation=gen,
            best_fitness=gen_best.fitness,
            best_ever_fitness=best.fitness,
            mean_fitness=math.fsum(valid) / len(valid) if valid else float("nan"),
            invalid_count=len(population) - len(valid),
            probs=dict(pcfg.probs) if config.mode == PGE else None,
        ))
        log.debug("gen %d best %.6g best-ever %.6g", gen, gen_best.fitness, best.fitness)

        if gen == config.generations:
            break

        if config.mode == PGE:
            chosen = choose_adaptation_individual(gen, gen_best.mapping, best)
            pcfg = update_probabilities(pcfg, chosen.counters, config.learning_factor)
            mapping_target = pcfg

        ranked = sorted(population, key=lambda ind: ind.fitness)
        offspring = [Individual(ind.genotype) for ind in ranked[:config.n_elites]]
        while len(offspring) < config.population_size:
            a = tournament_select(population, config.tournament_size, rng)
            b = tournament_select(population, config.tournament_size, rng)
            c1, c2 = one_point_crossover(a.genotype, b.genotype, rng, config.crossover_prob)
            offspring.append(Individual(mutate(c1, rng, config.mutation_prob)))
            if len(offspring) < config.population_size:
                offspring.append(Individual(mutate(c2, rng, config.mutation_prob)))
        population = offspring

    trace.best = best
    trace.final_pcfg = pcfg if config.mode == PGE else None
    return trace
