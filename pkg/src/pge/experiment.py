"""Multi-run experiments and their CSV artifacts.

An experiment writes into its output directory:

``fitness.csv``
    run, generation, best_fitness, best_ever_fitness, mean_fitness, invalid_count
``probs.csv`` (PGE only)
    run, generation, nonterminal, production_index, production_text, probability
``summary.csv``
    algorithm, problem, runs, train_mean, train_std, test_mean, test_std
``best.txt``
    tab-separated run, phenotype, train_fitness, test_fitness

Floats are written with ``repr`` so re-running a spec reproduces the files
byte for byte.
"""

from __future__ import annotations

import csv
import logging
import math
import os
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional

import numpy as np

from .engine import EngineConfig, RunTrace, run
from .grammar import builtin_grammar, load_grammar
from .mapper import GE, PGE
from .problems import make_problem

log = logging.getLogger(__name__)

ALGORITHMS = {"ge": GE, "pge": PGE}
PROBLEMS = ("pagie", "boston")

FITNESS_HEADER = ["run", "generation", "best_fitness", "best_ever_fitness", "mean_fitness", "invalid_count"]
PROBS_HEADER = ["run", "generation", "nonterminal", "production_index", "production_text", "probability"]
SUMMARY_HEADER = ["algorithm", "problem", "runs", "train_mean", "train_std", "test_mean", "test_std"]
BEST_HEADER = ["run", "phenotype", "train_fitness", "test_fitness"]


@dataclass(frozen=True)
class ExperimentSpec:
    algorithm: str = "pge"
    problem: str = "pagie"
    grammar_path: Optional[str] = None
    runs: int = 100
    base_seed: int = 0
    engine: EngineConfig = field(default_factory=EngineConfig)
    output_dir: str = "results"
    pagie_grid: str = "paper"
    boston_csv: Optional[str] = None
    # None draws a fresh 90/10 split per run from the run's seed
    split_seed: Optional[int] = None
    jobs: int = 1

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {sorted(ALGORITHMS)}")
        if self.problem not in PROBLEMS:
            raise ValueError(f"problem must be one of {PROBLEMS}")
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")

    def seed_for(self, run_index: int) -> int:
        return self.base_seed + run_index


@dataclass
class RunOutcome:
    run: int
    trace: RunTrace
    phenotype: Optional[str]
    train_fitness: float
    test_fitness: float


@dataclass
class SummaryRecord:
    algorithm: str
    problem: str
    runs: int
    train_mean: float
    train_std: float
    test_mean: float = float("nan")
    test_std: float = float("nan")

    def human(self) -> str:
        text = f"{self.algorithm.upper()} {self.problem}: train {self.train_mean:.2f}±{self.train_std:.2f}"
        if not math.isnan(self.test_mean):
            text += f", test {self.test_mean:.2f}±{self.test_std:.2f}"
        return text + f" ({self.runs} runs)"


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _grammar_for(spec: ExperimentSpec):
    if spec.grammar_path:
        return load_grammar(spec.grammar_path)
    return builtin_grammar(spec.problem)


def execute_run(spec: ExperimentSpec, run_index: int) -> RunOutcome:
    seed = spec.seed_for(run_index)
    grammar = _grammar_for(spec)
    split_seed = seed if spec.split_seed is None else spec.split_seed
    problem = make_problem(spec.problem, grammar=grammar, pagie_grid=spec.pagie_grid,
                           boston_csv=spec.boston_csv, split_seed=split_seed)
    config = spec.engine.with_(seed=seed, mode=ALGORITHMS[spec.algorithm])
    trace = run(config, grammar, problem)
    best = trace.best
    log.info("run %d (seed %d): best %.6g", run_index, seed, best.fitness)
    return RunOutcome(run_index, trace, best.phenotype, best.fitness, problem.test_fitness(best.phenotype))


def _execute(args):
    return execute_run(*args)


def run_experiment(spec: ExperimentSpec) -> tuple[list[RunOutcome], SummaryRecord]:
    """Run every seed of ``spec`` and write the artifacts to ``spec.output_dir``."""
    _grammar_for(spec)  # fail early on a bad grammar
    os.makedirs(spec.output_dir, exist_ok=True)
    tasks = [(spec, r) for r in range(spec.runs)]
    if spec.jobs > 1 and spec.runs > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            outcomes = list(pool.map(_execute, tasks))
    else:
        outcomes = [_execute(t) for t in tasks]
    outcomes.sort(key=lambda o: o.run)

    write_fitness_csv(os.path.join(spec.output_dir, "fitness.csv"), outcomes)
    if spec.algorithm == "pge":
        write_probs_csv(os.path.join(spec.output_dir, "probs.csv"), outcomes)
    write_best(os.path.join(spec.output_dir, "best.txt"), outcomes)
    summary = summarize([os.path.join(spec.output_dir, "fitness.csv")],
                        [os.path.join(spec.output_dir, "best.txt")],
                        algorithm=spec.algorithm, problem=spec.problem)
    write_summary(os.path.join(spec.output_dir, "summary.csv"), [summary])
    return outcomes, summary


def write_fitness_csv(path, outcomes: Iterable[RunOutcome]):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FITNESS_HEADER)
        for o in outcomes:
            for rec in o.trace.records:
                w.writerow([o.run, rec.generation, _fmt(rec.best_fitness), _fmt(rec.best_ever_fitness),
                            _fmt(rec.mean_fitness), rec.invalid_count])


def write_probs_csv(path, outcomes: Iterable[RunOutcome]):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PROBS_HEADER)
        for o in outcomes:
            grammar = o.trace.final_pcfg.grammar
            for rec in o.trace.records:
                for name in grammar.nonterminals:
                    for i, (rule, p) in enumerate(zip(grammar.productions[name], rec.probs[name])):
                        w.writerow([o.run, rec.generation, name, i, str(rule), _fmt(p)])


def write_best(path, outcomes: Iterable[RunOutcome]):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(BEST_HEADER)
        for o in outcomes:
            w.writerow([o.run, o.phenotype or "", _fmt(o.train_fitness), _fmt(o.test_fitness)])


def write_summary(path, records: Iterable[SummaryRecord]):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for rec in records:
            w.writerow([_fmt(v) for v in asdict(rec).values()])


def _mean_std(values) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    return float(arr.mean()), float(arr.std(ddof=0))


def final_best_fitnesses(fitness_csvs) -> list[float]:
    """Last recorded best-ever fitness of every run, keyed by (file, run)."""
    last = {}
    for path in fitness_csvs:
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                key = (path, int(row["run"]))
                gen = int(row["generation"])
                if key not in last or gen > last[key][0]:
                    last[key] = (gen, float(row["best_ever_fitness"]))
    return [v for _, v in (last[k] for k in sorted(last))]


def summarize(fitness_csvs, best_files=None, algorithm: str = "", problem: str = "") -> SummaryRecord:
    """Mean and population standard deviation of each run's final best-ever fitness."""
    finals = final_best_fitnesses(fitness_csvs)
    if not finals:
        raise ValueError("no runs found in the fitness files")
    train_mean, train_std = _mean_std(finals)
    tests = []
    for path in best_files or ():
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh, delimiter="\t"):
                v = float(row["test_fitness"])
                if not math.isnan(v):
                    tests.append(v)
    test_mean, test_std = _mean_std(tests) if tests else (float("nan"), float("nan"))
    return SummaryRecord(algorithm, problem, len(finals), train_mean, train_std, test_mean, test_std)


@dataclass
class ProductionProbability:
    production_index: int
    production_text: str
    probability: float


def dump_final_probs(probs_csvs, nonterminal: str) -> list[ProductionProbability]:
    """Average the final-generation probabilities of one nonterminal across runs,
    most probable production first."""
    final_gen = {}
    rows = defaultdict(list)
    for path in probs_csvs:
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                key = (path, int(row["run"]))
                gen = int(row["generation"])
                final_gen[key] = max(final_gen.get(key, gen), gen)
                if row["nonterminal"] == nonterminal:
                    rows[key].append((gen, int(row["production_index"]),
                                      row["production_text"], float(row["probability"])))
    if not rows:
        raise KeyError(f"no probability traces for <{nonterminal}>")

    sums = defaultdict(float)
    texts = {}
    for key, entries in rows.items():
        for gen, idx, text, p in entries:
            if gen == final_gen[key]:
                sums[idx] += p
                texts[idx] = text
    n = len(rows)
    table = [ProductionProbability(i, texts[i], sums[i] / n) for i in sorted(sums)]
    table.sort(key=lambda r: -r.probability)
    return table
