"""Command-line entry point.

    pge run --algorithm pge --problem pagie --runs 30 --out results/pge-pagie
    pge summarize results/pge-pagie
    pge probs results/pge-boston --nonterminal var
    pge export-pagie pagie.csv

``run`` settings are resolved as built-in defaults, then a ``--config``
file of ``key = value`` lines, then command-line flags.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import re
import sys

from .engine import EngineConfig
from .experiment import (
    ExperimentSpec,
    dump_final_probs,
    run_experiment,
    summarize,
    write_summary,
)
from .grammar import GrammarError
from .problems import BOSTON_FEATURES, PAGIE_GRIDS, DatasetError, pagie_dataset

# flag name -> (converter, default)
RUN_OPTIONS = {
    "algorithm": (str, "pge"),
    "problem": (str, "pagie"),
    "grammar": (str, None),
    "runs": (int, 100),
    "seed": (int, 0),
    "pop": (int, 1000),
    "gens": (int, 50),
    "elitism": (float, 0.10),
    "mut-prob": (float, 0.05),
    "xo-prob": (float, 0.90),
    "tournament": (int, 3),
    "genotype-size": (int, 128),
    "wraps": (int, 0),
    "lambda": (float, 0.01),
    "out": (str, "results"),
    "pagie-grid": (str, "paper"),
    "boston-csv": (str, None),
    "split-seed": (int, None),
    "jobs": (int, 1),
}
CHOICES = {
    "algorithm": ("ge", "pge"),
    "problem": ("pagie", "boston"),
    "pagie-grid": tuple(PAGIE_GRIDS),
}


class ConfigError(ValueError):
    pass


def read_config(path) -> dict:
    """Parse a flat ``key = value`` file; keys are flag names without dashes prefix."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.lstrip("-").replace("_", "-")
            if key not in RUN_OPTIONS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = value
    return values


def _convert(key, value):
    conv, _ = RUN_OPTIONS[key]
    if value is None:
        return None
    try:
        value = conv(value)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc
    if key in CHOICES and value not in CHOICES[key]:
        raise ConfigError(f"{key} must be one of {CHOICES[key]}")
    return value


def resolve_settings(args: argparse.Namespace) -> dict:
    settings = {key: default for key, (_, default) in RUN_OPTIONS.items()}
    if args.config:
        for key, value in read_config(args.config).items():
            settings[key] = _convert(key, value)
    for key in RUN_OPTIONS:
        value = getattr(args, key.replace("-", "_"))
        if value is not None:
            settings[key] = value
    return settings


def spec_from_settings(s: dict) -> ExperimentSpec:
    engine = EngineConfig(
        population_size=s["pop"],
        generations=s["gens"],
        elitism_fraction=s["elitism"],
        mutation_prob=s["mut-prob"],
        crossover_prob=s["xo-prob"],
        tournament_size=s["tournament"],
        genotype_length=s["genotype-size"],
        max_wraps=s["wraps"],
        learning_factor=s["lambda"],
        seed=s["seed"],
    )
    return ExperimentSpec(
        algorithm=s["algorithm"],
        problem=s["problem"],
        grammar_path=s["grammar"],
        runs=s["runs"],
        base_seed=s["seed"],
        engine=engine,
        output_dir=s["out"],
        pagie_grid=s["pagie-grid"],
        boston_csv=s["boston-csv"],
        split_seed=s["split-seed"],
        jobs=s["jobs"],
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pge", description="Grammatical evolution experiments (GE and PGE).")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run seeded experiments and write CSV artifacts")
    p_run.add_argument("--config", help="file of 'key = value' lines")
    for key, (conv, default) in RUN_OPTIONS.items():
        p_run.add_argument(f"--{key}", type=conv, default=None, choices=CHOICES.get(key),
                           help=f"default: {default}")

    p_sum = sub.add_parser("summarize", help="mean/std of final best-ever fitness")
    p_sum.add_argument("dirs", nargs="+", help="experiment output directories")
    p_sum.add_argument("--algorithm", default="")
    p_sum.add_argument("--problem", default="")
    p_sum.add_argument("--csv", help="also write summary.csv here")

    p_probs = sub.add_parser("probs", help="mean final-generation probabilities of one nonterminal")
    p_probs.add_argument("dirs", nargs="+")
    p_probs.add_argument("--nonterminal", default="var")

    p_exp = sub.add_parser("export-pagie", help="write the Pagie grid as CSV (x, y, target)")
    p_exp.add_argument("path")
    p_exp.add_argument("--pagie-grid", choices=tuple(PAGIE_GRIDS), default="paper")
    return parser


_INDEXED = re.compile(r"^x\[(\d+)\]$")


def feature_label(text: str) -> str:
    m = _INDEXED.match(text)
    if m and 1 <= int(m.group(1)) <= len(BOSTON_FEATURES):
        return BOSTON_FEATURES[int(m.group(1)) - 1]
    return text


def cmd_run(args) -> int:
    spec = spec_from_settings(resolve_settings(args))
    _, summary = run_experiment(spec)
    print(summary.human())
    print(f"artifacts written to {spec.output_dir}")
    return 0


def cmd_summarize(args) -> int:
    fitness = [os.path.join(d, "fitness.csv") for d in args.dirs]
    best = [os.path.join(d, "best.txt") for d in args.dirs if os.path.exists(os.path.join(d, "best.txt"))]
    record = summarize(fitness, best, algorithm=args.algorithm, problem=args.problem)
    print(record.human())
    if args.csv:
        write_summary(args.csv, [record])
    return 0


def cmd_probs(args) -> int:
    table = dump_final_probs([os.path.join(d, "probs.csv") for d in args.dirs], args.nonterminal)
    print("production_index,production_text,label,probability")
    for row in table:
        print(f"{row.production_index},{row.production_text},{feature_label(row.production_text)},"
              f"{row.probability!r}")
    return 0


def cmd_export_pagie(args) -> int:
    data = pagie_dataset(args.pagie_grid)
    with open(args.path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "target"])
        for (x, y), t in zip(data.X.tolist(), data.y.tolist()):
            w.writerow([repr(x), repr(y), repr(t)])
    return 0


COMMANDS = {
    "run": cmd_run,
    "summarize": cmd_summarize,
    "probs": cmd_probs,
    "export-pagie": cmd_export_pagie,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (GrammarError, DatasetError, ConfigError, OSError, KeyError, ValueError) as exc:
        print(f"pge: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
