"""Symbolic-regression benchmarks: Pagie polynomial and Boston Housing.

Phenotypes are compiled into small expression trees and evaluated with
numpy over whole columns. All operators are totalized: division by zero
and ``inv(0)`` give 1, ``log`` of a non-positive value gives 0, and every
intermediate result is clamped to ``[-CLAMP, CLAMP]``.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass
from importlib import resources
from typing import Sequence

import numpy as np

from .grammar import builtin_grammar

CLAMP = 1e100
# fitness of individuals that failed to map; no clamped expression can reach it
WORST_FITNESS = float(np.finfo(np.float64).max)

BOSTON_FEATURES = (
    "CRIM", "ZN", "INDUS", "CHAS", "NOX", "RM", "AGE",
    "DIS", "RAD", "TAX", "PTRATIO", "B", "LSTAT",
)
BOSTON_TARGET = "MEDV"

PAGIE_GRIDS = {
    # (start, step, points per axis)
    "paper": (-5.0, 0.4, 27),
    "conventional": (-5.0, 0.4, 26),
}


class ExpressionError(ValueError):
    pass


class DatasetError(ValueError):
    pass


class DegenerateTargetError(ZeroDivisionError):
    """RRSE is undefined when every target value is the same."""


# -- protected operators -----------------------------------------------------

def _finite(v):
    v = np.nan_to_num(v, nan=CLAMP, posinf=CLAMP, neginf=-CLAMP)
    return np.clip(v, -CLAMP, CLAMP)


def pdiv(a, b):
    a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
    with np.errstate(all="ignore"):
        out = np.where(b == 0.0, 1.0, a / np.where(b == 0.0, 1.0, b))
    return _finite(out)


def plog(v):
    v = np.asarray(v, float)
    with np.errstate(all="ignore"):
        out = np.where(v <= 0.0, 0.0, np.log(np.where(v <= 0.0, 1.0, v)))
    return _finite(out)


def pinv(v):
    return pdiv(1.0, v)


def pexp(v):
    with np.errstate(all="ignore"):
        return _finite(np.exp(np.minimum(np.asarray(v, float), 709.0)))


def _binary(fn):
    def op(a, b):
        with np.errstate(all="ignore"):
            return _finite(fn(a, b))
    return op


def _unary(fn):
    def op(v):
        with np.errstate(all="ignore"):
            return _finite(fn(v))
    return op


BINARY = {
    "+": _binary(np.add),
    "-": _binary(np.subtract),
    "*": _binary(np.multiply),
    "/": pdiv,
}
UNARY = {
    "sin": _unary(np.sin),
    "cos": _unary(np.cos),
    "exp": pexp,
    "log": plog,
    "inv": pinv,
}


# -- expression trees --------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\d+\.\d*|\.\d+|\d+)|([A-Za-z_][A-Za-z_0-9]*(?:\[\d+\])?)|(.))")
_INDEXED = re.compile(r"^[A-Za-z_]\w*\[(\d+)\]$")


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int
    name: str


@dataclass(frozen=True)
class Unary:
    op: str
    arg: object


@dataclass(frozen=True)
class Binary:
    op: str
    left: object
    right: object


def _tokens(text: str) -> list[str]:
    out = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            break
        out.append(m.group(m.lastindex))
        pos = m.end()
    return out


def _resolve(name: str, feature_names: Sequence[str]) -> Var:
    if name in feature_names:
        return Var(list(feature_names).index(name), name)
    m = _INDEXED.match(name)
    if m:
        k = int(m.group(1))
        if 1 <= k <= len(feature_names):
            return Var(k - 1, name)
    raise ExpressionError(f"unknown variable {name!r}")


class CompiledExpression:
    """A phenotype parsed into a tree over the dataset's feature columns.

    Operator chains without parentheses are grouped left to right with no
    precedence, so ``x + y * x`` means ``(x + y) * x``.
    """

    def __init__(self, root, feature_names: Sequence[str], source: str = ""):
        self.root = root
        self.feature_names = tuple(feature_names)
        self.source = source

    def __repr__(self):
        return f"CompiledExpression({self.source!r})"

    def evaluate_columns(self, X: np.ndarray) -> np.ndarray:
        """Evaluate on a 2-D array with one column per feature."""
        X = np.asarray(X, dtype=float)
        out = _eval(self.root, X)
        return np.broadcast_to(out, (X.shape[0],)).astype(float, copy=True)

    def __call__(self, row) -> float:
        return evaluate(self, row)


def _eval(node, X):
    if isinstance(node, Binary):
        return BINARY[node.op](_eval(node.left, X), _eval(node.right, X))
    if isinstance(node, Unary):
        return UNARY[node.op](_eval(node.arg, X))
    if isinstance(node, Var):
        return X[:, node.index]
    return np.float64(node.value)


def compile(phenotype: str, feature_names: Sequence[str]) -> CompiledExpression:  # noqa: A001
    toks = _tokens(phenotype)
    pos = 0

    def peek():
        return toks[pos] if pos < len(toks) else None

    def take(expected=None):
        nonlocal pos
        tok = peek()
        if tok is None or (expected is not None and tok != expected):
            raise ExpressionError(f"expected {expected or 'a token'} at token {pos} in {phenotype!r}")
        pos += 1
        return tok

    def atom():
        tok = peek()
        if tok == "(":
            take("(")
            node = chain()
            take(")")
            return node
        if tok in UNARY:
            take()
            take("(")
            node = chain()
            take(")")
            return Unary(tok, node)
        if tok is None or tok in BINARY or tok == ")":
            raise ExpressionError(f"unexpected {tok!r} in {phenotype!r}")
        take()
        if tok[0].isdigit() or tok[0] == ".":
            return Const(float(tok))
        return _resolve(tok, feature_names)

    def chain():
        node = atom()
        while peek() in BINARY:
            op = take()
            node = Binary(op, node, atom())
        return node

    root = chain()
    if pos != len(toks):
        raise ExpressionError(f"trailing tokens in {phenotype!r}: {toks[pos:]}")
    return CompiledExpression(root, feature_names, phenotype)


def evaluate(expr: CompiledExpression, row) -> float:
    row = np.asarray(row, dtype=float).reshape(1, -1)
    if row.shape[1] != len(expr.feature_names):
        raise ExpressionError(f"row has {row.shape[1]} values, expected {len(expr.feature_names)}")
    return float(expr.evaluate_columns(row)[0])


# -- datasets ----------------------------------------------------------------

@dataclass(frozen=True)
class Dataset:
    feature_names: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray
    train_idx: np.ndarray
    test_idx: np.ndarray
    name: str = ""

    def __post_init__(self):
        if self.X.ndim != 2 or self.X.shape[1] != len(self.feature_names):
            raise DatasetError("feature matrix does not match the feature names")
        if self.X.shape[0] != self.y.shape[0]:
            raise DatasetError("feature and target row counts differ")
        both = np.concatenate([self.train_idx, self.test_idx])
        if len(both) != len(self.y) or len(np.unique(both)) != len(self.y):
            raise DatasetError("train/test partition must cover every row exactly once")
        for arr in (self.X, self.y, self.train_idx, self.test_idx):
            arr.setflags(write=False)

    @property
    def rows(self):
        return [(tuple(x), float(t)) for x, t in zip(self.X, self.y)]

    def partition(self, which: str) -> tuple[np.ndarray, np.ndarray]:
        if which == "train":
            idx = self.train_idx
        elif which == "test":
            idx = self.test_idx
        else:
            raise ValueError(f"unknown partition {which!r}")
        return self.X[idx], self.y[idx]


def pagie_target(x, y):
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    return pdiv(1.0, 1.0 + pdiv(1.0, x ** 4)) + pdiv(1.0, 1.0 + pdiv(1.0, y ** 4))


def pagie_dataset(grid: str = "paper") -> Dataset:
    """Full grid of the Pagie polynomial; every row is training data.

    ``grid="paper"`` samples [-5, 5.4] (27 points per axis), ``"conventional"``
    samples [-5, 5] (26 points per axis), both with step 0.4.
    """
    start, step, count = PAGIE_GRIDS[grid]
    axis = start + step * np.arange(count)
    xs, ys = np.meshgrid(axis, axis, indexing="ij")
    X = np.column_stack([xs.ravel(), ys.ravel()])
    target = pagie_target(X[:, 0], X[:, 1])
    n = len(target)
    return Dataset(("x", "y"), X, target, np.arange(n), np.arange(0), name="pagie")


def boston_csv_path() -> str:
    return str(resources.files("pge.data").joinpath("boston.csv"))


def split_indices(n: int, seed: int, train_fraction: float = 0.9) -> tuple[np.ndarray, np.ndarray]:
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(math.floor(train_fraction * n))
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def load_boston(path=None, split_seed: int = 0) -> Dataset:
    """Read the 506-row Boston Housing CSV and split it 90/10 with ``split_seed``.

    Expects a header with the 13 StatLib feature columns followed by MEDV.
    """
    path = path or boston_csv_path()
    expected = list(BOSTON_FEATURES) + [BOSTON_TARGET]
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot read Boston CSV {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DatasetError(f"{path}: empty file")
        header = [h.strip() for h in header]
        if header != expected:
            raise DatasetError(f"{path}: header must be {','.join(expected)}")
        values = []
        for rownum, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(expected):
                raise DatasetError(f"{path}: row {rownum} has {len(row)} columns, expected {len(expected)}")
            try:
                values.append([float(c) for c in row])
            except ValueError as exc:
                raise DatasetError(f"{path}: row {rownum} is malformed: {exc}") from exc
    if not values:
        raise DatasetError(f"{path}: no data rows")
    data = np.array(values)
    train, test = split_indices(len(data), split_seed)
    return Dataset(BOSTON_FEATURES, data[:, :-1], data[:, -1], train, test, name="boston")


# -- fitness -----------------------------------------------------------------

def rrse(predictions, targets) -> float:
    """Root relative squared error; 0 is a perfect fit, 1 matches the mean."""
    p = np.asarray(predictions, dtype=float)
    t = np.asarray(targets, dtype=float)
    if p.shape != t.shape or p.ndim != 1 or len(t) == 0:
        raise ValueError("predictions and targets must be equal-length non-empty vectors")
    denom = float(np.sum((t - t.mean()) ** 2))
    if denom == 0.0:
        raise DegenerateTargetError("all targets are equal")
    return math.sqrt(float(np.sum((p - t) ** 2)) / denom)


def fitness(expr: CompiledExpression, dataset: Dataset, partition: str = "train") -> float:
    X, y = dataset.partition(partition)
    return rrse(expr.evaluate_columns(X), y)


class Problem:
    """Binds a dataset and grammar; caches fitness per phenotype string."""

    def __init__(self, name: str, dataset: Dataset, grammar=None):
        self.name = name
        self.dataset = dataset
        self.grammar = grammar if grammar is not None else builtin_grammar(name)
        self._train_X, self._train_y = dataset.partition("train")
        # validates the partition up front
        rrse(self._train_y, self._train_y)
        self._cache: dict[str, float] = {}

    @property
    def has_test(self) -> bool:
        return len(self.dataset.test_idx) > 0

    def compile(self, phenotype: str) -> CompiledExpression:
        return compile(phenotype, self.dataset.feature_names)

    def train_fitness(self, phenotype: str | None) -> float:
        if phenotype is None:
            return WORST_FITNESS
        cached = self._cache.get(phenotype)
        if cached is None:
            expr = self.compile(phenotype)
            cached = rrse(expr.evaluate_columns(self._train_X), self._train_y)
            self._cache[phenotype] = cached
        return cached

    def test_fitness(self, phenotype: str | None) -> float:
        if not self.has_test:
            return float("nan")
        if phenotype is None:
            return WORST_FITNESS
        return fitness(self.compile(phenotype), self.dataset, "test")


def make_problem(name: str, *, grammar=None, pagie_grid: str = "paper",
                 boston_csv=None, split_seed: int = 0) -> Problem:
    if name == "pagie":
        return Problem("pagie", pagie_dataset(pagie_grid), grammar)
    if name == "boston":
        return Problem("boston", load_boston(boston_csv, split_seed), grammar)
    raise ValueError(f"unknown problem {name!r}")
