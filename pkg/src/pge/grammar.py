"""BNF grammars and their probabilistic extension.

A grammar file is a sequence of rules of the form::

    <expr> ::= <expr> <op> <expr> | <var>
             | ( <expr> )

Tokens wrapped in angle brackets are nonterminals, every other
whitespace-delimited token is a terminal. A line starting with ``|``
continues the alternatives of the previous rule, and the left-hand side
of the first rule is the axiom. Blank lines and lines starting with
``#`` are ignored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources

TERMINAL = "terminal"
NONTERMINAL = "nonterminal"

SUM_TOLERANCE = 1e-9


class GrammarError(ValueError):
    """Raised for malformed or inconsistent grammar text."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Symbol:
    kind: str
    text: str

    def __post_init__(self):
        if self.kind not in (TERMINAL, NONTERMINAL):
            raise ValueError(f"unknown symbol kind {self.kind!r}")
        if not self.text:
            raise ValueError("symbol text must be non-empty")
        if self.kind == NONTERMINAL and ("<" in self.text or ">" in self.text):
            raise ValueError(f"nonterminal name may not contain angle brackets: {self.text!r}")

    @property
    def is_terminal(self) -> bool:
        return self.kind == TERMINAL

    def __str__(self):
        return self.text if self.is_terminal else f"<{self.text}>"


def T(text: str) -> Symbol:
    return Symbol(TERMINAL, text)


def NT(text: str) -> Symbol:
    return Symbol(NONTERMINAL, text)


@dataclass(frozen=True)
class ProductionRule:
    symbols: tuple[Symbol, ...]

    def __post_init__(self):
        if not self.symbols:
            raise ValueError("a production needs at least one symbol")

    def __str__(self):
        return " ".join(str(s) for s in self.symbols)


@dataclass(frozen=True)
class Grammar:
    """A context-free grammar with ordered alternatives.

    ``productions`` maps each nonterminal name to its alternatives in
    source order; that order decides which alternative a codon selects.
    """

    nonterminals: tuple[str, ...]
    terminals: frozenset[str]
    axiom: str
    productions: dict[str, tuple[ProductionRule, ...]] = field(hash=False)

    def __post_init__(self):
        if self.axiom not in self.nonterminals:
            raise GrammarError(f"axiom <{self.axiom}> is not a nonterminal")
        if set(self.productions) != set(self.nonterminals):
            raise GrammarError("production map does not match the nonterminal set")
        for name in self.nonterminals:
            if not self.productions[name]:
                raise GrammarError(f"<{name}> has no productions")
            for rule in self.productions[name]:
                for sym in rule.symbols:
                    if not sym.is_terminal and sym.text not in self.productions:
                        raise GrammarError(f"<{sym.text}> is used but never defined")

    @cached_property
    def compact(self) -> dict[str, tuple[tuple[tuple[bool, str], ...], ...]]:
        """Productions as nested tuples of ``(is_nonterminal, text)`` for the mappers."""
        return {
            name: tuple(
                tuple((not s.is_terminal, s.text) for s in rule.symbols)
                for rule in self.productions[name]
            )
            for name in self.nonterminals
        }

    def arity(self, name: str) -> int:
        return len(self.productions[name])

    def to_bnf(self) -> str:
        lines = []
        for name in self.nonterminals:
            alts = " | ".join(str(rule) for rule in self.productions[name])
            lines.append(f"<{name}> ::= {alts}")
        return "\n".join(lines) + "\n"


def _tokenize(text: str, lineno: int) -> list[Symbol]:
    symbols = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch == "<":
            end = text.find(">", i + 1)
            if end < 0:
                raise GrammarError("unterminated '<...>'", lineno)
            name = text[i + 1:end]
            if not name or any(c.isspace() or c == "<" for c in name):
                raise GrammarError(f"bad nonterminal name {name!r}", lineno)
            symbols.append(NT(name))
            i = end + 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] != "<":
                j += 1
            symbols.append(T(text[i:j]))
            i = j
    return symbols


def parse_bnf(text: str) -> Grammar:
    """Parse BNF text into a :class:`Grammar`.

    Raises :class:`GrammarError` (carrying the offending line number) on a
    missing ``::=``, an unterminated nonterminal, an empty alternative, a
    duplicate left-hand side or a reference to an undefined nonterminal.
    """
    if not text or not text.strip():
        raise GrammarError("empty grammar text")

    order: list[str] = []
    alternatives: dict[str, list[tuple[list[Symbol], int]]] = {}
    current = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "::=" in line:
            lhs, rhs = line.split("::=", 1)
            lhs = lhs.strip()
            if not (lhs.startswith("<") and lhs.endswith(">")) or len(lhs) < 3:
                raise GrammarError(f"left-hand side must be a single <nonterminal>, got {lhs!r}", lineno)
            name = lhs[1:-1]
            if "<" in name or ">" in name or any(c.isspace() for c in name):
                raise GrammarError(f"bad nonterminal name {name!r}", lineno)
            if name in alternatives:
                raise GrammarError(f"duplicate definition of <{name}>", lineno)
            order.append(name)
            alternatives[name] = []
            current = name
        elif line.startswith("|"):
            if current is None:
                raise GrammarError("continuation line before any rule", lineno)
            rhs = line[1:]
        else:
            raise GrammarError("missing '::='", lineno)

        for alt in rhs.split("|"):
            symbols = _tokenize(alt, lineno)
            if not symbols:
                raise GrammarError(f"empty alternative in <{current}>", lineno)
            alternatives[current].append((symbols, lineno))

    for name in order:
        if not alternatives[name]:
            raise GrammarError(f"<{name}> has no alternatives")
        for symbols, lineno in alternatives[name]:
            for sym in symbols:
                if not sym.is_terminal and sym.text not in alternatives:
                    raise GrammarError(f"undefined nonterminal <{sym.text}>", lineno)

    productions = {
        name: tuple(ProductionRule(tuple(symbols)) for symbols, _ in alternatives[name])
        for name in order
    }
    terminals = frozenset(
        sym.text for rules in productions.values() for rule in rules for sym in rule.symbols
        if sym.is_terminal
    )
    return Grammar(tuple(order), terminals, order[0], productions)


def serialize(grammar: Grammar) -> str:
    return grammar.to_bnf()


def load_grammar(path) -> Grammar:
    with open(path, encoding="utf-8") as fh:
        return parse_bnf(fh.read())


def builtin_grammar(name: str) -> Grammar:
    """Load one of the shipped grammars, ``"pagie"`` or ``"boston"``."""
    text = resources.files("pge.data").joinpath(f"{name}.bnf").read_text(encoding="utf-8")
    return parse_bnf(text)


def builtin_grammar_path(name: str) -> str:
    return str(resources.files("pge.data").joinpath(f"{name}.bnf"))


@dataclass
class PCFG:
    """A grammar plus one probability per alternative.

    Treat instances as values: the update routines return new objects and
    never touch the one they were given.
    """

    grammar: Grammar
    probs: dict[str, tuple[float, ...]]

    def copy(self) -> PCFG:
        return PCFG(self.grammar, dict(self.probs))

    def items(self):
        """Yield ``(nonterminal, index, production_text, probability)`` rows."""
        for name in self.grammar.nonterminals:
            for i, (rule, p) in enumerate(zip(self.grammar.productions[name], self.probs[name])):
                yield name, i, str(rule), p


def to_pcfg(grammar: Grammar) -> PCFG:
    """Uniform distribution over each nonterminal's alternatives."""
    probs = {}
    for name in grammar.nonterminals:
        k = grammar.arity(name)
        probs[name] = (1.0,) if k == 1 else tuple(1.0 / k for _ in range(k))
    return PCFG(grammar, probs)


def validate(pcfg: PCFG) -> list[str]:
    """Return one message per violated PCFG invariant, empty if none."""
    violations = []
    for name in pcfg.grammar.nonterminals:
        if name not in pcfg.probs:
            violations.append(f"<{name}>: no probabilities")
            continue
        ps = pcfg.probs[name]
        if len(ps) != pcfg.grammar.arity(name):
            violations.append(
                f"<{name}>: {len(ps)} probabilities for {pcfg.grammar.arity(name)} productions"
            )
            continue
        bad = [p for p in ps if not (0.0 <= p <= 1.0)]
        if bad:
            violations.append(f"<{name}>: probabilities outside [0, 1]: {bad}")
        total = math.fsum(ps)
        if abs(total - 1.0) > SUM_TOLERANCE:
            violations.append(f"<{name}>: probabilities sum to {total!r}, not 1")
    for name in pcfg.probs:
        if name not in pcfg.grammar.productions:
            violations.append(f"<{name}>: probabilities for an unknown nonterminal")
    return violations
