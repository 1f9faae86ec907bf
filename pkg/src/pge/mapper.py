"""Genotype to phenotype mapping.

Both mappers perform a leftmost derivation from the axiom. They differ in
how a codon picks an alternative:

* GE: integer codon modulo the number of alternatives. Nonterminals with a
  single alternative are expanded without reading a codon.
* PGE: float codon compared against the running sum of the alternatives'
  probabilities; the first alternative whose cumulative probability
  exceeds the codon wins. Every expansion reads a codon.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .grammar import PCFG, Grammar

GE = "GE"
PGE = "PGE"

ExpansionCounters = dict[str, list[int]]

TIGHT_OPEN = frozenset({"("})
TIGHT_CLOSE = frozenset({")"})


@dataclass(frozen=True)
class Genotype:
    mode: str
    codons: tuple

    def __post_init__(self):
        if self.mode not in (GE, PGE):
            raise ValueError(f"unknown genotype mode {self.mode!r}")
        if not isinstance(self.codons, tuple):
            object.__setattr__(self, "codons", tuple(self.codons))
        if self.codons:
            lo, hi = min(self.codons), max(self.codons)
            if self.mode == GE and (lo < 0 or hi > 255):
                raise ValueError("GE codons must lie in [0, 255]")
            if self.mode == PGE and (lo < 0.0 or hi > 1.0):
                raise ValueError("PGE codons must lie in [0, 1]")

    def __len__(self):
        return len(self.codons)

    @classmethod
    def ge(cls, codons: Sequence[int]) -> Genotype:
        return cls(GE, tuple(int(c) for c in codons))

    @classmethod
    def pge(cls, codons: Sequence[float]) -> Genotype:
        return cls(PGE, tuple(float(c) for c in codons))


@dataclass
class MappingResult:
    phenotype: Optional[str]
    counters: ExpansionCounters
    codons_used: int
    wraps_used: int
    valid: bool
    # (nonterminal, alternative index) in derivation order
    selections: list[tuple[str, int]] = field(default_factory=list)
    # sentential form reached when the mapping ran out of codons
    partial: Optional[str] = None


def join_tokens(tokens: Sequence[str], tight_open=TIGHT_OPEN, tight_close=TIGHT_CLOSE) -> str:
    """Join terminals with single spaces, no space after an opening token or
    before a closing one: ``sin ( x )`` becomes ``sin (x)``."""
    out = []
    prev = None
    for tok in tokens:
        if out and prev not in tight_open and tok not in tight_close:
            out.append(" ")
        out.append(tok)
        prev = tok
    return "".join(out)


def _derive(grammar: Grammar, codons: Sequence, max_wraps: int, choose, consume_single: bool) -> MappingResult:
    compact = grammar.compact
    counters = {name: [0] * len(alts) for name, alts in compact.items()}
    selections = []
    out = []
    stack = [(True, grammar.axiom)]
    n = len(codons)
    pos = 0
    used = 0
    wraps = 0

    while stack:
        is_nt, text = stack.pop()
        if not is_nt:
            out.append(text)
            continue
        alts = compact[text]
        if len(alts) == 1 and not consume_single:
            idx = 0
        else:
            if pos == n:
                if wraps >= max_wraps or n == 0:
                    stack.append((is_nt, text))
                    partial = out + [s if not nt else f"<{s}>" for nt, s in reversed(stack)]
                    return MappingResult(None, counters, used, wraps, False, selections,
                                         join_tokens(partial))
                wraps += 1
                pos = 0
            idx = choose(text, len(alts), codons[pos])
            pos += 1
            used += 1
        counters[text][idx] += 1
        selections.append((text, idx))
        stack.extend(reversed(alts[idx]))

    return MappingResult(join_tokens(out), counters, used, wraps, True, selections)


def map_ge(genotype: Genotype, grammar: Grammar, max_wraps: int = 0) -> MappingResult:
    """Map an integer genotype with the modulo rule."""
    if genotype.mode != GE:
        raise ValueError("map_ge needs a GE genotype")
    return _derive(grammar, genotype.codons, max_wraps,
                   lambda _name, k, codon: codon % k, consume_single=False)


def select_by_probability(probs: Sequence[float], codon: float) -> int:
    cum = 0.0
    for i, p in enumerate(probs):
        cum += p
        if codon < cum:
            return i
    # cumulative sum may fall short of 1 by rounding
    return len(probs) - 1


def map_pge(genotype: Genotype, pcfg: PCFG, max_wraps: int = 0) -> MappingResult:
    """Map a float genotype against the current PCFG probabilities."""
    if genotype.mode != PGE:
        raise ValueError("map_pge needs a PGE genotype")
    probs = pcfg.probs
    return _derive(pcfg.grammar, genotype.codons, max_wraps,
                   lambda name, _k, codon: select_by_probability(probs[name], codon),
                   consume_single=True)


def map_genotype(genotype: Genotype, grammar_or_pcfg, max_wraps: int = 0) -> MappingResult:
    if genotype.mode == GE:
        grammar = grammar_or_pcfg.grammar if isinstance(grammar_or_pcfg, PCFG) else grammar_or_pcfg
        return map_ge(genotype, grammar, max_wraps)
    return map_pge(genotype, grammar_or_pcfg, max_wraps)
