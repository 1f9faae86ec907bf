"""Grammar probability adaptation from the expansion counts of one individual."""

from __future__ import annotations

import math
from typing import Sequence

from .grammar import PCFG, SUM_TOLERANCE
from .mapper import ExpansionCounters

MAX_PASSES = 100


class NormalizationError(ArithmeticError):
    pass


def check_learning_factor(lam: float) -> float:
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"learning factor must lie in [0, 1], got {lam}")
    return lam


def renormalize(probs: Sequence[float], j: int | None = None) -> list[float]:
    """Spread ``1 - sum(probs)`` equally over the entries until they sum to one.

    Entries are clamped to [0, 1] after each pass. Once an entry sits on a
    bound it stops taking part in further passes in that direction, so the
    loop terminates after at most ``j + 1`` passes; while no entry is
    clamped every pass divides by ``j`` exactly.
    """
    ps = [float(p) for p in probs]
    j = len(ps) if j is None else j
    if j != len(ps):
        raise ValueError(f"expected {j} probabilities, got {len(ps)}")
    if j == 1:
        return [1.0]

    for _ in range(MAX_PASSES):
        missing = 1.0 - math.fsum(ps)
        if abs(missing) <= SUM_TOLERANCE:
            return ps
        if missing > 0:
            free = [i for i, p in enumerate(ps) if p < 1.0]
        else:
            free = [i for i, p in enumerate(ps) if p > 0.0]
        if not free:
            break
        extra = missing / len(free)
        for i in free:
            ps[i] = min(max(ps[i] + extra, 0.0), 1.0)

    if abs(1.0 - math.fsum(ps)) <= SUM_TOLERANCE:
        return ps
    raise NormalizationError(f"probabilities {ps} did not converge to a distribution")


def update_probabilities(pcfg: PCFG, counters: ExpansionCounters, lam: float) -> PCFG:
    """Return a new PCFG nudged towards the productions in ``counters``.

    Per nonterminal: a used production gains ``lam * count / total_count``
    (capped at 1), an unused one loses ``lam`` of its probability, then the
    distribution is renormalized.
    """
    lam = check_learning_factor(lam)
    grammar = pcfg.grammar
    new_probs = {}
    for name in grammar.nonterminals:
        probs = pcfg.probs[name]
        counts = counters.get(name)
        if counts is None or len(counts) != len(probs) or len(probs) != grammar.arity(name):
            raise ValueError(f"counter/probability dimension mismatch for <{name}>")
        total = sum(counts)
        updated = []
        for p, c in zip(probs, counts):
            if c > 0:
                updated.append(min(p + lam * c / total, 1.0))
            else:
                updated.append(p - lam * p)
        new_probs[name] = tuple(renormalize(updated, len(updated)))
    return PCFG(grammar, new_probs)
