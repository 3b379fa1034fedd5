"""Pairwise matching between a driving sequence and a target sequence.

A weighted-LCS dynamic programme over the sparse set of equal-symbol
position pairs.  It returns up to ``beam`` alternative alignments (full
and partial matches), each scored by the summed cost of the matched
driving symbols.  There is no explicit gap penalty: unmatched symbols
simply contribute nothing and inflate the encoding downstream.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Sequence

_MAX_POPS = 20000  # safety valve for pathological tie explosions


@dataclass(frozen=True)
class PairwiseAlignment:
    """An order-preserving set of hit pairs with its driving-side gain."""

    hits: tuple[tuple[int, int], ...]
    raw_gain: float

    def gap_count(self) -> int:
        gaps = 0
        prev = None
        for i, j in self.hits:
            if prev is not None and (i - prev[0] > 1 or j - prev[1] > 1):
                gaps += 1
            prev = (i, j)
        return gaps


def score_hits(alignment: PairwiseAlignment,
               driving_costs: Sequence[float]) -> float:
    """Sum of the costs of the matched driving symbols."""
    return sum(driving_costs[i] for i, _ in alignment.hits)


def match(driving: Sequence, target: Sequence,
          forbidden=frozenset(), beam: int = 6,
          driving_costs: Sequence[float] | None = None
          ) -> list[PairwiseAlignment]:
    """Find up to ``beam`` alternative alignments of two symbol sequences.

    Symbols match when equal; pairs listed in ``forbidden`` are never
    matched.  Results are sorted by raw gain (descending), then fewer
    gaps, then leftmost hits.
    """
    if beam < 1:
        raise ValueError("beam must be >= 1")
    n, m = len(driving), len(target)
    if n == 0 or m == 0:
        return []
    if driving_costs is None:
        driving_costs = [1.0] * n

    # sparse candidate pairs, in lexicographic order
    positions: dict = {}
    for j, sym in enumerate(target):
        positions.setdefault(sym, []).append(j)
    pairs: list[tuple[int, int]] = []
    for i, sym in enumerate(driving):
        for j in positions.get(sym, ()):
            if (i, j) not in forbidden:
                pairs.append((i, j))
    if not pairs:
        return []

    np = len(pairs)
    gains = [driving_costs[pairs[k][0]] for k in range(np)]

    # successors of k: pairs strictly later in both coordinates;
    # best[k] = gain from choosing pair k then continuing optimally
    succ: list[list[int]] = [[] for _ in range(np)]
    best = [0.0] * np
    for k in range(np - 1, -1, -1):
        ik, jk = pairs[k]
        b = 0.0
        sk = succ[k]
        for q in range(k + 1, np):
            iq, jq = pairs[q]
            if iq > ik and jq > jk:
                sk.append(q)
                if best[q] > b:
                    b = best[q]
        best[k] = gains[k] + b

    # best-first enumeration of distinct hit chains
    heap: list = []
    for k in range(np):
        heapq.heappush(heap, (-best[k], (k,), False))
    emitted: list[PairwiseAlignment] = []
    pops = 0
    while heap and len(emitted) < beam and pops < _MAX_POPS:
        pops += 1
        neg_bound, chain, complete = heapq.heappop(heap)
        if complete:
            hits = tuple(pairs[k] for k in chain)
            emitted.append(PairwiseAlignment(hits, -neg_bound))
            continue
        prefix = -neg_bound - best[chain[-1]] + gains[chain[-1]]
        heapq.heappush(heap, (-prefix, chain, True))
        for q in succ[chain[-1]]:
            heapq.heappush(heap, (-(prefix + best[q]), chain + (q,), False))

    emitted.sort(key=lambda a: (-a.raw_gain, a.gap_count(), a.hits))
    return emitted


def brute_force_best_gain(driving: Sequence, target: Sequence,
                          forbidden=frozenset(),
                          driving_costs: Sequence[float] | None = None
                          ) -> float:
    """Exhaustive best gain over all order-preserving matchings.

    Exponential; intended as a desk-scale oracle for tests.
    """
    if driving_costs is None:
        driving_costs = [1.0] * len(driving)

    def rec(i, j):
        if i >= len(driving) or j >= len(target):
            return 0.0
        best = max(rec(i + 1, j), rec(i, j + 1))
        if driving[i] == target[j] and (i, j) not in forbidden:
            best = max(best, driving_costs[i] + rec(i + 1, j + 1))
        return best

    return rec(0, 0)
