"""Symbol frequencies, Shannon-Fano-Elias code lengths and bit costs.

Only code *lengths* are ever needed: patterns and codes are priced in
bits, no bit stream is emitted.  Data-symbol costs are inflated by the
configured cost factor so that substructure discovery pays off on small
corpora; system-created symbols carry a flat provisional cost until the
sifting phase computes exact lengths for them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .core import Config, Origin, Pattern, Symbol, SymbolType


class MissingCostError(KeyError):
    """A symbol type has no entry in the cost table."""


def compile_alphabet(patterns) -> dict[SymbolType, int]:
    """Count occurrences of every symbol type in the given patterns."""
    freqs: dict[SymbolType, int] = {}
    for p in patterns:
        for s in p.symbols:
            freqs[s.type] = freqs.get(s.type, 0) + 1
    return freqs


def sfe_lengths(frequencies: dict) -> dict:
    """Shannon-Fano-Elias codeword lengths: ceil(log2(1/p)) + 1 bits.

    Keys may be SymbolType objects or plain strings; the same keys come
    back mapped to integer bit lengths.  All counts must be positive.
    """
    total = sum(frequencies.values())
    lengths = {}
    for key in sorted(frequencies, key=_key_name):
        count = frequencies[key]
        if count <= 0:
            raise ValueError(f"non-positive frequency for {_key_name(key)!r}")
        # ceil(log2(total/count)) computed without float error at powers of 2
        ratio = total / count
        length = math.ceil(math.log2(ratio) - 1e-12) + 1
        lengths[key] = max(1, length)
    return lengths


def _key_name(key) -> str:
    return key.name if isinstance(key, SymbolType) else str(key)


@dataclass
class CostTable:
    """Per-type encoding costs in bits.

    ``default_system_cost`` is the flat provisional cost applied to any
    system symbol not priced explicitly (the learning phase, before
    exact lengths exist for system symbols).
    """

    costs: dict[SymbolType, float] = field(default_factory=dict)
    total_frequency: int = 0
    default_system_cost: float | None = None

    def cost(self, stype: SymbolType) -> float:
        c = self.costs.get(stype)
        if c is not None:
            return c
        if stype.origin is Origin.SYSTEM and self.default_system_cost is not None:
            return self.default_system_cost
        raise MissingCostError(stype.name)

    def symbol_bits(self, symbol: Symbol) -> float:
        return self.cost(symbol.type)

    def dump_rows(self):
        """(token, origin, frequency-weighting source, bits) rows for CSV."""
        for stype in sorted(self.costs, key=lambda t: t.name):
            yield (stype.name, stype.origin.value, stype.frequency,
                   self.costs[stype])


def weighted_costs(lengths: dict[SymbolType, int], config: Config,
                   provisional_system: bool = False) -> CostTable:
    """Turn SFE lengths into a cost table.

    Data types are scaled by the cost factor.  System types keep their
    plain SFE length; with ``provisional_system`` they are instead all
    priced at the flat ``config.system_symbol_cost``.
    """
    table = CostTable(default_system_cost=(
        config.system_symbol_cost if provisional_system else None))
    for stype, length in lengths.items():
        if stype.origin is Origin.DATA:
            table.costs[stype] = length * config.cost_factor
        elif provisional_system:
            table.costs[stype] = config.system_symbol_cost
        else:
            table.costs[stype] = float(length)
    return table


def pattern_bits(pattern: Pattern, table: CostTable) -> float:
    """Total cost of a pattern: the sum of its per-symbol costs."""
    return sum(table.cost(s.type) for s in pattern.symbols)


def symbols_bits(symbols, table: CostTable) -> float:
    return sum(table.cost(s.type) for s in symbols)


def learning_cost_table(store, config: Config) -> CostTable:
    """Cost table for the pattern-generation phase.

    Frequencies come from the corpus alone; system symbols fall back to
    the flat provisional cost.
    """
    freqs = compile_alphabet(store.new_patterns)
    for stype, count in freqs.items():
        stype.frequency = count
    lengths = sfe_lengths(freqs)
    table = weighted_costs(lengths, config, provisional_system=True)
    table.total_frequency = sum(freqs.values())
    return table
