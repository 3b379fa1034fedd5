"""Sifting and sorting: score the stored patterns and compile grammars.

After the generation phase, every pattern from New is re-aligned
against the full store.  Only full alignments count: frequencies of
patterns and symbol types are re-derived from them, symbols are
re-costed, and a pruned tree of alternative grammars is grown one
pattern-from-New at a time, each grammar scored by T = G + E.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .alignment import (MultipleAlignment, build_alignments, copy_alignment,
                        derive_code, is_full, score)
from .coding import CostTable, learning_cost_table, sfe_lengths, weighted_costs
from .core import (Config, LEFT_BRACKET, Origin, Pattern, PatternOrigin,
                   RIGHT_BRACKET, Role, Store, Symbol, SymbolType)


class SiftingError(RuntimeError):
    """A pattern from New has no full alignment against the store."""


@dataclass
class Grammar:
    """A scored subset of Old with one chosen full alignment per PFN."""

    patterns: list[Pattern]
    provenance: list[MultipleAlignment]
    G: float
    E: float

    @property
    def T(self) -> float:
        return self.G + self.E


@dataclass
class GrammarView:
    """A renderable grammar: symbol rows plus scores.

    Cleaned grammars are views detached from the store, so renumbering
    cannot disturb the alphabet used for scoring.
    """

    rows: list[tuple[Symbol, ...]]
    G: float
    E: float

    @property
    def T(self) -> float:
        return self.G + self.E

    def render_lines(self) -> list[str]:
        return [" ".join(s.name for s in row) for row in self.rows]

    def render(self) -> str:
        return "\n".join(self.render_lines())


@dataclass
class TraceRow:
    stage: int
    G: float
    E: float
    T: float
    T_naive: float


@dataclass
class SiftResult:
    grammars: list[Grammar]              # all survivors, best first
    cleaned: list[GrammarView]           # top grammars after cleanup
    uncleaned: list[GrammarView]         # the same grammars before cleanup
    naive: GrammarView
    trace: list[TraceRow]
    subsets: list[list[MultipleAlignment]]
    cost_table: CostTable


def full_alignment_sets(store: Store, config: Config,
                        table: CostTable) -> list[list[MultipleAlignment]]:
    """Per-PFN subsets of full alignments, re-built against the store.

    The symbol-for-symbol alignment of each PFN with its own copy is
    always included, so every PFN has at least one full alignment and
    the naive baseline stays scoreable.
    """
    subsets = []
    for pfn in store.new_patterns:
        pool = build_alignments(pfn, store, config, table)
        full = [al for al in pool if is_full(al)]
        copy = store.copies.get(pfn.id)
        if copy is not None and not any(
                al.key == copy_alignment(pfn, copy).key for al in full):
            ca = copy_alignment(pfn, copy)
            ca.compression = score(ca, table)
            full.append(ca)
        if not full:
            raise SiftingError(f"no full alignment for pattern {pfn.id}")
        subsets.append(full)
    return subsets


def pattern_frequencies(subsets) -> dict[Pattern, int]:
    """f_i: summed over PFNs, the maximum appearance count of a pattern
    in any one full alignment for that PFN."""
    freqs: dict[Pattern, int] = {}
    for subset in subsets:
        maxima: dict[Pattern, int] = {}
        for al in subset:
            counts: dict[Pattern, int] = {}
            for row in al.rows[1:]:
                counts[row.pattern] = counts.get(row.pattern, 0) + 1
            for p, c in counts.items():
                if c > maxima.get(p, 0):
                    maxima[p] = c
        for p, c in maxima.items():
            freqs[p] = freqs.get(p, 0) + c
    return freqs


def _type_counts(al: MultipleAlignment) -> dict[SymbolType, int]:
    # a matched column is one unified appearance of its type
    counts: dict[SymbolType, int] = {}
    for slot in al.layout:
        t = al.slot_symbol(slot).type
        counts[t] = counts.get(t, 0) + 1
    return counts


def symbol_frequencies(subsets) -> dict[SymbolType, int]:
    """F_i: like pattern frequencies, at symbol-type granularity."""
    freqs: dict[SymbolType, int] = {}
    for subset in subsets:
        maxima: dict[SymbolType, int] = {}
        for al in subset:
            for t, c in _type_counts(al).items():
                if c > maxima.get(t, 0):
                    maxima[t] = c
        for t, c in maxima.items():
            freqs[t] = freqs.get(t, 0) + c
    return freqs


def sifting_cost_table(freqs: dict[SymbolType, int],
                       config: Config) -> CostTable:
    used = {t: f for t, f in freqs.items() if f > 0}
    lengths = sfe_lengths(used)
    table = weighted_costs(lengths, config)
    table.total_frequency = sum(used.values())
    return table


def _pattern_bits_cached(cache, table, pattern):
    bits = cache.get(pattern.id)
    if bits is None:
        bits = sum(table.cost(s.type) for s in pattern.symbols)
        cache[pattern.id] = bits
    return bits


@dataclass
class _State:
    ids: frozenset
    patterns: list[Pattern]
    provenance: list[MultipleAlignment]
    G: float
    E: float

    @property
    def T(self):
        return self.G + self.E


def compile_grammars(subsets, table: CostTable, config: Config,
                     naive_codes=None):
    """Grow the pruned tree of alternative grammars, one PFN per stage.

    Returns the surviving grammars (best first) and the per-stage trace
    of the best grammar's G, E and T beside the naive baseline.
    """
    bits_cache: dict[int, float] = {}
    code_bits = {}
    for subset in subsets:
        for al in subset:
            code_bits[id(al)] = derive_code(al, table).bits

    states = [_State(frozenset(), [], [], 0.0, 0.0)]
    trace: list[TraceRow] = []
    naive_g = naive_e = 0.0
    for stage, subset in enumerate(subsets, 1):
        next_states: dict[frozenset, _State] = {}
        for st in states:
            for al in subset:
                added = []
                seen = set(st.ids)
                for row in al.rows[1:]:
                    if row.pattern.id not in seen:
                        seen.add(row.pattern.id)
                        added.append(row.pattern)
                g = st.G + sum(_pattern_bits_cached(bits_cache, table, p)
                               for p in added)
                e = st.E + code_bits[id(al)]
                key = frozenset(seen)
                cur = next_states.get(key)
                if cur is None or g + e < cur.T:
                    next_states[key] = _State(
                        key, st.patterns + added, st.provenance + [al], g, e)
        states = sorted(next_states.values(),
                        key=lambda s: (s.T, len(s.patterns),
                                       tuple(sorted(s.ids))))
        states = states[:config.grammar_tree_width]
        best = states[0]
        if naive_codes is not None:
            g_bits, e_bits = naive_codes[stage - 1]
            naive_g += g_bits
            naive_e += e_bits
        trace.append(TraceRow(stage, best.G, best.E, best.T,
                              naive_g + naive_e))
    grammars = [Grammar(s.patterns, s.provenance, s.G, s.E) for s in states]
    return grammars, trace


def naive_grammar(store: Store, table: CostTable) -> GrammarView:
    """Baseline: the ID-wrapped copies of the New patterns, nothing else."""
    rows = []
    g = e = 0.0
    for pfn in store.new_patterns:
        copy = store.copies[pfn.id]
        rows.append(copy.symbols)
        g += sum(table.cost(s.type) for s in copy.symbols)
        e += sum(table.cost(s.type) for s in copy.symbols
                 if s.role is Role.ID)
    return GrammarView(rows, g, e)


def naive_stage_costs(store: Store, table: CostTable):
    """Per-PFN (grammar bits, code bits) increments of the naive baseline."""
    out = []
    for pfn in store.new_patterns:
        copy = store.copies[pfn.id]
        g = sum(table.cost(s.type) for s in copy.symbols)
        e = sum(table.cost(s.type) for s in copy.symbols
                if s.role is Role.ID)
        out.append((g, e))
    return out


def raw_view(grammar: Grammar, order=None) -> GrammarView:
    patterns = sorted(grammar.patterns, key=lambda p: p.id)
    return GrammarView([p.symbols for p in patterns], grammar.G, grammar.E)


def clean_grammar(grammar: Grammar, table: CostTable) -> GrammarView:
    """Drop referent-less class symbols, renumber tidily, and rescore.

    Renumbering is cosmetic (costs travel with the symbols); removal
    shrinks both the grammar and any codes the removed symbols appeared
    in, so the cleaned T never exceeds the uncleaned T.
    """
    patterns = sorted(grammar.patterns, key=lambda p: p.id)
    referenced = set()
    for p in patterns:
        for s in p.symbols:
            if s.role is Role.CONTENTS and s.name.startswith("%"):
                referenced.add(s.name)
    removed: dict[int, set[int]] = {}
    for p in patterns:
        gone = {pos for pos, s in enumerate(p.symbols)
                if s.role is Role.ID and s.name.startswith("%")
                and s.name not in referenced}
        if gone:
            removed[p.id] = gone

    g_bits = 0.0
    kept_rows = []
    for p in patterns:
        gone = removed.get(p.id, ())
        row = tuple(s for pos, s in enumerate(p.symbols) if pos not in gone)
        kept_rows.append(row)
        g_bits += sum(table.cost(s.type) for s in row)

    e_bits = 0.0
    for al in grammar.provenance:
        for slot in al.layout:
            if slot[0] != "o":
                continue
            _, r, pos = slot
            row = al.rows[r]
            if r != 0 and pos in removed.get(row.pattern.id, ()):
                continue
            sym = row.symbols[pos]
            if r == 0 or sym.role is Role.ID:
                e_bits += table.cost(sym.type)

    return GrammarView(_renumber(kept_rows), g_bits, e_bits)


def _renumber(rows):
    class_map: dict[str, str] = {}
    disc_map: dict[str, str] = {}
    local: dict[tuple[str, Origin], SymbolType] = {}

    def intern(name, origin):
        st = local.get((name, origin))
        if st is None:
            st = SymbolType(name, origin, len(local))
            local[(name, origin)] = st
        return st

    out = []
    for row in rows:
        new_row = []
        for s in row:
            name = s.name
            if name.startswith("%"):
                if name not in class_map:
                    class_map[name] = f"%{len(class_map) + 1}"
                name = class_map[name]
            elif s.role is Role.ID and name.isdigit():
                if name not in disc_map:
                    disc_map[name] = str(len(disc_map) + 1)
                name = disc_map[name]
            new_row.append(Symbol(intern(name, s.type.origin), s.role))
        out.append(tuple(new_row))
    return out


def sift_and_sort(store: Store, config: Config) -> SiftResult:
    """The whole evaluation phase, per the second half of the main loop."""
    learn_table = learning_cost_table(store, config)
    for p in store.old_patterns:
        p.frequency = 0
    for t in store.alphabet.values():
        t.frequency = 0

    subsets = full_alignment_sets(store, config, learn_table)

    for p, f in pattern_frequencies(subsets).items():
        p.frequency = f
    type_freqs = symbol_frequencies(subsets)
    for t, f in type_freqs.items():
        t.frequency = f

    table = sifting_cost_table(type_freqs, config)
    for al_subset in subsets:
        for al in al_subset:
            al.compression = score(al, table)

    naive_costs = naive_stage_costs(store, table)
    grammars, trace = compile_grammars(subsets, table, config, naive_costs)
    top = grammars[:config.max_output_grammars]
    return SiftResult(
        grammars=grammars,
        cleaned=[clean_grammar(g, table) for g in top],
        uncleaned=[raw_view(g) for g in top],
        naive=naive_grammar(store, table),
        trace=trace,
        subsets=subsets,
        cost_table=table,
    )


# -- grammar files ----------------------------------------------------------


def save_grammar(view: GrammarView, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in view.render_lines():
            fh.write(line + "\n")


class GrammarFormatError(ValueError):
    """A grammar file line does not have the '< ids contents >' shape."""


def _system_token(tok: str) -> bool:
    return (tok in (LEFT_BRACKET, RIGHT_BRACKET)
            or tok.startswith("%") or tok.isdigit())


def load_grammar(path) -> Store:
    """Read a grammar file into a fresh store's Old pool."""
    store = Store()
    with open(path, encoding="utf-8") as fh:
        lines = [line.split() for line in fh if line.split()]
    if not lines:
        raise GrammarFormatError("grammar file holds no patterns")
    for tokens in lines:
        if tokens[0] != LEFT_BRACKET or tokens[-1] != RIGHT_BRACKET:
            raise GrammarFormatError(
                f"pattern must be bracketed: {' '.join(tokens)!r}")
        i = 1
        symbols = [store.system_symbol(LEFT_BRACKET)]
        while i < len(tokens) - 1 and tokens[i].startswith("%"):
            symbols.append(store.system_symbol(tokens[i]))
            i += 1
        while i < len(tokens) - 1 and tokens[i].isdigit():
            symbols.append(store.system_symbol(tokens[i]))
            i += 1
        for tok in tokens[i:-1]:
            if _system_token(tok):
                symbols.append(store.system_symbol(tok, Role.CONTENTS))
            else:
                symbols.append(store.data_symbol(tok))
        symbols.append(store.system_symbol(RIGHT_BRACKET))
        store.add_old_pattern(tuple(symbols))
    return store
