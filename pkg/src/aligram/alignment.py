"""Multiple alignments: assembly, legality, projection, codes and search.

An alignment holds one pattern from New in row 0 and patterns from Old
in the rows below; matched symbols share columns.  Alignments are built
cyclically: the New pattern is matched against every stored pattern,
then the best alignments so far are treated as single sequences and
matched against the stored patterns and against each other, until
scores stop improving.

Scores are compression-based: C = N_r - N_e, the raw bit size of the
New pattern minus the bit size of the code read off the alignment.
"""

from __future__ import annotations

import heapq
import itertools
from collections import namedtuple
from dataclasses import dataclass

from . import matcher
from .coding import CostTable
from .core import Config, Origin, Pattern, Role, Store, Symbol

Occ = namedtuple("Occ", "uid pid pos")

_uid_counter = itertools.count(1)

CPFN_UID = 0


class NoParseError(Exception):
    """No alignment could be formed for the given pattern."""


class NotProjectableError(ValueError):
    """The alignment contains an illegal mismatch between stored patterns."""


class Row:
    """One appearance of a pattern in an alignment.

    ``symbols`` is a snapshot of the pattern's symbols at alignment-build
    time, so later class-symbol insertions cannot shift positions under
    an existing alignment.
    """

    __slots__ = ("uid", "pattern", "symbols")

    def __init__(self, uid: int, pattern: Pattern):
        self.uid = uid
        self.pattern = pattern
        self.symbols = pattern.symbols


@dataclass(frozen=True)
class CodePattern:
    """The encoding read off an alignment, with its bit size."""

    symbols: tuple[Symbol, ...]
    bits: float

    def render(self) -> str:
        return " ".join(s.name for s in self.symbols)


class MultipleAlignment:
    __slots__ = ("rows", "columns", "layout", "matched", "legal", "key",
                 "compression", "_projection")

    def __init__(self, rows, columns, layout, matched, legal, key):
        self.rows = rows          # tuple[Row], rows[0] holds the New pattern
        self.columns = columns    # tuple[tuple[Occ, ...]]
        self.layout = layout      # tuple of ('c', col_idx) | ('o', row, pos)
        self.matched = matched    # per row: list[bool] per position
        self.legal = legal        # no illegal Old/Old mismatch
        self.key = key            # canonical structural key
        self.compression = None   # filled by the builder
        self._projection = None

    def row_index_of_uid(self, uid: int) -> int:
        for i, r in enumerate(self.rows):
            if r.uid == uid:
                return i
        raise KeyError(uid)

    def symbol_at(self, row_idx: int, pos: int) -> Symbol:
        return self.rows[row_idx].symbols[pos]

    def slot_symbol(self, slot) -> Symbol:
        if slot[0] == "c":
            occ = self.columns[slot[1]][0]
            return self.symbol_at(self.row_index_of_uid(occ.uid), occ.pos)
        return self.symbol_at(slot[1], slot[2])

    def projection_items(self):
        """The alignment as a single sequence; unmatched row-0 symbols drop."""
        if self._projection is None:
            items = []
            uid_to_idx = {r.uid: i for i, r in enumerate(self.rows)}
            for slot in self.layout:
                if slot[0] == "c":
                    col = self.columns[slot[1]]
                    sym = self.symbol_at(uid_to_idx[col[0].uid], col[0].pos)
                    items.append((sym.type, col))
                else:
                    _, r, pos = slot
                    if r == 0:
                        continue
                    row = self.rows[r]
                    occ = Occ(row.uid, row.pattern.id, pos)
                    items.append((row.symbols[pos].type, (occ,)))
            self._projection = tuple(items)
        return self._projection


def fresh_uid() -> int:
    return next(_uid_counter)


def _universal_block(a: Occ, b: Occ) -> bool:
    # one symbol occurrence may never be matched with itself, directly or
    # across two appearances of the same pattern
    return a.pid == b.pid and a.pos == b.pos


def assemble(rows, columns, forbidden_rule=None, require_legal=True):
    """Normalise, validate and lay out an alignment; None when invalid.

    ``columns`` is an iterable of occurrence collections; columns sharing
    an occurrence are unified.  Validity requires consistent symbol
    types, no self-matches, no forbidden pairs, a consistent left-right
    order, and (``require_legal``) no mismatch between two Old rows.
    """
    rows = tuple(rows)
    uid_to_idx = {r.uid: i for i, r in enumerate(rows)}

    # union columns that share occurrences
    parent: dict[Occ, int] = {}
    groups: list[set[Occ] | None] = []
    for col in columns:
        merged: set[Occ] = set()
        gids = set()
        for occ in col:
            if occ in parent:
                gids.add(parent[occ])
            merged.add(occ)
        for g in gids:
            merged |= groups[g]
            groups[g] = None
        gid = len(groups)
        groups.append(merged)
        for occ in merged:
            parent[occ] = gid
    # singleton groups are no-op self matches, not columns
    cols = [g for g in groups if g and len(g) >= 2]

    # per-column validity
    for col in cols:
        occs = sorted(col)
        seen_uids = set()
        t0 = None
        for occ in occs:
            if occ.uid in seen_uids or occ.uid not in uid_to_idx:
                return None
            seen_uids.add(occ.uid)
            t = rows[uid_to_idx[occ.uid]].symbols[occ.pos].type
            if t0 is None:
                t0 = t
            elif t is not t0:
                return None
        for i, a in enumerate(occs):
            for b in occs[i + 1:]:
                if _universal_block(a, b):
                    return None
                if forbidden_rule and forbidden_rule(a, b):
                    return None

    # order columns and unmatched occurrences by a topological merge
    col_of: dict[tuple[int, int], int] = {}
    for ci, col in enumerate(cols):
        for occ in col:
            col_of[(uid_to_idx[occ.uid], occ.pos)] = ci

    n_cols = len(cols)
    node_count = n_cols  # columns first, then one node per unmatched occ
    occ_node: dict[tuple[int, int], int] = {}
    node_slot: list = [("c", ci) for ci in range(n_cols)]
    succs: list[list[int]] = [[] for _ in range(n_cols)]
    indeg = [0] * n_cols

    def node_for(r, pos):
        nonlocal node_count
        key = (r, pos)
        if key in col_of:
            return col_of[key]
        if key not in occ_node:
            occ_node[key] = node_count
            node_slot.append(("o", r, pos))
            succs.append([])
            indeg.append(0)
            node_count += 1
        return occ_node[key]

    for r, row in enumerate(rows):
        prev = None
        for pos in range(len(row.symbols)):
            node = node_for(r, pos)
            if prev is not None and prev != node:
                succs[prev].append(node)
                indeg[node] += 1
            prev = node

    # Kahn's algorithm; unmatched symbols come out as early as possible
    def col_key(ci):
        return min((uid_to_idx[o.uid], o.pos) for o in cols[ci])

    ready_occ: list = []
    ready_col: list = []
    for node in range(node_count):
        if indeg[node] == 0:
            slot = node_slot[node]
            if slot[0] == "c":
                heapq.heappush(ready_col, (col_key(slot[1]), node))
            else:
                heapq.heappush(ready_occ, (slot[1:], node))

    layout = []
    emitted = 0
    while ready_occ or ready_col:
        if ready_occ:
            _, node = heapq.heappop(ready_occ)
        else:
            _, node = heapq.heappop(ready_col)
        layout.append(node_slot[node])
        emitted += 1
        for nxt in succs[node]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                slot = node_slot[nxt]
                if slot[0] == "c":
                    heapq.heappush(ready_col, (col_key(slot[1]), nxt))
                else:
                    heapq.heappush(ready_occ, (slot[1:], nxt))
    if emitted != node_count:
        return None  # ordering conflict between rows

    # renumber columns in layout order
    order = [slot[1] for slot in layout if slot[0] == "c"]
    remap = {old: new for new, old in enumerate(order)}
    cols_sorted = [tuple(sorted(cols[old])) for old in order]
    layout = tuple(("c", remap[s[1]]) if s[0] == "c" else s for s in layout)

    matched = [[False] * len(row.symbols) for row in rows]
    for col in cols_sorted:
        for occ in col:
            matched[uid_to_idx[occ.uid]][occ.pos] = True

    legal = _check_legal(rows, layout)
    if require_legal and not legal:
        return None

    key = _canonical_key(rows, cols_sorted, uid_to_idx)
    return MultipleAlignment(rows, tuple(cols_sorted), layout, matched,
                             legal, key)


def _check_legal(rows, layout) -> bool:
    gap_rows: set[int] = set()
    for slot in layout:
        if slot[0] == "c":
            if len(gap_rows) >= 2:
                return False
            gap_rows.clear()
        elif slot[1] != 0:
            gap_rows.add(slot[1])
    return len(gap_rows) < 2


def _canonical_key(rows, cols_sorted, uid_to_idx):
    col_idx_of = {}
    for ci, col in enumerate(cols_sorted):
        for occ in col:
            col_idx_of[(uid_to_idx[occ.uid], occ.pos)] = ci
    sigs = []
    for r, row in enumerate(rows):
        hits = tuple((col_idx_of[(r, pos)], pos)
                     for pos in range(len(row.symbols))
                     if (r, pos) in col_idx_of)
        sigs.append((row.pattern.id, hits))
    return (sigs[0], tuple(sorted(sigs[1:])))


# -- inspection ------------------------------------------------------------


def is_projectable(al: MultipleAlignment) -> bool:
    """True when the alignment has no mismatch between two Old rows."""
    return al.legal


def project(al: MultipleAlignment) -> list[Symbol]:
    """The alignment as a plain symbol sequence (unmatched New drops out)."""
    if not al.legal:
        raise NotProjectableError("alignment has an illegal mismatch")
    return [al.slot_symbol(slot) for slot in al.layout
            if not (slot[0] == "o" and slot[1] == 0)]


def is_full(al: MultipleAlignment) -> bool:
    """All New symbols matched and all Old Contents symbols matched."""
    if not all(al.matched[0]):
        return False
    for r in range(1, len(al.rows)):
        for pos, sym in enumerate(al.rows[r].symbols):
            if sym.role is Role.CONTENTS and not al.matched[r][pos]:
                return False
    return True


def code_symbols(al: MultipleAlignment) -> list[Symbol]:
    """Code for the alignment: every ID symbol sitting alone in its
    column, scanned left to right.  When the pattern in row 0 is itself
    a code (production), its unmatched symbols are ID symbols too and
    are charged the same way."""
    out = []
    for slot in al.layout:
        if slot[0] != "o":
            continue
        _, r, pos = slot
        sym = al.rows[r].symbols[pos]
        if sym.role is Role.ID:
            out.append(sym)
    return out


def derive_code(al: MultipleAlignment, table: CostTable) -> CodePattern:
    syms = tuple(code_symbols(al))
    return CodePattern(syms, sum(table.cost(s.type) for s in syms))


def score(al: MultipleAlignment, table: CostTable) -> float:
    """Compression score C = N_r - N_e."""
    n_r = sum(table.cost(s.type) for s in al.rows[0].symbols)
    return n_r - derive_code(al, table).bits


def realized_words(al: MultipleAlignment) -> list[str]:
    """Data symbols of the alignment in left-to-right order."""
    return [al.slot_symbol(slot).name for slot in al.layout
            if al.slot_symbol(slot).type.origin is Origin.DATA]


# -- the cyclic builder ----------------------------------------------------


def _pattern_items(pattern: Pattern, uid: int):
    return tuple((sym.type, (Occ(uid, pattern.id, pos),))
                 for pos, sym in enumerate(pattern.symbols))


def _pair_blocked(a: Occ, b: Occ, rule) -> bool:
    # a column may hold one occurrence per row, so two different
    # positions of the same row can never be unified; the same goes for
    # the same position of two appearances of one pattern
    if a.uid == b.uid:
        return True
    if _universal_block(a, b):
        return True
    return rule is not None and rule(a, b)


def _forbidden_pairs(d_items, t_items, rule):
    pairs = set()
    tpos: dict = {}
    for j, (t, _) in enumerate(t_items):
        tpos.setdefault(t, []).append(j)
    for i, (t, d_occs) in enumerate(d_items):
        for j in tpos.get(t, ()):
            t_occs = t_items[j][1]
            blocked = False
            for a in d_occs:
                for b in t_occs:
                    if a == b or _pair_blocked(a, b, rule):
                        blocked = True
                        break
                if blocked:
                    break
            if blocked:
                pairs.add((i, j))
    return pairs


def _spread(al: MultipleAlignment) -> int:
    # how far matches stray from contiguity, summed over rows
    total = 0
    for r in range(len(al.rows)):
        hits = [pos for pos, m in enumerate(al.matched[r]) if m]
        if hits:
            total += hits[-1] - hits[0] + 1 - len(hits)
    return total


def _order_key(al: MultipleAlignment):
    return (-al.compression, len(al.rows),
            tuple(sorted(r.pattern.id for r in al.rows)),
            _spread(al), -len(al.columns), al.key)


def _structure_key(al: MultipleAlignment):
    return tuple(sorted(r.pattern.id for r in al.rows))


class _Builder:
    def __init__(self, cpfn: Pattern, store: Store, config: Config,
                 table: CostTable, forbidden_rule):
        self.config = config
        self.table = table
        self.rule = forbidden_rule
        self.cpfn_row = Row(CPFN_UID, cpfn)
        self.cpfn_items = _pattern_items(cpfn, CPFN_UID)
        self.targets = list(store.old_patterns)
        self.target_items = {p.id: tuple(sym.type for sym in p.symbols)
                             for p in self.targets}
        self.pool: dict = {}
        self.pool_list: list[MultipleAlignment] = []

    def _match_and_merge(self, d_rows, d_cols, d_items, target):
        """Match a driving entity against one target; yield alignments."""
        cfg = self.config
        if isinstance(target, Pattern):
            uid = fresh_uid()
            t_items = _pattern_items(target, uid)
            t_rows, t_cols = (Row(uid, target),), ()
        else:
            t_items = target.projection_items()
            t_rows, t_cols = target.rows, target.columns
        d_types = [t.index for t, _ in d_items]
        t_types = [t.index for t, _ in t_items]
        if not set(d_types) & set(t_types):
            return
        need_rule = self.rule is not None or not isinstance(target, Pattern)
        forbidden = (_forbidden_pairs(d_items, t_items, self.rule)
                     if need_rule else frozenset())
        costs = [self.table.cost(t) for t, _ in d_items]
        results = matcher.match(d_types, t_types, forbidden,
                                beam=cfg.pairwise_beam, driving_costs=costs)
        known_uids = {r.uid for r in d_rows}
        rows = list(d_rows) + [r for r in t_rows if r.uid not in known_uids]
        base_cols = list(d_cols) + list(t_cols)
        for res in results:
            cols = base_cols + [set(d_items[i][1]) | set(t_items[j][1])
                                for i, j in res.hits]
            al = assemble(rows, cols, forbidden_rule=self.rule)
            if al is not None:
                yield al

    def _select(self, candidates, limit=None):
        if limit is None:
            limit = self.config.select_per_cycle
        fresh = []
        seen = set()
        for al in candidates:
            if al.key in self.pool or al.key in seen:
                continue
            seen.add(al.key)
            al.compression = score(al, self.table)
            fresh.append(al)
        fresh.sort(key=_order_key)
        # one alignment per row-pattern combination per batch, so that
        # alternative analyses spread over distinct structures
        chosen = []
        structures = set()
        for al in fresh:
            sk = _structure_key(al)
            if sk in structures:
                continue
            structures.add(sk)
            chosen.append(al)
            if len(chosen) >= limit:
                break
        for al in chosen:
            self.pool[al.key] = al
            self.pool_list.append(al)
        return chosen

    def run(self, max_cycles: int = 16) -> list[MultipleAlignment]:
        cfg = self.config
        # cycle 1: the pattern from New against every stored pattern;
        # the survivors per target are the bricks that later cycles fold
        # into multi-row alignments, so each target keeps its own best
        chosen = []
        for target in self.targets:
            candidates = list(self._match_and_merge(
                (self.cpfn_row,), (), self.cpfn_items, target))
            chosen.extend(self._select(candidates, limit=2))
        frontier = list(chosen)
        best_prev = max((al.compression for al in chosen), default=None)
        peaked = False
        falling = 0
        cycle = 1
        per_driving = max(1, cfg.select_per_cycle // cfg.driving_count)

        def frontier_key(al):
            # drive alignments nearest to full coverage first; literal
            # charges dominate the score, so this chases the score's
            # biggest lever while letting part-built analyses finish
            return (al.matched[0].count(False),) + _order_key(al)

        while frontier and cycle < max_cycles:
            cycle += 1
            frontier.sort(key=frontier_key)
            drivings = frontier[:cfg.driving_count]
            frontier = frontier[cfg.driving_count:]
            targets = list(self.targets) + list(self.pool_list)
            chosen = []
            for d in drivings:
                d_items = d.projection_items()
                candidates = []
                for target in targets:
                    candidates.extend(self._match_and_merge(
                        d.rows, d.columns, d_items, target))
                chosen.extend(self._select(candidates, limit=per_driving))
            frontier.extend(chosen)
            if not chosen:
                continue
            best_new = max(al.compression for al in chosen)
            # halting wants a genuine peak: scores must rise before a
            # run of falling cycles is allowed to stop the search
            if best_prev is None or best_new > best_prev:
                peaked = peaked or best_prev is not None
                falling = 0
            elif best_new < best_prev and peaked:
                falling += 1
                if falling >= cfg.halt_window:
                    break
            best_prev = best_new
        return sorted(self.pool_list, key=_order_key)


def build_alignments(cpfn: Pattern, store: Store, config: Config,
                     table: CostTable, forbidden_rule=None,
                     max_cycles: int = 16) -> list[MultipleAlignment]:
    """All alignments retained while encoding ``cpfn`` against the store.

    Returned sorted by compression score (descending) with deterministic
    structural tie-breaks.
    """
    builder = _Builder(cpfn, store, config, table, forbidden_rule)
    return builder.run(max_cycles=max_cycles)


def copy_alignment(cpfn: Pattern, copy: Pattern) -> MultipleAlignment:
    """The alignment matching a New pattern symbol-for-symbol to its copy."""
    uid = fresh_uid()
    start = copy.contents_start()
    cols = [(Occ(CPFN_UID, cpfn.id, i), Occ(uid, copy.id, start + i))
            for i in range(len(cpfn.symbols))]
    al = assemble((Row(CPFN_UID, cpfn), Row(uid, copy)), cols)
    assert al is not None
    return al


# -- parsing and production over a fixed grammar ---------------------------


def grammar_cost_table(store: Store, config: Config,
                       extra_patterns=()) -> CostTable:
    """Cost table for parse/produce: frequencies from the grammar itself."""
    from .coding import compile_alphabet, sfe_lengths, weighted_costs

    freqs = compile_alphabet(store.old_patterns)
    for p in extra_patterns:
        for s in p.symbols:
            freqs.setdefault(s.type, 1)
    lengths = sfe_lengths(freqs)
    return weighted_costs(lengths, config)


def parse(new_pattern: Pattern, grammar_store: Store, config: Config,
          table: CostTable | None = None):
    """Best alignment of a New pattern against a fixed grammar, plus code."""
    if table is None:
        table = grammar_cost_table(grammar_store, config,
                                   extra_patterns=(new_pattern,))
    pool = build_alignments(new_pattern, grammar_store, config, table)
    if not pool:
        raise NoParseError(new_pattern.render())
    best = pool[0]
    return best, derive_code(best, table)


def produce(code: Pattern, grammar_store: Store, config: Config,
            table: CostTable | None = None) -> MultipleAlignment:
    """Run with a code pattern in New; the best alignment spells the
    original contents in order."""
    best, _ = parse(code, grammar_store, config, table)
    return best


# -- display ---------------------------------------------------------------


def render(al: MultipleAlignment) -> str:
    """Pretty-print in the column layout: row 0 on top, '|' connectors."""
    widths = []
    for slot in al.layout:
        widths.append(len(al.slot_symbol(slot).name))
    n_rows = len(al.rows)
    spans = []
    uid_to_idx = {r.uid: i for i, r in enumerate(al.rows)}
    for si, slot in enumerate(al.layout):
        if slot[0] == "c":
            rs = [uid_to_idx[o.uid] for o in al.columns[slot[1]]]
            spans.append((min(rs), max(rs)))
        else:
            spans.append((slot[1], slot[1]))

    def cell(text, width):
        return text.ljust(width)

    occupants: list[dict[int, str]] = [dict() for _ in range(n_rows)]
    for si, slot in enumerate(al.layout):
        name = al.slot_symbol(slot).name
        if slot[0] == "c":
            for occ in al.columns[slot[1]]:
                occupants[uid_to_idx[occ.uid]][si] = name
        else:
            occupants[slot[1]][si] = name

    margin = len(str(n_rows - 1))
    lines = []
    for r in range(n_rows):
        parts = []
        for si in range(len(al.layout)):
            if si in occupants[r]:
                parts.append(cell(occupants[r][si], widths[si]))
            elif spans[si][0] < r < spans[si][1]:
                parts.append(cell("|", widths[si]))
            else:
                parts.append(cell("", widths[si]))
        body = " ".join(parts).rstrip()
        lines.append(f"{str(r).rjust(margin)} {body} {r}")
        if r < n_rows - 1:
            parts = []
            for si in range(len(al.layout)):
                lo, hi = spans[si]
                parts.append(cell("|" if lo <= r < hi else "", widths[si]))
            conn = " ".join(parts).rstrip()
            lines.append(f"{' ' * margin} {conn}")
    return "\n".join(lines)
