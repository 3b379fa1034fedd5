"""Adding knowledge to the store: copying in New patterns and deriving
segments, classes and abstract patterns from selected alignments.

Each pattern from New is copied into Old under fresh ID symbols; the
copy may be matched against the pattern it came from, but never symbol
position against symbol position.  Alignments that survive the
candidacy constraints are carved into maximal matched and unmatched
runs; every run becomes (or is folded into) a stored pattern, and an
abstract pattern records the sequence of runs through class references.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .alignment import (CPFN_UID, MultipleAlignment, build_alignments)
from .coding import CostTable, learning_cost_table
from .core import (Config, LEFT_BRACKET, Origin, Pattern, RIGHT_BRACKET,
                   Role, Store, Symbol)


def ingest_cpfn(cpfn: Pattern, store: Store) -> Pattern:
    """Copy a pattern from New into Old under '<' class disc ... '>'."""
    copy = store.add_wrapped_pattern(cpfn.symbols,
                                     (store.fresh_class_symbol(),))
    store.copies[cpfn.id] = copy
    return copy


def copy_match_rule(cpfn: Pattern, copy: Pattern):
    """Forbid matching a New symbol against its own copy position or later.

    Keeps internal repetition discoverable while hiding the redundancy
    created by the copying itself.
    """
    start = copy.contents_start()
    n = len(cpfn.symbols)
    cid, kid = cpfn.id, copy.id

    def rule(a, b):
        if a.pid == kid and b.pid == cid:
            a, b = b, a
        if a.pid == cid and a.uid == CPFN_UID and b.pid == kid:
            body = b.pos - start
            return 0 <= body < n and body >= a.pos
        return False

    return rule


def most_abstract_row(al: MultipleAlignment) -> int:
    """The below-top row starting leftmost (ties: rightmost end, lowest)."""
    if len(al.rows) < 2:
        raise ValueError("alignment needs at least two rows")
    slot_index: dict[tuple[int, int], int] = {}
    uid_to_idx = {r.uid: i for i, r in enumerate(al.rows)}
    for idx, slot in enumerate(al.layout):
        if slot[0] == "c":
            for occ in al.columns[slot[1]]:
                slot_index[(uid_to_idx[occ.uid], occ.pos)] = idx
        else:
            slot_index[(slot[1], slot[2])] = idx
    best = None
    for r in range(1, len(al.rows)):
        first = slot_index[(r, 0)]
        last = slot_index[(r, len(al.rows[r].symbols) - 1)]
        key = (first, -last, r)
        if best is None or key < best[0]:
            best = (key, r)
    return best[1]


def select_for_derivation(alignments, config: Config) -> list:
    """Alignments worth deriving patterns from.

    Below the top row, only the most abstract row may contain unmatched
    Contents symbols, and there must be something unmatched to learn
    from in the top row or the most abstract row.  Among the candidates,
    the ones encodable with the least ID-symbol overhead come first:
    that favours whole-pattern alignments whose mismatched stretches
    carry the class structure worth learning.
    """
    candidates = [al for al in alignments if _derivation_candidate(al)]
    candidates.sort(key=_derivation_rank)
    return candidates[:config.select_per_cycle]


def _derivation_rank(al: MultipleAlignment):
    dangling = 0
    for r in range(1, len(al.rows)):
        for pos, sym in enumerate(al.rows[r].symbols):
            if sym.role is Role.ID and not al.matched[r][pos]:
                dangling += 1
    return (dangling, len(al.rows),
            tuple(sorted(r.pattern.id for r in al.rows)), al.key)


def _derivation_candidate(al: MultipleAlignment) -> bool:
    a_idx = most_abstract_row(al)
    for r in range(1, len(al.rows)):
        if r == a_idx:
            continue
        for pos, sym in enumerate(al.rows[r].symbols):
            if sym.role is Role.CONTENTS and not al.matched[r][pos]:
                return False
    if not _has_unmatched_contents(al, a_idx):
        return False
    # every run of the most abstract row must be interpretable: plain
    # data, or whole class references; bracket fragments teach nothing
    row_a = al.rows[a_idx].symbols
    for reg in _regions(al, a_idx):
        if not _clean_run(tuple(row_a[p] for p in reg.row_a_positions)):
            return False
    return True


def _has_unmatched_contents(al: MultipleAlignment, a_idx: int) -> bool:
    if not all(al.matched[0]):
        return True
    return any(sym.role is Role.CONTENTS and not al.matched[a_idx][pos]
               for pos, sym in enumerate(al.rows[a_idx].symbols))


def _clean_run(symbols) -> bool:
    if all(s.type.origin is Origin.DATA for s in symbols):
        return True
    i = 0
    while i < len(symbols):
        if (i + 2 < len(symbols)
                and symbols[i].name == LEFT_BRACKET
                and symbols[i + 1].name.startswith("%")
                and symbols[i + 2].name == RIGHT_BRACKET):
            i += 3
        else:
            return False
    return True


@dataclass
class DerivationOutcome:
    new_patterns: list[Pattern] = field(default_factory=list)
    reused_patterns: list[tuple[Pattern, str]] = field(default_factory=list)
    abstract_pattern: Pattern | None = None


@dataclass
class _Region:
    kind: str                      # "matched" | "mismatch"
    position: int                  # layout index, for ordering
    row_a_positions: list[int] = field(default_factory=list)
    cpfn_positions: list[int] = field(default_factory=list)


def _regions(al: MultipleAlignment, a_idx: int) -> list[_Region]:
    """Carve the top row and the most abstract row into ordered runs."""
    gap_of: dict[tuple[int, int], int] = {}
    layout_index: dict[tuple[int, int], int] = {}
    uid_to_idx = {r.uid: i for i, r in enumerate(al.rows)}
    gap = 0
    for idx, slot in enumerate(al.layout):
        if slot[0] == "c":
            for occ in al.columns[slot[1]]:
                layout_index[(uid_to_idx[occ.uid], occ.pos)] = idx
            gap += 1
        else:
            gap_of[(slot[1], slot[2])] = gap
            layout_index[(slot[1], slot[2])] = idx

    regions: list[_Region] = []
    gap_regions: dict[int, _Region] = {}

    def mismatch_region(g: int, position: int) -> _Region:
        reg = gap_regions.get(g)
        if reg is None:
            reg = _Region("mismatch", position)
            gap_regions[g] = reg
            regions.append(reg)
        else:
            reg.position = min(reg.position, position)
        return reg

    # runs of Contents symbols in the most abstract row
    current: _Region | None = None
    for pos, sym in enumerate(al.rows[a_idx].symbols):
        if sym.role is not Role.CONTENTS:
            current = None
            continue
        if al.matched[a_idx][pos]:
            if current is None or current.kind != "matched":
                current = _Region("matched", layout_index[(a_idx, pos)])
                regions.append(current)
            current.row_a_positions.append(pos)
        else:
            g = gap_of[(a_idx, pos)]
            reg = mismatch_region(g, layout_index[(a_idx, pos)])
            reg.row_a_positions.append(pos)
            current = reg

    # unmatched runs in the top row attach to the same inter-column gap
    for pos in range(len(al.rows[0].symbols)):
        if not al.matched[0][pos]:
            g = gap_of[(0, pos)]
            reg = mismatch_region(g, layout_index[(0, pos)])
            reg.cpfn_positions.append(pos)

    regions.sort(key=lambda r: r.position)
    return regions


def _is_class_reference(symbols) -> bool:
    return (len(symbols) == 3
            and symbols[0].name == LEFT_BRACKET
            and symbols[1].name.startswith("%")
            and symbols[2].name == RIGHT_BRACKET)


def dedupe(contents: tuple[Symbol, ...], store: Store,
           context_class: Symbol | None,
           outcome: DerivationOutcome) -> str:
    """Insert a derived pattern unless its Contents already exist in Old.

    Returns the class symbol name to reference the pattern by.  With a
    required context class, a duplicate gains that class symbol; without
    one, a duplicate is simply referenced by its existing class.
    """
    key = tuple(s.name for s in contents)
    existing = store.find_by_contents(key)
    if existing is not None:
        if context_class is None:
            names = existing.id_class_names()
            if names:
                outcome.reused_patterns.append((existing, ""))
                return names[0]
            fresh = store.fresh_class_symbol()
            existing.insert_class_symbol(fresh)
            outcome.reused_patterns.append((existing, fresh.name))
            return fresh.name
        if context_class.name not in existing.id_class_names():
            existing.insert_class_symbol(context_class)
            outcome.reused_patterns.append((existing, context_class.name))
        else:
            outcome.reused_patterns.append((existing, ""))
        return context_class.name
    cls = context_class if context_class is not None \
        else store.fresh_class_symbol()
    pattern = store.add_wrapped_pattern(contents, (cls,))
    outcome.new_patterns.append(pattern)
    return cls.name


def derive_patterns(al: MultipleAlignment, store: Store) -> DerivationOutcome:
    """Turn one alignment into stored segment, class and abstract patterns."""
    outcome = DerivationOutcome()
    a_idx = most_abstract_row(al)
    row_a = al.rows[a_idx].symbols
    row_0 = al.rows[0].symbols
    regions = _regions(al, a_idx)
    elements: dict[int, str] = {}

    # matched runs first: they keep the lowest class numbers
    for i, reg in enumerate(regions):
        if reg.kind != "matched":
            continue
        syms = tuple(row_a[p] for p in reg.row_a_positions)
        if _is_class_reference(syms):
            elements[i] = syms[1].name
        else:
            elements[i] = dedupe(syms, store, None, outcome)

    for i, reg in enumerate(regions):
        if reg.kind != "mismatch":
            continue
        a_syms = tuple(row_a[p] for p in reg.row_a_positions)
        c_syms = tuple(row_0[p] for p in reg.cpfn_positions)
        if a_syms and _is_class_reference(a_syms):
            if c_syms:
                cls = store.system_symbol(a_syms[1].name)
                elements[i] = dedupe(c_syms, store, cls, outcome)
            else:
                elements[i] = a_syms[1].name
        elif a_syms and c_syms:
            cls = store.fresh_class_symbol()
            dedupe(a_syms, store, cls, outcome)
            dedupe(c_syms, store, cls, outcome)
            elements[i] = cls.name
        else:
            elements[i] = dedupe(a_syms or c_syms, store, None, outcome)

    body = []
    for i in range(len(regions)):
        body.append(store.system_symbol(LEFT_BRACKET, Role.CONTENTS))
        body.append(store.system_symbol(elements[i], Role.CONTENTS))
        body.append(store.system_symbol(RIGHT_BRACKET, Role.CONTENTS))
    body = tuple(body)
    existing = store.find_by_contents(tuple(s.name for s in body))
    if existing is not None:
        outcome.reused_patterns.append((existing, ""))
        outcome.abstract_pattern = existing
    else:
        abstract = store.add_wrapped_pattern(
            body, (store.fresh_class_symbol(),))
        outcome.new_patterns.append(abstract)
        outcome.abstract_pattern = abstract
    return outcome


def process_cpfn(cpfn: Pattern, store: Store, config: Config,
                 table: CostTable):
    """One step of the generation phase: ingest, align, derive."""
    copy = ingest_cpfn(cpfn, store)
    rule = copy_match_rule(cpfn, copy)
    pool = build_alignments(cpfn, store, config, table, forbidden_rule=rule)
    selected = select_for_derivation(pool, config)
    outcomes = [derive_patterns(al, store) for al in selected]
    return pool, selected, outcomes


def learn_corpus(store: Store, config: Config) -> CostTable:
    """Run the whole generation phase over the corpus; returns the
    provisional cost table used for it."""
    table = learning_cost_table(store, config)
    for cpfn in store.new_patterns:
        process_cpfn(cpfn, store, config, table)
    return table
