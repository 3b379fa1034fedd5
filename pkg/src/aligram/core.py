"""Symbol, pattern and store data model shared by all other modules.

Knowledge is held as flat sequences of symbols.  Each distinct token is
interned as a single :class:`SymbolType`; a :class:`Symbol` is a typed
occurrence with a fixed ID/Contents role.  Patterns live in two pools:
``new_patterns`` (the raw corpus) and ``old_patterns`` (the growing
repository that learning adds to).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class Origin(Enum):
    DATA = "data"
    SYSTEM = "system"


class Role(Enum):
    ID = "id"
    CONTENTS = "contents"


class PatternOrigin(Enum):
    NEW = "new"
    OLD = "old"


class EmptyCorpusError(ValueError):
    """Raised when a corpus contains no patterns at all."""


class CorpusTokenError(ValueError):
    """Raised for corpus tokens that collide with the system symbol space."""


LEFT_BRACKET = "<"
RIGHT_BRACKET = ">"


@dataclass(eq=False)
class SymbolType:
    """One entry in the alphabet: a distinct token with bookkeeping.

    ``frequency`` and ``encoding_cost`` are filled in by the coding and
    grammar-scoring passes; identity is by object (types are interned).
    """

    name: str
    origin: Origin
    index: int
    frequency: int = 0
    encoding_cost: float = 0.0

    def __repr__(self):
        return f"SymbolType({self.name!r}, {self.origin.value})"


@dataclass(frozen=True)
class Symbol:
    """A typed occurrence inside a pattern; role is fixed at creation."""

    type: SymbolType
    role: Role

    @property
    def name(self) -> str:
        return self.type.name

    def __repr__(self):
        return f"{self.name}:{self.role.value[0].upper()}"


class Pattern:
    """An immutable-by-convention sequence of symbols.

    The only sanctioned mutation is inserting an extra class symbol into
    the ID prefix when an existing pattern is reused in a new context;
    everything else treats ``symbols`` as frozen.
    """

    __slots__ = ("id", "symbols", "origin", "frequency")

    def __init__(self, id: int, symbols: tuple[Symbol, ...], origin: PatternOrigin):
        if not symbols:
            raise ValueError("a pattern is never empty")
        self.id = id
        self.symbols = symbols
        self.origin = origin
        self.frequency = 0

    def __len__(self):
        return len(self.symbols)

    def __repr__(self):
        return f"Pattern#{self.id}[{self.render()}]"

    def render(self) -> str:
        return " ".join(s.name for s in self.symbols)

    def contents_key(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.symbols if s.role is Role.CONTENTS)

    def contents_start(self) -> int:
        """Index of the first Contents symbol (wrapped patterns only)."""
        for i, s in enumerate(self.symbols):
            if s.role is Role.CONTENTS:
                return i
        return len(self.symbols)

    def id_class_names(self) -> list[str]:
        return [s.name for s in self.symbols
                if s.role is Role.ID and s.name.startswith("%")]

    def insert_class_symbol(self, symbol: Symbol) -> None:
        """Add a class symbol after the existing leading class symbols."""
        pos = 1
        while pos < len(self.symbols) and self.symbols[pos].name.startswith("%"):
            pos += 1
        self.symbols = self.symbols[:pos] + (symbol,) + self.symbols[pos:]


@dataclass
class Config:
    """Tunable knobs for learning and alignment building."""

    cost_factor: float = 10.0
    system_symbol_cost: float = 8.0
    pairwise_beam: int = 6
    driving_count: int = 3
    select_per_cycle: int = 6
    halt_window: int = 3
    grammar_tree_width: int = 10
    max_output_grammars: int = 2

    def __post_init__(self):
        for name in ("cost_factor", "system_symbol_cost", "pairwise_beam",
                     "driving_count", "select_per_cycle", "halt_window",
                     "grammar_tree_width", "max_output_grammars"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


class Store:
    """Holds the corpus, the repository, the alphabet and the counters."""

    def __init__(self):
        self.new_patterns: list[Pattern] = []
        self.old_patterns: list[Pattern] = []
        self.alphabet: dict[str, SymbolType] = {}
        self.next_class_id = 1
        self.next_discrimination_id = 1
        self._next_pattern_id = 1
        self._next_type_index = 0
        # first Old pattern for each contents sequence, for learner dedupe
        self._contents_index: dict[tuple[str, ...], Pattern] = {}
        # pattern-from-New id -> its ID-wrapped copy in Old
        self.copies: dict[int, Pattern] = {}

    # -- alphabet ---------------------------------------------------------

    def intern(self, name: str, origin: Origin) -> SymbolType:
        st = self.alphabet.get(name)
        if st is None:
            st = SymbolType(name, origin, self._next_type_index)
            self._next_type_index += 1
            self.alphabet[name] = st
        return st

    def data_symbol(self, name: str) -> Symbol:
        return Symbol(self.intern(name, Origin.DATA), Role.CONTENTS)

    def system_symbol(self, name: str, role: Role = Role.ID) -> Symbol:
        return Symbol(self.intern(name, Origin.SYSTEM), role)

    def fresh_class_symbol(self) -> Symbol:
        name = f"%{self.next_class_id}"
        self.next_class_id += 1
        return self.system_symbol(name)

    def fresh_discrimination_symbol(self) -> Symbol:
        name = str(self.next_discrimination_id)
        self.next_discrimination_id += 1
        return self.system_symbol(name)

    # -- patterns ---------------------------------------------------------

    def _new_id(self) -> int:
        pid = self._next_pattern_id
        self._next_pattern_id += 1
        return pid

    def add_new_pattern(self, symbols: tuple[Symbol, ...]) -> Pattern:
        p = Pattern(self._new_id(), symbols, PatternOrigin.NEW)
        self.new_patterns.append(p)
        return p

    def add_old_pattern(self, symbols: tuple[Symbol, ...]) -> Pattern:
        p = Pattern(self._new_id(), symbols, PatternOrigin.OLD)
        self.old_patterns.append(p)
        self._contents_index.setdefault(p.contents_key(), p)
        return p

    def add_wrapped_pattern(self, contents: tuple[Symbol, ...],
                            class_symbols: tuple[Symbol, ...]) -> Pattern:
        """Wrap contents as '< class.. disc contents.. >' and add to Old."""
        symbols = ((self.system_symbol(LEFT_BRACKET),)
                   + class_symbols
                   + (self.fresh_discrimination_symbol(),)
                   + contents
                   + (self.system_symbol(RIGHT_BRACKET),))
        return self.add_old_pattern(symbols)

    def find_by_contents(self, key: tuple[str, ...]) -> Pattern | None:
        return self._contents_index.get(key)


def _validate_token(token: str) -> None:
    if token in (LEFT_BRACKET, RIGHT_BRACKET):
        raise CorpusTokenError(f"token {token!r} is reserved for pattern brackets")
    if token.startswith("%"):
        raise CorpusTokenError(f"token {token!r} collides with class symbols")
    if token.isdigit():
        raise CorpusTokenError(
            f"token {token!r} collides with discrimination symbols")


def parse_corpus(text: str, store: Store) -> list[Pattern]:
    """Read one pattern per non-empty line; tokens are whitespace-separated.

    Tokens become Data symbols with role Contents.  Raises
    :class:`EmptyCorpusError` when no line yields a pattern.
    """
    patterns = []
    for line in text.splitlines():
        tokens = line.split()
        if not tokens:
            continue
        for tok in tokens:
            _validate_token(tok)
        symbols = tuple(store.data_symbol(tok) for tok in tokens)
        patterns.append(store.add_new_pattern(symbols))
    if not patterns:
        raise EmptyCorpusError("corpus contains no patterns")
    return patterns
