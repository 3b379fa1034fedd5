"""Grammar induction by information compression over multiple alignments.

A library and CLI that learns segment, class and abstract patterns from
raw sequences, scores alternative grammars by minimum-length-encoding
principles, and can parse and produce against a learned grammar.
"""

from .core import (Config, CorpusTokenError, EmptyCorpusError, Origin,
                   Pattern, PatternOrigin, Role, Store, Symbol, SymbolType,
                   parse_corpus)
from .coding import (CostTable, MissingCostError, compile_alphabet,
                     learning_cost_table, pattern_bits, sfe_lengths,
                     weighted_costs)
from .matcher import PairwiseAlignment, match, score_hits
from .alignment import (CodePattern, MultipleAlignment, NoParseError,
                        build_alignments, derive_code, is_full,
                        is_projectable, parse, produce, project,
                        realized_words, render, score)
from .learner import (DerivationOutcome, derive_patterns, ingest_cpfn,
                      learn_corpus, most_abstract_row, select_for_derivation)
from .grammar import (Grammar, GrammarView, SiftResult, SiftingError,
                      clean_grammar, compile_grammars, load_grammar,
                      naive_grammar, pattern_frequencies, save_grammar,
                      sift_and_sort, symbol_frequencies)

__version__ = "0.1.0"
