"""Command-line front end: corpus in, grammars and traces out.

Modes:
  learn     run the full pipeline on a corpus file
  parse     align a sentence against a saved grammar, print the code
  produce   run a code string against a saved grammar, print the sentence

Exit codes: 0 success, 2 input error, 3 no parse.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time

from .alignment import (NoParseError, derive_code, grammar_cost_table, parse,
                        produce, realized_words, render)
from .core import Config, CorpusTokenError, EmptyCorpusError, Role, Store, parse_corpus
from .grammar import GrammarFormatError, load_grammar, save_grammar, sift_and_sort
from .learner import learn_corpus

EXIT_INPUT_ERROR = 2
EXIT_NO_PARSE = 3


def build_arg_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="aligram",
        description="Grammar induction by compression over multiple "
                    "alignments, with parse/produce over saved grammars.")
    ap.add_argument("--mode", choices=("learn", "parse", "produce"),
                    default="learn")
    ap.add_argument("inputs", nargs="+",
                    help="learn: CORPUS; parse: GRAMMAR SENTENCE; "
                         "produce: GRAMMAR CODE")
    ap.add_argument("--cost-factor", type=float, default=10.0)
    ap.add_argument("--system-cost", type=float, default=8.0)
    ap.add_argument("--beam", type=int, default=6)
    ap.add_argument("--driving", type=int, default=3)
    ap.add_argument("--select", type=int, default=6)
    ap.add_argument("--halt-window", type=int, default=3)
    ap.add_argument("--tree-width", type=int, default=10)
    ap.add_argument("--grammars", type=int, default=2)
    ap.add_argument("--trace-csv", metavar="PATH")
    ap.add_argument("--save-grammar", metavar="PATH",
                    help="learn mode: write the best cleaned grammar here")
    return ap


def config_from_args(args) -> Config:
    return Config(
        cost_factor=args.cost_factor,
        system_symbol_cost=args.system_cost,
        pairwise_beam=args.beam,
        driving_count=args.driving,
        select_per_cycle=args.select,
        halt_window=args.halt_window,
        grammar_tree_width=args.tree_width,
        max_output_grammars=args.grammars,
    )


def _echo_config(config: Config, out) -> None:
    print("config:", file=out)
    for name in ("cost_factor", "system_symbol_cost", "pairwise_beam",
                 "driving_count", "select_per_cycle", "halt_window",
                 "grammar_tree_width", "max_output_grammars"):
        print(f"  {name} = {getattr(config, name):g}", file=out)


def cmd_learn(args, out=sys.stdout) -> int:
    config = config_from_args(args)
    try:
        with open(args.inputs[0], encoding="utf-8") as fh:
            text = fh.read()
        store = Store()
        parse_corpus(text, store)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except (EmptyCorpusError, CorpusTokenError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR

    started = time.perf_counter()
    learn_corpus(store, config)
    result = sift_and_sort(store, config)
    elapsed = time.perf_counter() - started

    _echo_config(config, out)
    for rank, (clean, raw) in enumerate(
            zip(result.cleaned, result.uncleaned), 1):
        print(f"\ngrammar {rank} (cleaned)  "
              f"G={clean.G:g} E={clean.E:g} T={clean.T:g}", file=out)
        print(clean.render(), file=out)
        print(f"\ngrammar {rank} (uncleaned)  "
              f"G={raw.G:g} E={raw.E:g} T={raw.T:g}", file=out)
        print(raw.render(), file=out)
    naive = result.naive
    print(f"\nnaive grammar  G={naive.G:g} E={naive.E:g} T={naive.T:g}",
          file=out)
    print(naive.render(), file=out)

    if args.trace_csv:
        with open(args.trace_csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["stage", "G", "E", "T", "T_naive"])
            for row in result.trace:
                writer.writerow([row.stage, f"{row.G:g}", f"{row.E:g}",
                                 f"{row.T:g}", f"{row.T_naive:g}"])
    if args.save_grammar:
        save_grammar(result.cleaned[0], args.save_grammar)
    print(f"wall time: {elapsed:.2f}s", file=sys.stderr)
    return 0


def _load_grammar_store(path):
    try:
        return load_grammar(path)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return None
    except GrammarFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return None


def cmd_parse(args, out=sys.stdout) -> int:
    config = config_from_args(args)
    store = _load_grammar_store(args.inputs[0])
    if store is None:
        return EXIT_INPUT_ERROR
    tokens = args.inputs[1].split()
    if not tokens:
        print("error: empty sentence", file=sys.stderr)
        return EXIT_INPUT_ERROR
    sentence = store.add_new_pattern(
        tuple(store.data_symbol(tok) for tok in tokens))
    try:
        best, code = parse(sentence, store, config)
    except NoParseError:
        print("no parse", file=sys.stderr)
        return EXIT_NO_PARSE
    print(render(best), file=out)
    print(f"code: {code.render()}", file=out)
    print(f"code bits: {code.bits:g}", file=out)
    return 0


def cmd_produce(args, out=sys.stdout) -> int:
    config = config_from_args(args)
    store = _load_grammar_store(args.inputs[0])
    if store is None:
        return EXIT_INPUT_ERROR
    tokens = args.inputs[1].split()
    if not tokens:
        print("error: empty code", file=sys.stderr)
        return EXIT_INPUT_ERROR
    from .grammar import _system_token
    symbols = tuple(
        store.system_symbol(tok) if _system_token(tok)
        else store.data_symbol(tok)
        for tok in tokens)
    code_pattern = store.add_new_pattern(symbols)
    try:
        best = produce(code_pattern, store, config)
    except NoParseError:
        print("no parse", file=sys.stderr)
        return EXIT_NO_PARSE
    print(render(best), file=out)
    print(" ".join(realized_words(best)), file=out)
    return 0


def main(argv=None) -> int:
    args = build_arg_parser().parse_args(argv)
    need = {"learn": 1, "parse": 2, "produce": 2}[args.mode]
    if len(args.inputs) != need:
        print(f"error: mode {args.mode} takes {need} argument(s)",
              file=sys.stderr)
        return EXIT_INPUT_ERROR
    if args.mode == "learn":
        return cmd_learn(args)
    if args.mode == "parse":
        return cmd_parse(args)
    return cmd_produce(args)


if __name__ == "__main__":
    sys.exit(main())
