"""Command-line entry point: train, eval, neighbors.

Machine-readable output (key=value lines) goes to stdout; human tables
go to stderr so pipelines stay clean.  Exit codes: 0 ok, 1 usage,
2 data error, 3 numerical abort.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict
from pathlib import Path

from . import evaluate as ev
from . import vectors as vec
from .errors import ConfigError, DataError, NumericalError
from .lexicon import load_lexicon
from .trainer import Backend, TrainingConfig, train
from .wsd import FilterMode, Stoplist

DATA_DIR_ENV = "LEXCBOW_DATA_DIR"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; the contract here is 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def resolve_path(path: str) -> Path:
    """Resolve a data path, falling back to $LEXCBOW_DATA_DIR."""
    p = Path(path)
    if p.exists():
        return p
    data_dir = os.environ.get(DATA_DIR_ENV)
    if data_dir and not p.is_absolute():
        candidate = Path(data_dir) / path
        if candidate.exists():
            return candidate
    return p


def _require_file(path: str, what: str) -> Path:
    p = resolve_path(path)
    if not p.is_file():
        raise DataError(f"{what} file not found: {path}")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lexcbow", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    tr = sub.add_parser("train", help="train embeddings on a corpus")
    tr.add_argument("--corpus", required=True, help="whitespace-tokenized text file")
    tr.add_argument("--output", required=True, help="output path prefix")
    tr.add_argument("--lexicon", help="sense inventory TSV (required unless --mode no-lexicon)")
    tr.add_argument("--mode", default="wsd", choices=[m.value for m in FilterMode])
    tr.add_argument("--backend", default="ns", choices=[b.value for b in Backend])
    tr.add_argument("--dim", type=int, default=50)
    tr.add_argument("--window", type=int, default=8)
    tr.add_argument("--negatives", type=int, default=None,
                    help="noise words per output (negative sampling only; default 25)")
    tr.add_argument("--lr", type=float, default=0.05)
    tr.add_argument("--epochs", type=int, default=15)
    tr.add_argument("--seed", type=int, default=1)
    tr.add_argument("--threads", type=int, default=1)
    tr.add_argument("--min-count", type=int, default=5)
    tr.add_argument("--fixed-window", action="store_true",
                    help="use the full window instead of sampling 1..window")
    tr.add_argument("--subsample", type=float, default=0.0,
                    help="frequent-word subsampling threshold (0 = off)")
    tr.add_argument("--strict-wsd", action="store_true",
                    help="drop all synonyms when no gloss overlaps the context")
    tr.add_argument("--stoplist", help="override stoplist file, one word per line")
    tr.add_argument("--binary", action="store_true",
                    help="also write word2vec binary vectors")

    ee = sub.add_parser("eval", help="evaluate trained vectors on a dataset")
    ee.add_argument("--vectors", required=True)
    ee.add_argument("--dataset", required=True)
    ee.add_argument("--task", default="similarity", choices=["similarity", "analogy"])
    ee.add_argument("--oov-policy", default="skip", choices=["skip", "zero"])
    ee.add_argument("--polysemous-only", action="store_true",
                    help="similarity: keep only pairs with a polysemous word")
    ee.add_argument("--lexicon", help="lexicon TSV for --polysemous-only")
    ee.add_argument("--syntactic-sections",
                    help="comma-separated section names to classify as syntactic "
                         "(default: names starting with 'gram')")
    ee.add_argument("--binary", action="store_true", help="vectors file is binary")

    nb = sub.add_parser("neighbors", help="print the nearest neighbors of a word")
    nb.add_argument("--vectors", required=True)
    nb.add_argument("--word", required=True)
    nb.add_argument("--k", type=int, default=5)
    nb.add_argument("--binary", action="store_true", help="vectors file is binary")
    return parser


def _atomic_write_json(path: Path, payload: dict) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    os.replace(tmp, path)


def cmd_train(args) -> int:
    corpus_path = _require_file(args.corpus, "corpus")
    mode = FilterMode(args.mode)
    backend = Backend(args.backend)
    if args.negatives is not None and backend is Backend.HS:
        print("warning: --negatives is ignored with --backend hs", file=sys.stderr)
    negatives = args.negatives if args.negatives is not None else 25
    lexicon = None
    lexicon_path = None
    if mode is not FilterMode.NO_LEXICON:
        if not args.lexicon:
            raise ConfigError(f"--mode {mode.value} requires --lexicon")
        lexicon_path = _require_file(args.lexicon, "lexicon")
        lexicon = load_lexicon(lexicon_path)
    stoplist = Stoplist.from_file(_require_file(args.stoplist, "stoplist")) \
        if args.stoplist else None

    config = TrainingConfig(
        mode=mode,
        backend=backend,
        dim=args.dim,
        window=args.window,
        negatives=negatives,
        lr0=args.lr,
        epochs=args.epochs,
        seed=args.seed,
        threads=args.threads,
        min_count=args.min_count,
        dynamic_window=not args.fixed_window,
        subsample=args.subsample,
        strict_wsd=args.strict_wsd,
    )
    config.validate()

    start = time.time()
    result = train(corpus_path, lexicon, config, stoplist=stoplist)
    wv = vec.WordVectors.from_vocab(result.vocab, result.vectors)

    prefix = Path(args.output)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    vectors_path = prefix.with_name(prefix.name + ".vectors.txt")
    vec.save_text(vectors_path, wv)
    if args.binary:
        vec.save_binary(prefix.with_name(prefix.name + ".vectors.bin"), wv)
    result.vocab.save(prefix.with_name(prefix.name + ".vocab.tsv"))

    report = result.report
    manifest = {
        "config": {
            **{k: v for k, v in asdict(config).items() if k not in ("mode", "backend")},
            "mode": config.mode.value,
            "backend": config.backend.value,
        },
        "corpus_path": str(corpus_path),
        "corpus_bytes": corpus_path.stat().st_size,
        "lexicon_path": str(lexicon_path) if lexicon_path else None,
        "seed": config.seed,
        "vocab_size": len(result.vocab),
        "raw_tokens": result.vocab.raw_tokens,
        "total_tokens": result.vocab.total_tokens,
        "wall_clock_sec": report.wall_seconds,
        "started_unix": start,
        "tokens_per_sec": report.tokens_per_sec,
        "tokens_processed": report.tokens_processed,
        "examples": report.examples,
        "fallback_examples": report.fallback_examples,
        "mean_abs_gradient": report.mean_abs_gradient,
        "final_lr": report.final_lr,
    }
    _atomic_write_json(prefix.with_name(prefix.name + ".manifest.json"), manifest)

    print(f"vectors={vectors_path}")
    print(f"vocab_size={len(result.vocab)}")
    print(f"tokens_per_sec={report.tokens_per_sec:.0f}")
    print(f"fallback_examples={report.fallback_examples}")
    print(f"final_lr={report.final_lr:.6g}")
    return EXIT_OK


def cmd_eval(args) -> int:
    wv = vec.load(_require_file(args.vectors, "vectors"), binary=args.binary)
    dataset_path = _require_file(args.dataset, "dataset")
    if args.task == "similarity":
        dataset = ev.load_word_pairs(dataset_path)
        total = len(dataset)
        if args.polysemous_only:
            if not args.lexicon:
                raise ConfigError("--polysemous-only requires --lexicon")
            lexicon = load_lexicon(_require_file(args.lexicon, "lexicon"))
            dataset = ev.build_polysemous_subset(dataset, lexicon)
            print(f"polysemous_pairs={len(dataset)}")
        result = ev.eval_similarity(dataset, wv, oov_policy=args.oov_policy)
        print(f"pairs={total}")
        print(f"evaluated={result.evaluated}")
        print(f"skipped={result.skipped}")
        print(f"rho_x100={result.rho_x100:.2f}")
        print(f"rho x100 on {dataset_path.name}: {result.rho_x100:.2f} "
              f"({result.evaluated} pairs, {result.skipped} skipped)",
              file=sys.stderr)
    else:
        syntactic = None
        if args.syntactic_sections:
            syntactic = {s.strip() for s in args.syntactic_sections.split(",")}
        dataset = ev.load_analogies(dataset_path, syntactic_sections=syntactic)
        result = ev.eval_analogy(dataset, wv)
        for section in result.sections:
            print(f"section_{section.name.replace(' ', '_')}="
                  f"{100.0 * section.accuracy:.2f}")
        print(f"semantic={100.0 * result.accuracy('semantic'):.2f}")
        print(f"syntactic={100.0 * result.accuracy('syntactic'):.2f}")
        print(f"total={100.0 * result.accuracy():.2f}")
        print(f"attempted={result.attempted}")
        print(f"skipped={result.skipped}")
        print(f"analogy on {dataset_path.name}: "
              f"semantic {100.0 * result.accuracy('semantic'):.2f} / "
              f"syntactic {100.0 * result.accuracy('syntactic'):.2f} "
              f"({result.attempted} attempted, {result.skipped} skipped)",
              file=sys.stderr)
    return EXIT_OK


def cmd_neighbors(args) -> int:
    wv = vec.load(_require_file(args.vectors, "vectors"), binary=args.binary)
    if args.word not in wv:
        raise DataError(f"{args.word!r} is not in the vocabulary")
    k = args.k
    if k > len(wv) - 1:
        print(f"warning: k={k} clipped to {len(wv) - 1}", file=sys.stderr)
        k = len(wv) - 1
    rows = ev.nearest_neighbors(args.word, k, wv)
    width = max((len(w) for w, _ in rows), default=4)
    print(f"neighbors of {args.word!r}:", file=sys.stderr)
    for word, sim in rows:
        print(f"{word}\t{sim:.2f}")
        print(f"  {word:<{width}}  {sim:.2f}", file=sys.stderr)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "train":
            return cmd_train(args)
        if args.command == "eval":
            return cmd_eval(args)
        return cmd_neighbors(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FileNotFoundError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
