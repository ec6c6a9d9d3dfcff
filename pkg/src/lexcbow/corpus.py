"""Corpus ingestion: vocabulary construction and context streaming.

Input is assumed to be text8-style preprocessed text (lowercase,
punctuation stripped, whitespace separated).  Tokens outside the
vocabulary are dropped from both targets and contexts.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DataError, ParseError

DEFAULT_MIN_COUNT = 5


@dataclass
class Vocabulary:
    """Word <-> id map with corpus frequencies.

    ids are dense 0..len-1, assigned by descending count (ties broken by
    first occurrence in the token stream, so construction is
    deterministic).  ``total_tokens`` counts retained-word occurrences
    only; ``raw_tokens`` counts every token seen before filtering.
    """

    entries: list[tuple[str, int]]
    total_tokens: int
    raw_tokens: int
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.index = {word: i for i, (word, _) in enumerate(self.entries)}

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, word: str) -> bool:
        return word in self.index

    @property
    def words(self) -> list[str]:
        return [word for word, _ in self.entries]

    @property
    def counts(self) -> np.ndarray:
        return np.array([count for _, count in self.entries], dtype=np.int64)

    def word(self, wid: int) -> str:
        return self.entries[wid][0]

    def save(self, path) -> None:
        """Write one ``word<TAB>count`` line per entry, in id order."""
        with open(path, "w", encoding="utf-8") as f:
            for word, count in self.entries:
                f.write(f"{word}\t{count}\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        entries = []
        total = 0
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise ParseError(path, lineno, "expected 'word<TAB>count'")
                try:
                    count = int(parts[1])
                except ValueError:
                    raise ParseError(path, lineno, f"bad count {parts[1]!r}") from None
                entries.append((parts[0], count))
                total += count
        if not entries:
            raise DataError(f"empty vocabulary file: {path}")
        return cls(entries=entries, total_tokens=total, raw_tokens=total)


@dataclass
class ContextExample:
    """One training example: a target word id and its context window."""

    target: int
    context: list[int]
    position: int


def read_tokens(path, chunk_bytes: int = 1 << 20) -> Iterator[str]:
    """Stream whitespace-separated tokens from a UTF-8 text file.

    Reads in chunks so that corpora such as text8 (100 MB, one line)
    never have to be held in memory as a token list.
    """
    carry = ""
    with open(path, encoding="utf-8") as f:
        while True:
            chunk = f.read(chunk_bytes)
            if not chunk:
                break
            chunk = carry + chunk
            parts = chunk.split()
            # the last piece may be a partial token unless the chunk ended
            # on whitespace
            if parts and not chunk[-1].isspace():
                carry = parts.pop()
            else:
                carry = ""
            yield from parts
    if carry:
        yield carry


def build_vocabulary(
    token_stream: Iterable[str], min_count: int = DEFAULT_MIN_COUNT
) -> Vocabulary:
    """Count tokens and keep the words occurring at least ``min_count`` times.

    Raises DataError when the stream is empty or nothing survives the
    threshold.
    """
    counts = Counter()
    raw = 0
    for token in token_stream:
        counts[token] += 1
        raw += 1
    if raw == 0:
        raise DataError("cannot build a vocabulary from an empty token stream")
    # Counter preserves first-occurrence order, and sorted() is stable,
    # so ties in count keep that order.
    entries = [(w, c) for w, c in counts.items() if c >= min_count]
    entries.sort(key=lambda item: -item[1])
    if not entries:
        raise DataError(
            f"no word reaches min_count={min_count} (raw tokens: {raw})"
        )
    total = sum(count for _, count in entries)
    return Vocabulary(entries=entries, total_tokens=total, raw_tokens=raw)


def encode(token_stream: Iterable[str], vocab: Vocabulary) -> np.ndarray:
    """Map tokens to word ids, dropping out-of-vocabulary tokens."""
    index = vocab.index
    return np.fromiter(
        (index[t] for t in token_stream if t in index), dtype=np.int32
    )


def stream_contexts(
    encoded_corpus: Sequence[int],
    window: int,
    dynamic: bool = True,
    rng: np.random.Generator | None = None,
) -> Iterator[ContextExample]:
    """Yield (target, context) examples over an encoded corpus.

    With ``dynamic`` the per-position half-width is drawn uniformly from
    1..window (the usual CBOW convention); otherwise it is fixed at
    ``window``.  Corpus edges truncate the context; positions with an
    empty context (1-token corpus) are skipped.
    """
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    if dynamic and rng is None:
        raise ValueError("dynamic window sampling needs an rng")
    n = len(encoded_corpus)
    for i in range(n):
        b = int(rng.integers(1, window + 1)) if dynamic else window
        lo = max(0, i - b)
        hi = min(n - 1, i + b)
        context = [int(encoded_corpus[j]) for j in range(lo, hi + 1) if j != i]
        if not context:
            continue
        yield ContextExample(target=int(encoded_corpus[i]), context=context, position=i)


def subsample_mask(
    encoded_corpus: np.ndarray,
    vocab: Vocabulary,
    threshold: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Boolean keep-mask for frequent-word subsampling (off by default).

    Keep probability for a word with corpus frequency f is
    min(1, sqrt(t/f) + t/f), the word2vec formula.
    """
    freqs = vocab.counts.astype(np.float64) / vocab.total_tokens
    with np.errstate(divide="ignore"):
        keep = np.sqrt(threshold / freqs) + threshold / freqs
    keep = np.minimum(keep, 1.0)
    return rng.random(len(encoded_corpus)) < keep[encoded_corpus]
