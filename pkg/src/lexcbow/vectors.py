"""Reading and writing embeddings in the word2vec interchange formats.

Text format: a header line ``vocab_size dim`` followed by one
``word v1 ... v_dim`` line per word, space separated.  We write full
float64 precision so that re-running a seeded job reproduces files
byte-for-byte.  The binary format follows the original layout (header
line, then per word the token, a space, dim little-endian float32
values and a newline).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import Vocabulary
from .errors import DataError, ParseError


@dataclass
class WordVectors:
    """An ordered word list with its embedding matrix."""

    words: list[str]
    vectors: np.ndarray
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        if len(self.words) != len(self.vectors):
            raise DataError(
                f"{len(self.words)} words but {len(self.vectors)} vector rows"
            )
        self.index = {w: i for i, w in enumerate(self.words)}

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.index

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def row(self, word: str) -> np.ndarray:
        return self.vectors[self.index[word]]

    @classmethod
    def from_vocab(cls, vocab: Vocabulary, matrix: np.ndarray) -> "WordVectors":
        return cls(words=vocab.words, vectors=matrix)


def save_text(path, wv: WordVectors) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{len(wv)} {wv.dim}\n")
        for word, row in zip(wv.words, wv.vectors):
            f.write(word)
            for value in row:
                f.write(f" {value:.17g}")
            f.write("\n")


def load_text(path) -> WordVectors:
    with open(path, encoding="utf-8") as f:
        header = f.readline().split()
        if len(header) != 2:
            raise ParseError(path, 1, "expected 'vocab_size dim' header")
        try:
            n, dim = int(header[0]), int(header[1])
        except ValueError:
            raise ParseError(path, 1, f"bad header {header!r}") from None
        words = []
        matrix = np.empty((n, dim), dtype=np.float64)
        for i in range(n):
            line = f.readline()
            if not line:
                raise ParseError(path, i + 2, f"expected {n} rows, found {i}")
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise ParseError(
                    path, i + 2, f"expected {dim} values, got {len(parts) - 1}"
                )
            words.append(parts[0])
            matrix[i] = [float(v) for v in parts[1:]]
    return WordVectors(words=words, vectors=matrix)


def save_binary(path, wv: WordVectors) -> None:
    with open(path, "wb") as f:
        f.write(f"{len(wv)} {wv.dim}\n".encode("utf-8"))
        for word, row in zip(wv.words, wv.vectors):
            f.write(word.encode("utf-8") + b" ")
            f.write(row.astype("<f4").tobytes())
            f.write(b"\n")


def load_binary(path) -> WordVectors:
    with open(path, "rb") as f:
        header = f.readline().split()
        if len(header) != 2:
            raise ParseError(path, 1, "expected 'vocab_size dim' header")
        n, dim = int(header[0]), int(header[1])
        row_bytes = 4 * dim
        words = []
        matrix = np.empty((n, dim), dtype=np.float64)
        for i in range(n):
            chars = []
            while True:
                ch = f.read(1)
                if not ch:
                    raise DataError(f"{path}: truncated at row {i}")
                if ch == b" ":
                    break
                chars.append(ch)
            words.append(b"".join(chars).decode("utf-8"))
            payload = f.read(row_bytes)
            if len(payload) != row_bytes:
                raise DataError(f"{path}: truncated vector for {words[-1]!r}")
            matrix[i] = np.frombuffer(payload, dtype="<f4")
            trailer = f.read(1)
            if trailer not in (b"\n", b""):
                raise DataError(f"{path}: missing row separator after {words[-1]!r}")
    return WordVectors(words=words, vectors=matrix)


def load(path, binary: bool = False) -> WordVectors:
    return load_binary(path) if binary else load_text(path)
