"""Evaluation battery: nearest neighbors, rank correlation on word-pair
similarity datasets (including the polysemous-only subset), and the
additive-offset word analogy task.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, ParseError
from .lexicon import Lexicon, is_polysemous
from .vectors import WordVectors


@dataclass
class WordPairDataset:
    """Word pairs with human similarity scores, in file order."""

    pairs: list[tuple[str, str, float]]

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass
class AnalogySection:
    name: str
    kind: str  # "semantic" | "syntactic"
    questions: list[tuple[str, str, str, str]]


@dataclass
class AnalogyDataset:
    sections: list[AnalogySection]

    def __len__(self) -> int:
        return sum(len(s.questions) for s in self.sections)


@dataclass
class SimilarityResult:
    rho: float
    evaluated: int
    skipped: int

    @property
    def rho_x100(self) -> float:
        return 100.0 * self.rho


@dataclass
class SectionResult:
    name: str
    kind: str
    correct: int
    attempted: int
    skipped: int

    @property
    def accuracy(self) -> float:
        return self.correct / self.attempted if self.attempted else 0.0


@dataclass
class AnalogyResult:
    sections: list[SectionResult]

    def _aggregate(self, kind=None):
        correct = attempted = skipped = 0
        for s in self.sections:
            if kind is None or s.kind == kind:
                correct += s.correct
                attempted += s.attempted
                skipped += s.skipped
        return correct, attempted, skipped

    def accuracy(self, kind=None) -> float:
        correct, attempted, _ = self._aggregate(kind)
        return correct / attempted if attempted else 0.0

    @property
    def skipped(self) -> int:
        return self._aggregate()[2]

    @property
    def attempted(self) -> int:
        return self._aggregate()[1]


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity; undefined (and an error) for zero vectors."""
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine similarity is undefined for zero vectors")
    return float(np.dot(u, v) / (nu * nv))


def nearest_neighbors(
    word: str, k: int, wv: WordVectors
) -> list[tuple[str, float]]:
    """Top-k words by cosine similarity, excluding the query itself.

    Ties are broken by word id.  k is clipped to the vocabulary size.
    """
    if word not in wv:
        raise KeyError(f"{word!r} is not in the vocabulary")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    query = wv.row(word)
    qnorm = np.linalg.norm(query)
    if qnorm == 0.0:
        raise ValueError(f"{word!r} has a zero vector")
    norms = np.linalg.norm(wv.vectors, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    sims = (wv.vectors @ query) / (safe * qnorm)
    sims[norms == 0] = -np.inf
    sims[wv.index[word]] = -np.inf
    k = min(k, len(wv) - 1)
    order = np.argsort(-sims, kind="stable")[:k]
    return [(wv.words[i], float(sims[i])) for i in order]


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """Fractional ranks starting at 1; tied values share the average rank."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(xs, ys) -> float:
    """Spearman's rho: Pearson correlation of average-tied ranks."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError(f"length mismatch: {xs.shape} vs {ys.shape}")
    if len(xs) < 2:
        raise ValueError("need at least 2 observations")
    rx = _average_ranks(xs)
    ry = _average_ranks(ys)
    sx = rx - rx.mean()
    sy = ry - ry.mean()
    denom = np.sqrt((sx * sx).sum() * (sy * sy).sum())
    if denom == 0.0:
        raise ValueError("correlation undefined for constant input")
    return float((sx * sy).sum() / denom)


def eval_similarity(
    dataset: WordPairDataset, wv: WordVectors, oov_policy: str = "skip"
) -> SimilarityResult:
    """Rank correlation between model cosine scores and human scores.

    Pairs with an out-of-vocabulary word are skipped by default, or
    scored 0 with ``oov_policy="zero"``.
    """
    if oov_policy not in ("skip", "zero"):
        raise ValueError(f"unknown oov_policy {oov_policy!r}")
    model_scores = []
    human_scores = []
    skipped = 0
    for w1, w2, human in dataset.pairs:
        if w1 in wv and w2 in wv:
            model_scores.append(cosine(wv.row(w1), wv.row(w2)))
            human_scores.append(human)
        elif oov_policy == "zero":
            model_scores.append(0.0)
            human_scores.append(human)
            skipped += 1
        else:
            skipped += 1
    if len(model_scores) < 2:
        raise DataError(
            f"only {len(model_scores)} evaluable pairs; cannot correlate"
        )
    rho = spearman(model_scores, human_scores)
    return SimilarityResult(rho=rho, evaluated=len(model_scores), skipped=skipped)


def build_polysemous_subset(
    dataset: WordPairDataset, lexicon: Lexicon
) -> WordPairDataset:
    """Pairs where at least one word is polysemous in the lexicon."""
    return WordPairDataset(
        pairs=[
            pair
            for pair in dataset.pairs
            if is_polysemous(lexicon, pair[0]) or is_polysemous(lexicon, pair[1])
        ]
    )


def eval_analogy(dataset: AnalogyDataset, wv: WordVectors) -> AnalogyResult:
    """Additive-offset analogy accuracy per section and kind.

    For a question (a, b, c, d) the prediction maximizes cosine to
    v_b - v_a + v_c over the vocabulary with a, b, c excluded (rows are
    unit-normalized first).  Questions with any out-of-vocabulary word
    are skipped and counted.
    """
    norms = np.linalg.norm(wv.vectors, axis=1)
    normed = wv.vectors / np.where(norms > 0, norms, 1.0)[:, None]
    results = []
    for section in dataset.sections:
        correct = attempted = skipped = 0
        for a, b, c, d in section.questions:
            if any(w not in wv for w in (a, b, c, d)):
                skipped += 1
                continue
            ia, ib, ic = wv.index[a], wv.index[b], wv.index[c]
            query = normed[ib] - normed[ia] + normed[ic]
            scores = normed @ query
            scores[[ia, ib, ic]] = -np.inf
            predicted = int(np.argmax(scores))
            attempted += 1
            if predicted == wv.index[d]:
                correct += 1
        results.append(
            SectionResult(
                name=section.name,
                kind=section.kind,
                correct=correct,
                attempted=attempted,
                skipped=skipped,
            )
        )
    return AnalogyResult(sections=results)


def _split_fields(line: str) -> list[str]:
    if "\t" in line:
        return line.split("\t")
    if "," in line:
        return [f.strip() for f in line.split(",")]
    return line.split()


def _is_number(text: str) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False


def load_word_pairs(path) -> WordPairDataset:
    """Load a similarity dataset.

    Accepts ``word1,word2,score`` CSV/TSV with an optional header
    (detected by a non-numeric score field), and the tab-separated
    multi-column contextual format (integer id first, words in columns
    2 and 4, average score in column 8; context columns ignored).
    """
    pairs: list[tuple[str, str, float]] = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            fields = _split_fields(line)
            if len(fields) >= 8 and fields[0].strip().isdigit():
                w1, w2, score_field = fields[1], fields[3], fields[7]
            elif len(fields) >= 3:
                w1, w2, score_field = fields[0], fields[1], fields[2]
            else:
                raise ParseError(path, lineno, f"expected 3 fields, got {len(fields)}")
            if not _is_number(score_field):
                if not pairs:
                    continue  # header line
                raise ParseError(path, lineno, f"bad score {score_field!r}")
            pairs.append((w1.strip().lower(), w2.strip().lower(), float(score_field)))
    if not pairs:
        raise DataError(f"no word pairs found in {path}")
    return WordPairDataset(pairs=pairs)


def section_kind(name: str, syntactic_sections=None) -> str:
    """Semantic/syntactic classification of an analogy section.

    The built-in rule follows the common naming convention (sections
    prefixed ``gram`` are syntactic); passing an explicit collection of
    syntactic section names overrides it.
    """
    if syntactic_sections is not None:
        return "syntactic" if name in syntactic_sections else "semantic"
    return "syntactic" if name.startswith("gram") else "semantic"


def load_analogies(path, syntactic_sections=None) -> AnalogyDataset:
    """Load an analogy dataset: ``: section`` headers, then 4-word lines."""
    sections: list[AnalogySection] = []
    current: AnalogySection | None = None
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("//"):
                continue
            if line.startswith(":"):
                name = line[1:].strip()
                current = AnalogySection(
                    name=name,
                    kind=section_kind(name, syntactic_sections),
                    questions=[],
                )
                sections.append(current)
                continue
            words = line.lower().split()
            if len(words) != 4:
                raise ParseError(path, lineno, f"expected 4 words, got {len(words)}")
            if current is None:
                current = AnalogySection(name="default", kind="semantic", questions=[])
                sections.append(current)
            current.questions.append(tuple(words))
    if not sections or all(not s.questions for s in sections):
        raise DataError(f"no analogy questions found in {path}")
    return AnalogyDataset(sections=sections)
