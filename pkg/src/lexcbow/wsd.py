"""Sense selection and synonym filtering for the training step.

The filter decides which synonyms of a target word are trained together
with it.  Three modes exist: no lexicon at all (plain CBOW), all
synonyms of every sense, or only the synonyms of the single sense whose
gloss best overlaps the current context window (simplified Lesk).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Container, Iterable

from .corpus import Vocabulary
from .lexicon import Lexicon, senses_of


class FilterMode(Enum):
    NO_LEXICON = "no-lexicon"
    NO_FILTER = "no-filter"
    WSD_FILTER = "wsd"


@dataclass
class SenseChoice:
    """Result of Lesk selection for one (word, context) occurrence."""

    chosen_sense_index: int
    overlap_score: int
    fallback_used: bool


class Stoplist:
    """Words excluded from gloss/context overlap counting.

    A word is stopped when it is shorter than ``min_len`` characters or
    contained in the explicit word set.  The default list combines the
    length rule with the top 30 most frequent vocabulary words; a
    user-supplied file replaces both.
    """

    def __init__(self, words: Iterable[str] = (), min_len: int = 0):
        self.words = frozenset(words)
        self.min_len = min_len

    def __contains__(self, word: str) -> bool:
        return len(word) < self.min_len or word in self.words

    @classmethod
    def default(cls, vocab: Vocabulary, top_n: int = 30, min_len: int = 3) -> "Stoplist":
        # vocabulary entries are count-sorted, so the first top_n rows are
        # the most frequent words
        return cls(words=(w for w, _ in vocab.entries[:top_n]), min_len=min_len)

    @classmethod
    def from_file(cls, path) -> "Stoplist":
        with open(path, encoding="utf-8") as f:
            words = {line.strip().lower() for line in f if line.strip()}
        return cls(words=words, min_len=0)


def gloss_overlap(
    context_words: Iterable[str],
    gloss_words: Iterable[str],
    stoplist: Container[str] = (),
) -> int:
    """Lesk overlap: multiset intersection size of the two bags.

    Returns sum over distinct non-stoplist words of
    min(count in context, count in gloss); symmetric in its arguments.
    """
    context_counts = Counter(w for w in context_words if w not in stoplist)
    gloss_counts = Counter(w for w in gloss_words if w not in stoplist)
    return sum(
        min(n, gloss_counts[w]) for w, n in context_counts.items() if w in gloss_counts
    )


def select_sense(
    word: str,
    context_words: Iterable[str],
    lexicon: Lexicon,
    stoplist: Container[str] = (),
) -> SenseChoice:
    """Pick the sense whose gloss best overlaps the context.

    Ties go to the lowest sense index (file order = frequency order).
    When no sense overlaps at all, the first-listed sense is returned
    with ``fallback_used`` set.
    """
    senses = senses_of(lexicon, word)
    if not senses:
        raise KeyError(f"{word!r} has no senses in the lexicon")
    context = list(context_words)
    best_index = 0
    best_score = -1
    for i, sense in enumerate(senses):
        score = gloss_overlap(context, sense.gloss, stoplist)
        if score > best_score:
            best_index, best_score = i, score
    if best_score == 0:
        return SenseChoice(chosen_sense_index=0, overlap_score=0, fallback_used=True)
    return SenseChoice(
        chosen_sense_index=best_index, overlap_score=best_score, fallback_used=False
    )


def paraphrase_set(
    word: str,
    context_words: Iterable[str],
    mode: FilterMode,
    lexicon: Lexicon,
    vocab: Vocabulary,
    stoplist: Container[str] = (),
    strict: bool = False,
) -> list[int]:
    """Word ids of the synonyms admitted into the training step.

    NO_LEXICON always yields [].  NO_FILTER takes the union of synonyms
    over all senses.  WSD_FILTER keeps only the synonyms of the sense
    selected by ``select_sense``; with ``strict`` a zero-overlap
    fallback yields no synonyms instead of the first sense's.  The word
    itself and out-of-vocabulary synonyms are always excluded, and the
    result carries no duplicates.  (The target word itself is trained
    unconditionally by the trainer, not through this list.)
    """
    if mode is FilterMode.NO_LEXICON:
        return []
    senses = senses_of(lexicon, word)
    if not senses:
        return []
    if mode is FilterMode.NO_FILTER:
        candidates = [syn for sense in senses for syn in sense.synonyms]
    else:
        choice = select_sense(word, context_words, lexicon, stoplist)
        if strict and choice.fallback_used:
            return []
        candidates = senses[choice.chosen_sense_index].synonyms
    ids = []
    seen = set()
    for synonym in candidates:
        if synonym == word or synonym in seen:
            continue
        seen.add(synonym)
        wid = vocab.index.get(synonym)
        if wid is not None:
            ids.append(wid)
    return ids
