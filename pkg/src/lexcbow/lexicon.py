"""Sense inventory: per lemma, an ordered list of senses with synonyms and gloss.

File format (TSV, UTF-8, no header, '#' comments ignored):

    lemma<TAB>sense_id<TAB>synonym1,synonym2,...<TAB>gloss text

Sense order in the file is treated as frequency order (the WordNet
convention); it drives tie-breaking and the zero-overlap fallback in wsd.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ParseError


@dataclass
class Sense:
    sense_id: str
    synonyms: list[str]
    gloss: list[str]


@dataclass
class Lexicon:
    senses_by_lemma: dict[str, list[Sense]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.senses_by_lemma)

    def lemmas(self) -> list[str]:
        return list(self.senses_by_lemma)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for lemma, senses in self.senses_by_lemma.items():
                for sense in senses:
                    f.write(
                        f"{lemma}\t{sense.sense_id}\t{','.join(sense.synonyms)}"
                        f"\t{' '.join(sense.gloss)}\n"
                    )


def _single_word(synonym: str) -> bool:
    # multiword synset lemmas cannot align with a single-token corpus
    return " " not in synonym and "_" not in synonym


def load_lexicon(path) -> Lexicon:
    """Parse a lexicon TSV file.

    Lemmas, synonyms and gloss tokens are lowercased.  Multiword
    synonyms are dropped; a sense whose synonym list becomes empty is
    skipped entirely.  Duplicate (lemma, sense_id) pairs are an error.
    """
    senses_by_lemma: dict[str, list[Sense]] = {}
    seen: set[tuple[str, str]] = set()
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise ParseError(
                    path, lineno, f"expected 4 tab-separated fields, got {len(parts)}"
                )
            lemma, sense_id, synonyms_field, gloss_field = parts
            lemma = lemma.strip().lower()
            if not lemma:
                raise ParseError(path, lineno, "empty lemma")
            key = (lemma, sense_id)
            if key in seen:
                raise ParseError(path, lineno, f"duplicate sense {sense_id!r} for {lemma!r}")
            seen.add(key)
            synonyms = []
            for raw in synonyms_field.split(","):
                raw = raw.strip().lower()
                if raw and _single_word(raw) and raw not in synonyms:
                    synonyms.append(raw)
            if not synonyms:
                continue
            gloss = gloss_field.lower().split()
            senses_by_lemma.setdefault(lemma, []).append(
                Sense(sense_id=sense_id, synonyms=synonyms, gloss=gloss)
            )
    return Lexicon(senses_by_lemma=senses_by_lemma)


def senses_of(lexicon: Lexicon, word: str) -> list[Sense]:
    """Senses of ``word`` in file order; empty when the word is absent."""
    return lexicon.senses_by_lemma.get(word, [])


def is_polysemous(lexicon: Lexicon, word: str) -> bool:
    """True iff the word has at least two senses in the lexicon."""
    return len(senses_of(lexicon, word)) >= 2
