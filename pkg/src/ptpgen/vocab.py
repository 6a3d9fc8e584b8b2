"""Frequency-ranked keyword/phrase vocabulary mined from captions.

Captions are lowercased and cut into words at whitespace and punctuation.
Stopwords and all-digit words are dropped. Every surviving word is a
candidate, and so is every pair of surviving words that sat next to each
other in the caption with only whitespace between them. Bigrams must occur
at least ``min_bigram_count`` times in the corpus to enter the vocabulary.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from itertools import islice
from multiprocessing import Pool
from typing import Iterable, Iterator

from .config import DEFAULT_VOCAB_SIZE
from .errors import EmptyCorpus

STOPWORDS_VERSION = 1

_BREAK = re.compile(r"[^\w\s]|_")


@lru_cache(maxsize=None)
def stopwords() -> frozenset[str]:
    text = resources.files("ptpgen").joinpath("data/stopwords_en.txt").read_text("utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip() and not w.startswith("#"))


def extract_candidates(caption: str) -> list[str]:
    stop = stopwords()
    unigrams = []
    bigrams = []
    for segment in _BREAK.split(caption.lower()):
        prev = None
        for word in segment.split():
            if word in stop or word.isdigit():
                prev = None
                continue
            unigrams.append(word)
            if prev is not None:
                bigrams.append(prev + " " + word)
            prev = word
    return unigrams + bigrams


@dataclass(frozen=True)
class Vocabulary:
    phrases: tuple[str, ...]
    counts: tuple[int, ...]

    def __len__(self):
        return len(self.phrases)

    def __iter__(self):
        return iter(zip(self.phrases, self.counts))

    def to_tsv(self) -> str:
        return "".join(f"{p}\t{c}\n" for p, c in self)

    @classmethod
    def from_tsv(cls, text: str) -> "Vocabulary":
        phrases, counts = [], []
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line:
                continue
            phrase, sep, count = line.rpartition("\t")
            if not sep or not phrase:
                raise ValueError(f"line {lineno}: expected 'phrase<TAB>count'")
            phrases.append(phrase)
            counts.append(int(count))
        return cls(tuple(phrases), tuple(counts))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_tsv())

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, encoding="utf-8") as fh:
            return cls.from_tsv(fh.read())


def count_candidates(captions: Iterable[str]) -> Counter:
    counts: Counter = Counter()
    for caption in captions:
        counts.update(extract_candidates(caption))
    return counts


def _chunks(it: Iterable[str], size: int) -> Iterator[list[str]]:
    it = iter(it)
    while chunk := list(islice(it, size)):
        yield chunk


def rank(counts: Counter, m: int, min_bigram_count: int = 2) -> Vocabulary:
    """Top ``m`` of a candidate count table, ties broken by phrase."""
    items = [
        (p, c) for p, c in counts.items() if c >= min_bigram_count or " " not in p
    ]
    items.sort(key=lambda pc: (-pc[1], pc[0]))
    items = items[:m]
    return Vocabulary(tuple(p for p, _ in items), tuple(c for _, c in items))


def build_vocabulary(
    corpus: Iterable[str],
    m: int = DEFAULT_VOCAB_SIZE,
    *,
    workers: int = 1,
    chunk_size: int = 10_000,
    min_bigram_count: int = 2,
) -> Vocabulary:
    """Count candidates over ``corpus`` and keep the ``m`` most frequent.

    Counting may be spread over ``workers`` processes; partial counts are
    summed, so the result does not depend on chunking or worker count.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if workers > 1:
        counts: Counter = Counter()
        with Pool(workers) as pool:
            for part in pool.imap_unordered(count_candidates, _chunks(corpus, chunk_size)):
                counts.update(part)
    else:
        counts = count_candidates(corpus)
    if not counts:
        raise EmptyCorpus("no candidate phrases in corpus")
    return rank(counts, m, min_bigram_count)
