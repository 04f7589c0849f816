"""Bag-of-tagged-words and bag-of-entities metrics.

Entities (or their words) are counted as ``(category, text)`` items, so order
plays no part at all. Words outside entities are dropped.
"""

from __future__ import annotations

import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping

from .corpus import Corpus, EntitySequence
from .sequential import MatchCounts, NoReferenceEntities, PrfScores, prf_from_counts


@dataclass(frozen=True)
class FrequencyTable:
    counts: Mapping[Hashable, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        counts = dict(self.counts)
        bad = [k for k, v in counts.items() if v < 1]
        if bad:
            raise ValueError(f"counts must be positive, got {bad[:3]}")
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @classmethod
    def of(cls, items: Iterable[Hashable]) -> "FrequencyTable":
        return cls(Counter(items))


def _norm(s: str, normalize: bool) -> str:
    return unicodedata.normalize("NFC", s) if normalize else s


def tagged_word_bag(seq: EntitySequence, normalize: bool = False) -> FrequencyTable:
    return FrequencyTable.of(
        (e.category, _norm(w, normalize)) for e in seq for w in e.transcription.split()
    )


def entity_bag(seq: EntitySequence, normalize: bool = False) -> FrequencyTable:
    return FrequencyTable.of((e.category, _norm(e.transcription, normalize)) for e in seq)


def bag_match_counts(ref: FrequencyTable, hyp: FrequencyTable) -> MatchCounts:
    tp = fp = fn = 0
    for item in ref.counts.keys() | hyp.counts.keys():
        fx, fy = ref.counts.get(item, 0), hyp.counts.get(item, 0)
        tp += min(fx, fy)
        fp += max(fy - fx, 0)
        fn += max(fx - fy, 0)
    return MatchCounts(tp, fp, fn)


def bag_error_numerator(ref: FrequencyTable, hyp: FrequencyTable) -> int:
    """``(||X| - |Y|| + sum |f_X - f_Y|) / 2``, always an integer.

    The two terms are added: the length gap alone would score any two bags
    of equal size as perfect.
    """
    gap = abs(ref.total - hyp.total)
    diff = sum(
        abs(ref.counts.get(v, 0) - hyp.counts.get(v, 0))
        for v in ref.counts.keys() | hyp.counts.keys()
    )
    # gap and diff share parity, since diff = FP + FN and gap = |FP - FN|
    return (gap + diff) // 2


def bag_error_rate(ref: FrequencyTable, hyp: FrequencyTable) -> float:
    """Bag error rate in percent for a single reference/hypothesis pair."""
    if ref.total == 0:
        raise NoReferenceEntities("empty reference bag")
    return 100 * bag_error_numerator(ref, hyp) / ref.total


@dataclass(frozen=True)
class BagScores:
    error_rate: float
    prf: PrfScores
    counts: MatchCounts
    errors: int
    reference_total: int


def _bag_corpus(corpus: Corpus, bag, normalize: bool) -> BagScores:
    errors = total = 0
    counts = MatchCounts()
    for pair in corpus:
        x = bag(pair.reference.entities(), normalize)
        y = bag(pair.hypothesis.entities(), normalize)
        errors += bag_error_numerator(x, y)
        total += x.total
        counts = counts + bag_match_counts(x, y)
    if total == 0:
        raise NoReferenceEntities("no reference entities in corpus")
    return BagScores(100 * errors / total, prf_from_counts(counts), counts, errors, total)


def tagged_word_scores(corpus: Corpus, normalize: bool = False) -> BagScores:
    """btWER plus bag-of-tagged-words P/R/F1 for a corpus."""
    return _bag_corpus(corpus, tagged_word_bag, normalize)


def entity_bag_scores(corpus: Corpus, normalize: bool = False) -> BagScores:
    """beER plus bag-of-entities P/R/F1 for a corpus."""
    return _bag_corpus(corpus, entity_bag, normalize)
