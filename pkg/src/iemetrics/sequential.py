"""Reading-order dependent entity metrics: ECER/EWER and Nerval.

Both align the reference and hypothesis entity sequences monotonically, so a
hypothesis emitted in a different order than the reference is penalized.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .corpus import Corpus, EntitySequence, TaggedEntity
from .distance import char_edits, word_edits

DEFAULT_THRESHOLD = 0.30


class Kind(str, enum.Enum):
    """Which transcription rate drives the substitution cost."""

    ECER = "ECER"
    EWER = "EWER"


class NoReferenceEntities(ValueError):
    pass


@dataclass(frozen=True)
class NervalConfig:
    threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self) -> None:
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must lie in [0, 1], got {self.threshold}")


@dataclass(frozen=True)
class MatchCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.fn) < 0:
            raise ValueError(f"negative count in {self}")

    def __add__(self, other: "MatchCounts") -> "MatchCounts":
        return MatchCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)

    @classmethod
    def total(cls, counts: Iterable["MatchCounts"]) -> "MatchCounts":
        out = cls()
        for c in counts:
            out = out + c
        return out


@dataclass(frozen=True)
class PrfScores:
    precision: float
    recall: float
    f1: float


def prf_from_counts(counts: MatchCounts) -> PrfScores:
    """Micro precision/recall/F1 in percent; a zero denominator yields 0."""
    tp, fp, fn = counts.tp, counts.fp, counts.fn
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return PrfScores(100 * p, 100 * r, 100 * f1)


def _rate_capped(x: TaggedEntity, y: TaggedEntity, kind: Kind, normalize: bool) -> float:
    edits = char_edits if kind is Kind.ECER else word_edits
    return edits(x.transcription, y.transcription, normalize).capped


def entity_substitution_cost(
    x: TaggedEntity, y: TaggedEntity, kind: Kind = Kind.ECER, normalize: bool = False
) -> float:
    if x.category != y.category:
        return 1.0
    return _rate_capped(x, y, Kind(kind), normalize)


def substitution_matrix(
    x: EntitySequence, y: EntitySequence, kind: Kind = Kind.ECER, normalize: bool = False
) -> np.ndarray:
    """|x| by |y| table of entity substitution costs (no dummies)."""
    kind = Kind(kind)
    m = np.ones((len(x), len(y)), dtype=np.float64)
    for j, xe in enumerate(x):
        for k, ye in enumerate(y):
            if xe.category == ye.category:
                m[j, k] = _rate_capped(xe, ye, kind, normalize)
    return m


def nerval_match_matrix(capped_cer: np.ndarray, threshold: float) -> np.ndarray:
    """Boolean acceptability of each pair, from a category-aware capped CER table.

    Category mismatches carry cost 1.0 in that table; they must never match,
    even at threshold 1.0, so they are tracked separately by the caller.
    """
    return capped_cer <= threshold


def category_match_matrix(x: EntitySequence, y: EntitySequence) -> np.ndarray:
    cx = np.array([e.category for e in x], dtype=object)
    cy = np.array([e.category for e in y], dtype=object)
    if not len(cx) or not len(cy):
        return np.zeros((len(cx), len(cy)), dtype=bool)
    return cx[:, None] == cy[None, :]


def sequence_edit_cost(costs: np.ndarray) -> float:
    """Monotone alignment cost with unit insertions/deletions and the given substitution table."""
    n, m = costs.shape
    prev = [float(k) for k in range(m + 1)]
    for j in range(1, n + 1):
        row = costs[j - 1]
        cur = [float(j)]
        for k in range(1, m + 1):
            cur.append(min(prev[k] + 1.0, cur[k - 1] + 1.0, prev[k - 1] + float(row[k - 1])))
        prev = cur
    return prev[m]


def ecer_ewer_document(
    x: EntitySequence, y: EntitySequence, kind: Kind = Kind.ECER, normalize: bool = False
) -> tuple[float, int]:
    """Unnormalized alignment cost and reference entity count for one document."""
    return sequence_edit_cost(substitution_matrix(x, y, kind, normalize)), len(x)


def _nerval_align(match: np.ndarray) -> int:
    # cells hold (cost, -matches): pair cost 0 on a match, 2 otherwise, skips
    # cost 1; comparing tuples breaks cost ties toward more matches
    n, m = match.shape
    prev = [(k, 0) for k in range(m + 1)]
    for j in range(1, n + 1):
        cur = [(j, 0)]
        for k in range(1, m + 1):
            dc, dneg = prev[k - 1]
            diag = (dc, dneg - 1) if match[j - 1, k - 1] else (dc + 2, dneg)
            up = (prev[k][0] + 1, prev[k][1])
            left = (cur[k - 1][0] + 1, cur[k - 1][1])
            cur.append(min(up, left, diag))
        prev = cur
    return -prev[m][1]


def nerval_document(
    x: EntitySequence,
    y: EntitySequence,
    cfg: NervalConfig = NervalConfig(),
    normalize: bool = False,
    capped_cer: np.ndarray | None = None,
) -> MatchCounts:
    """Sequential entity matching under a CER threshold.

    A pair matches when categories agree and the capped CER is at most the
    threshold. ``capped_cer`` may pass a precomputed ECER substitution table.
    """
    if capped_cer is None:
        capped_cer = substitution_matrix(x, y, Kind.ECER, normalize)
    match = category_match_matrix(x, y) & nerval_match_matrix(capped_cer, cfg.threshold)
    tp = _nerval_align(match)
    return MatchCounts(tp, len(y) - tp, len(x) - tp)


def _sequences(corpus: Corpus):
    for pair in corpus:
        yield pair.reference.entities(), pair.hypothesis.entities()


def ecer_corpus(corpus: Corpus, kind: Kind = Kind.ECER, normalize: bool = False) -> float:
    """Corpus ECER/EWER in percent: summed document costs over summed reference entities."""
    cost, length = 0.0, 0
    for x, y in _sequences(corpus):
        c, n = ecer_ewer_document(x, y, kind, normalize)
        cost += c
        length += n
    if length == 0:
        raise NoReferenceEntities("no reference entities in corpus")
    return 100 * cost / length


def nerval_corpus(
    corpus: Corpus, cfg: NervalConfig = NervalConfig(), normalize: bool = False
) -> PrfScores:
    counts = MatchCounts.total(nerval_document(x, y, cfg, normalize) for x, y in _sequences(corpus))
    return prf_from_counts(counts)
