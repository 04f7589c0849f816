"""Per-category breakdowns, entity-block shuffling, bootstrap intervals and
cross-metric correlations."""

from __future__ import annotations

import enum
import zlib
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import stats

from .assignment import build_oi_cost_matrix, solve_assignment
from .corpus import Corpus, Document, DocumentPair, Token, extract_entities
from .distance import EditCount, char_edits, word_edits
from .sequential import Kind

# Shuffles draw from numpy's PCG64 bit generator seeded with
# SeedSequence([seed, side, crc32(doc_id)]). Changing this breaks reproducibility
# of previously published shuffles.
SHUFFLE_RNG = "numpy.random.PCG64/SeedSequence([seed, side, crc32(doc_id)])"

PAIRING_NOTE = (
    "entities are paired within each category by minimum-cost assignment on "
    "capped CER (WER for the WER column); unmatched reference entities count "
    "as deletions and unmatched hypothesis entities as insertions"
)


@dataclass(frozen=True)
class CategoryRow:
    category: str
    cer: float
    wer: float
    entities: int
    char: EditCount
    word: EditCount


@dataclass(frozen=True)
class CategoryReport:
    rows: tuple[CategoryRow, ...]
    total_cer: float
    total_wer: float
    total_char: EditCount
    total_word: EditCount
    note: str = PAIRING_NOTE

    @property
    def entity_total(self) -> int:
        return sum(r.entities for r in self.rows)


def _pooled_category_edits(pair: DocumentPair, category: str, kind: Kind, normalize: bool) -> EditCount:
    x = pair.reference.entities().restrict(category)
    y = pair.hypothesis.entities().restrict(category)
    edits = char_edits if kind is Kind.ECER else word_edits
    m = build_oi_cost_matrix(x, y, kind, normalize)
    total = EditCount()
    for row, col in solve_assignment(m).pairs:
        ref = x[row].transcription if row < len(x) else ""
        hyp = y[col].transcription if col < len(y) else ""
        total = total + edits(ref, hyp, normalize)
    return total


def per_category_breakdown(
    corpus: Corpus, categories: Sequence[str] | None = None, normalize: bool = False
) -> CategoryReport:
    """CER and WER per reference category, plus tag-stripped full-text totals."""
    present: dict[str, int] = {}
    for pair in corpus:
        for e in pair.reference.entities():
            present[e.category] = present.get(e.category, 0) + 1
    if categories is None:
        categories = sorted(present)
    else:
        unknown = [c for c in categories if c not in present]
        if unknown:
            raise KeyError(f"categories not found in the reference: {', '.join(unknown)}")

    rows = []
    for cat in categories:
        ch, wd = EditCount(), EditCount()
        for pair in corpus:
            ch = ch + _pooled_category_edits(pair, cat, Kind.ECER, normalize)
            wd = wd + _pooled_category_edits(pair, cat, Kind.EWER, normalize)
        rows.append(CategoryRow(cat, 100 * ch.rate, 100 * wd.rate, present[cat], ch, wd))

    tch, twd = EditCount(), EditCount()
    for pair in corpus:
        tch = tch + char_edits(pair.reference.text, pair.hypothesis.text, normalize)
        twd = twd + word_edits(pair.reference.text, pair.hypothesis.text, normalize)
    return CategoryReport(tuple(rows), 100 * tch.rate, 100 * twd.rate, tch, twd)


class Scope(str, enum.Enum):
    HYPOTHESIS = "hypothesis"
    BOTH = "both"


@dataclass(frozen=True)
class ShuffleConfig:
    seed: int = 0
    scope: Scope = Scope.HYPOTHESIS

    def __post_init__(self) -> None:
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "scope", Scope(self.scope))


def _rng(seed: int, side: int, doc_id: str) -> np.random.Generator:
    ss = np.random.SeedSequence([seed, side, zlib.crc32(doc_id.encode("utf-8"))])
    return np.random.Generator(np.random.PCG64(ss))


def shuffle_entities(doc: Document, cfg: ShuffleConfig = ShuffleConfig(), side: int = 1) -> Document:
    """Permute the entity blocks of a document; O tokens keep their positions.

    Each block is re-emitted with a B- tag on its first token so that two
    same-category blocks landing next to each other stay separate entities.
    ``side`` (0 reference, 1 hypothesis) selects an independent stream.
    """
    blocks = [(e.start, e.end) for e in extract_entities(doc)]
    if len(blocks) < 2:
        return doc
    order = _rng(cfg.seed, side, doc.id).permutation(len(blocks))
    tokens = list(doc.tokens)
    out: list[Token] = []
    pos = 0
    for slot, (start, end) in enumerate(blocks):
        out.extend(tokens[pos:start])
        src_start, src_end = blocks[order[slot]]
        block = tokens[src_start:src_end]
        first = block[0]
        out.append(Token(first.text, "B-" + first.tag[2:]))
        out.extend(block[1:])
        pos = end
    out.extend(tokens[pos:])
    return Document(doc.id, tuple(out))


def shuffle_corpus(corpus: Corpus, cfg: ShuffleConfig = ShuffleConfig()) -> Corpus:
    pairs = []
    for pair in corpus:
        ref = pair.reference
        if cfg.scope is Scope.BOTH:
            ref = shuffle_entities(ref, cfg, side=0)
        pairs.append(DocumentPair(ref, shuffle_entities(pair.hypothesis, cfg, side=1)))
    return Corpus(tuple(pairs))


@dataclass(frozen=True)
class ConfidenceInterval:
    point: float
    low: float
    high: float
    level: float = 0.95
    resamples: int = 1000


def bootstrap_ci(
    per_document_scores: Sequence,
    aggregator: Callable[[Sequence], float],
    level: float = 0.95,
    resamples: int = 1000,
    seed: int = 0,
) -> ConfidenceInterval:
    """Percentile bootstrap over documents.

    ``per_document_scores`` holds one item per document (a number or any
    per-document summary); ``aggregator`` turns a list of items into the
    corpus score. The bounds are widened to contain the point estimate when
    a skewed resampling distribution would leave it outside.
    """
    out = bootstrap_cis(per_document_scores, lambda xs: {"": aggregator(xs)}, level, resamples, seed)
    return out[""]


def bootstrap_cis(
    per_document_scores: Sequence,
    aggregator: Callable[[Sequence], Mapping[str, float]],
    level: float = 0.95,
    resamples: int = 1000,
    seed: int = 0,
) -> dict[str, ConfidenceInterval]:
    """Like :func:`bootstrap_ci` for an aggregator returning several named scores.

    Every score sees the same resamples, so this equals calling
    :func:`bootstrap_ci` once per name with the same seed.
    """
    items = list(per_document_scores)
    n = len(items)
    if n < 2:
        raise ValueError("bootstrap needs at least 2 documents")
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    if resamples < 1:
        raise ValueError("resamples must be positive")
    rng = np.random.Generator(np.random.PCG64(seed))
    point = {k: float(v) for k, v in aggregator(items).items()}
    draws = {k: np.empty(resamples) for k in point}
    for b in range(resamples):
        idx = rng.integers(0, n, size=n)
        for k, v in aggregator([items[i] for i in idx]).items():
            if k in draws:
                draws[k][b] = v
    alpha = (1 - level) / 2
    out = {}
    for k, p in point.items():
        if np.all(np.isnan(draws[k])):
            low = high = p
        else:
            low, high = np.nanquantile(draws[k], [alpha, 1 - alpha])
        out[k] = ConfidenceInterval(p, min(float(low), p), max(float(high), p), level, resamples)
    return out


def bootstrap_additive(
    components: np.ndarray,
    finalize: Callable[[np.ndarray], Mapping[str, np.ndarray]],
    point: Mapping[str, float],
    level: float = 0.95,
    resamples: int = 1000,
    seed: int = 0,
) -> dict[str, ConfidenceInterval]:
    """Percentile bootstrap for scores that are functions of per-document sums.

    ``components`` has one row per document. ``finalize`` maps a
    (resamples, columns) array of pooled sums to named score arrays. Draws
    the same document resamples as :func:`bootstrap_cis` with equal seed.
    """
    comps = np.asarray(components, dtype=float)
    n = comps.shape[0]
    if n < 2:
        raise ValueError("bootstrap needs at least 2 documents")
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    if resamples < 1:
        raise ValueError("resamples must be positive")
    rng = np.random.Generator(np.random.PCG64(seed))
    weights = np.empty((resamples, n))
    for b in range(resamples):
        weights[b] = np.bincount(rng.integers(0, n, size=n), minlength=n)
    draws = finalize(weights @ comps)
    alpha = (1 - level) / 2
    out = {}
    for k, p in point.items():
        d = np.asarray(draws[k], dtype=float)
        if np.all(np.isnan(d)):
            low = high = p
        else:
            low, high = np.nanquantile(d, [alpha, 1 - alpha])
        out[k] = ConfidenceInterval(float(p), min(float(low), p), max(float(high), p), level, resamples)
    return out


class CorrelationKind(str, enum.Enum):
    PEARSON = "pearson"
    SPEARMAN = "spearman"


@dataclass(frozen=True)
class CorrelationMatrix:
    names: tuple[str, ...]
    coefficients: np.ndarray
    p_values: np.ndarray
    kind: CorrelationKind
    n: int = field(default=0)

    def stars(self, i: int, j: int) -> str:
        return significance_stars(self.p_values[i, j])

    def cell(self, i: int, j: int, absolute: bool = True) -> str:
        r = self.coefficients[i, j]
        if np.isnan(r):
            return ""
        r = abs(r) if absolute else r
        return f"{r:.2f}{self.stars(i, j)}"


def significance_stars(p: float) -> str:
    if np.isnan(p):
        return ""
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    da, db = a - a.mean(), b - b.mean()
    denom = np.sqrt(np.dot(da, da) * np.dot(db, db))
    if denom == 0:
        return float("nan")
    return float(np.clip(np.dot(da, db) / denom, -1.0, 1.0))


def _t_pvalue(r: float, n: int) -> float:
    if np.isnan(r):
        return float("nan")
    if abs(r) >= 1.0:
        return 0.0
    t = r * np.sqrt((n - 2) / (1 - r * r))
    return float(2 * stats.t.sf(abs(t), n - 2))


def correlate(table: Mapping[str, Sequence[float]], kind: CorrelationKind = CorrelationKind.PEARSON) -> CorrelationMatrix:
    """Pairwise correlation of per-document metric columns.

    Spearman ranks with averaged ties. p-values are two-sided from a t
    statistic with n-2 degrees of freedom. A constant column gives NaN
    off-diagonal entries.
    """
    kind = CorrelationKind(kind)
    names = tuple(table)
    cols = [np.asarray(table[k], dtype=np.float64) for k in names]
    n = len(cols[0]) if cols else 0
    if any(len(c) != n for c in cols):
        raise ValueError("metric columns differ in length")
    if n < 3:
        raise ValueError("correlation needs at least 3 documents")
    if kind is CorrelationKind.SPEARMAN:
        cols = [stats.rankdata(c, method="average") for c in cols]
    k = len(names)
    r = np.eye(k)
    p = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            r[i, j] = r[j, i] = _pearson(cols[i], cols[j])
            p[i, j] = p[j, i] = _t_pvalue(r[i, j], n)
    return CorrelationMatrix(names, r, p, kind, n)
