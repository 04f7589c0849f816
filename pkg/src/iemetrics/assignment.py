"""Order-independent entity metrics via minimum-cost assignment.

The reference and hypothesis entity lists are padded to a square table with
dummy slots (cost 1, an entity insertion or deletion) and paired one-to-one
by an exact Hungarian solver, so entity order plays no part in the score.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, EntitySequence
from .sequential import (
    Kind,
    MatchCounts,
    NervalConfig,
    NoReferenceEntities,
    PrfScores,
    category_match_matrix,
    prf_from_counts,
    substitution_matrix,
)

DUMMY_COST = 1.0
MISMATCH_COST = 2.0


@dataclass(frozen=True)
class CostMatrix:
    """Square padded cost table: rows are reference slots, columns hypothesis slots.

    Rows ``>= n_ref`` and columns ``>= n_hyp`` are dummies.
    """

    costs: np.ndarray
    n_ref: int
    n_hyp: int

    def __post_init__(self) -> None:
        c = np.asarray(self.costs, dtype=np.float64)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError(f"cost matrix must be square, got shape {c.shape}")
        object.__setattr__(self, "costs", c)

    @property
    def n(self) -> int:
        return self.costs.shape[0]


@dataclass(frozen=True)
class Assignment:
    # columns[i] is the column paired with row i
    columns: tuple[int, ...]
    total_cost: float

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return list(enumerate(self.columns))


def solve_assignment(costs) -> Assignment:
    """Exact minimum-cost perfect matching on a square matrix, O(n^3).

    Shortest augmenting path with row/column potentials (Kuhn-Munkres). Rows
    are inserted one at a time; the inner scan over columns is vectorized.
    """
    if isinstance(costs, CostMatrix):
        costs = costs.costs
    c = np.asarray(costs, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError(f"cost matrix must be square, got shape {c.shape}")
    if not np.all(np.isfinite(c)):
        raise ValueError("cost matrix entries must be finite")
    if np.any(c < 0):
        raise ValueError("cost matrix entries must be non-negative")
    n = c.shape[0]
    if n == 0:
        return Assignment((), 0.0)

    # 1-based internally; column 0 is the virtual start of each search
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    row_of = np.zeros(n + 1, dtype=np.int64)  # row_of[col], 0 = free
    way = np.zeros(n + 1, dtype=np.int64)
    for i in range(1, n + 1):
        row_of[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = row_of[j0]
            free = ~used[1:]
            reduced = c[i0 - 1] - u[i0] - v[1:]
            better = free & (reduced < minv[1:])
            minv[1:][better] = reduced[better]
            way[1:][better] = j0
            cand = np.where(free, minv[1:], np.inf)
            j1 = int(np.argmin(cand)) + 1
            delta = cand[j1 - 1]
            used_cols = np.flatnonzero(used)
            u[row_of[used_cols]] += delta
            v[used_cols] -= delta
            minv[1:][free] -= delta
            j0 = j1
            if row_of[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            row_of[j0] = row_of[j1]
            j0 = j1

    columns = [0] * n
    for j in range(1, n + 1):
        columns[row_of[j] - 1] = j - 1
    total = math.fsum(c[i, columns[i]] for i in range(n))
    return Assignment(tuple(columns), total)


def _pad(real: np.ndarray, n_ref: int, n_hyp: int) -> CostMatrix:
    n = max(n_ref, n_hyp)
    m = np.full((n, n), DUMMY_COST)
    m[:n_ref, :n_hyp] = real
    return CostMatrix(m, n_ref, n_hyp)


def build_oi_cost_matrix(
    x: EntitySequence,
    y: EntitySequence,
    kind: Kind = Kind.ECER,
    normalize: bool = False,
    substitution: np.ndarray | None = None,
) -> CostMatrix:
    if substitution is None:
        substitution = substitution_matrix(x, y, kind, normalize)
    return _pad(substitution, len(x), len(y))


def oi_document_cost(
    x: EntitySequence,
    y: EntitySequence,
    kind: Kind = Kind.ECER,
    normalize: bool = False,
    substitution: np.ndarray | None = None,
) -> tuple[float, int]:
    """Optimal assignment cost and reference entity count for one document."""
    return solve_assignment(build_oi_cost_matrix(x, y, kind, normalize, substitution)).total_cost, len(x)


def oiecer_corpus(corpus: Corpus, kind: Kind = Kind.ECER, normalize: bool = False) -> float:
    """Corpus OIECER/OIEWER in percent."""
    cost, length = 0.0, 0
    for pair in corpus:
        c, n = oi_document_cost(pair.reference.entities(), pair.hypothesis.entities(), kind, normalize)
        cost += c
        length += n
    if length == 0:
        raise NoReferenceEntities("no reference entities in corpus")
    return 100 * cost / length


def build_nerval_cost_matrix(
    x: EntitySequence,
    y: EntitySequence,
    cfg: NervalConfig = NervalConfig(),
    normalize: bool = False,
    capped_cer: np.ndarray | None = None,
) -> CostMatrix:
    """Costs in {0, 1, 2}: dummy 1, category mismatch or CER above threshold 2, else 0."""
    if capped_cer is None:
        capped_cer = substitution_matrix(x, y, Kind.ECER, normalize)
    ok = category_match_matrix(x, y) & (capped_cer <= cfg.threshold)
    return _pad(np.where(ok, 0.0, MISMATCH_COST), len(x), len(y))


def counts_from_assignment(m: CostMatrix, a: Assignment) -> MatchCounts:
    tp = fp = fn = 0
    for row, col in a.pairs:
        real_ref, real_hyp = row < m.n_ref, col < m.n_hyp
        if real_ref and real_hyp:
            if m.costs[row, col] == 0.0:
                tp += 1
            else:
                fp += 1
                fn += 1
        elif real_ref:
            fn += 1
        elif real_hyp:
            fp += 1
    return MatchCounts(tp, fp, fn)


def oi_nerval_document(
    x: EntitySequence,
    y: EntitySequence,
    cfg: NervalConfig = NervalConfig(),
    normalize: bool = False,
    capped_cer: np.ndarray | None = None,
) -> MatchCounts:
    m = build_nerval_cost_matrix(x, y, cfg, normalize, capped_cer)
    return counts_from_assignment(m, solve_assignment(m))


def oi_nerval_corpus(
    corpus: Corpus, cfg: NervalConfig = NervalConfig(), normalize: bool = False
) -> PrfScores:
    counts = MatchCounts.total(
        oi_nerval_document(p.reference.entities(), p.hypothesis.entities(), cfg, normalize)
        for p in corpus
    )
    return prf_from_counts(counts)
