"""Unit-cost edit distance and the character/word error rates built on it.

Characters are Unicode code points. Comparison is case-sensitive and no
normalization is applied unless ``normalize=True`` (NFC on both sides).
"""

from __future__ import annotations

import math
import unicodedata
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

# below this many DP cells the plain Python loop beats numpy call overhead
_NUMPY_CELLS = 4096


def _nfc(s: str, normalize: bool) -> str:
    return unicodedata.normalize("NFC", s) if normalize else s


def _trim(a: Sequence, b: Sequence) -> tuple[Sequence, Sequence]:
    start = 0
    n = min(len(a), len(b))
    while start < n and a[start] == b[start]:
        start += 1
    end = 0
    while end < n - start and a[len(a) - 1 - end] == b[len(b) - 1 - end]:
        end += 1
    return a[start : len(a) - end], b[start : len(b) - end]


def _levenshtein_py(a: Sequence, b: Sequence) -> int:
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def _levenshtein_np(a: Sequence[Hashable], b: Sequence[Hashable]) -> int:
    codes: dict = {}
    av = np.fromiter((codes.setdefault(x, len(codes)) for x in a), dtype=np.int64, count=len(a))
    bv = np.fromiter((codes.setdefault(x, len(codes)) for x in b), dtype=np.int64, count=len(b))
    m = len(bv)
    offsets = np.arange(m + 1, dtype=np.int64)
    prev = offsets.copy()
    for i in range(1, len(av) + 1):
        tmp = np.empty(m + 1, dtype=np.int64)
        tmp[0] = i
        np.minimum(prev[1:] + 1, prev[:-1] + (bv != av[i - 1]), out=tmp[1:])
        # insertions chain left to right: cur[j] = min_k<=j tmp[k] + (j - k)
        prev = np.minimum.accumulate(tmp - offsets) + offsets
    return int(prev[-1])


def levenshtein(a: Sequence[Hashable], b: Sequence[Hashable]) -> int:
    """Minimal number of unit insertions, deletions and substitutions turning a into b."""
    a, b = _trim(a, b)
    if not a:
        return len(b)
    if not b:
        return len(a)
    if len(a) < len(b):
        a, b = b, a
    if len(a) * len(b) < _NUMPY_CELLS:
        return _levenshtein_py(a, b)
    return _levenshtein_np(a, b)


@dataclass(frozen=True)
class EditCount:
    """Edits plus reference length; pooled across strings before dividing."""

    edits: int = 0
    length: int = 0

    def __add__(self, other: "EditCount") -> "EditCount":
        return EditCount(self.edits + other.edits, self.length + other.length)

    @property
    def rate(self) -> float:
        if self.length == 0:
            return 0.0 if self.edits == 0 else math.inf
        return self.edits / self.length

    @property
    def capped(self) -> float:
        return min(1.0, self.rate)


def words(text: str) -> list[str]:
    return text.split()


def char_edits(reference: str, hypothesis: str, normalize: bool = False) -> EditCount:
    reference, hypothesis = _nfc(reference, normalize), _nfc(hypothesis, normalize)
    return EditCount(levenshtein(reference, hypothesis), len(reference))


def word_edits(reference: str, hypothesis: str, normalize: bool = False) -> EditCount:
    ref = words(_nfc(reference, normalize))
    return EditCount(levenshtein(ref, words(_nfc(hypothesis, normalize))), len(ref))


def cer(reference: str, hypothesis: str, normalize: bool = False) -> float:
    """Character error rate as a fraction; ``inf`` for an empty reference with a non-empty hypothesis."""
    return char_edits(reference, hypothesis, normalize).rate


def wer(reference: str, hypothesis: str, normalize: bool = False) -> float:
    return word_edits(reference, hypothesis, normalize).rate


def capped_cer(reference: str, hypothesis: str, normalize: bool = False) -> float:
    return char_edits(reference, hypothesis, normalize).capped


def capped_wer(reference: str, hypothesis: str, normalize: bool = False) -> float:
    return word_edits(reference, hypothesis, normalize).capped
