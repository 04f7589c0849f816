import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iemetrics.distance import (
    _levenshtein_np,
    _levenshtein_py,
    capped_cer,
    capped_wer,
    cer,
    levenshtein,
    wer,
)
from oracles import edit_distance_bfs


@pytest.mark.parametrize(
    "a,b,expected",
    [
        ("abc", "abc", 0),
        ("abc", "", 3),
        ("", "abc", 3),
        ("26 mai 1770", "26 mai 1771", edit_distance_bfs("1770", "1771")),
    ],
)
def test_levenshtein_examples(a, b, expected):
    assert levenshtein(a, b) == expected


def test_rates():
    assert cer("abc", "abc") == 0.0
    assert cer("abc", "") == 1.0
    assert cer("a", "bcd") == edit_distance_bfs("a", "bcd") / 1 == 3.0
    assert wer("Contre Denis QUIROT", "Contre Denis") == pytest.approx(1 / 3)
    assert wer("a b", "a b") == 0.0
    assert wer("a", "b c d") == 3.0


def test_empty_reference():
    assert cer("", "") == 0.0
    assert math.isinf(cer("", "x"))
    assert capped_cer("", "x") == 1.0
    assert capped_cer("", "") == 0.0
    assert capped_wer("", "a b") == 1.0


def test_capped():
    assert capped_cer("a", "bcd") == 1.0
    assert capped_cer("john", "jhn") == edit_distance_bfs("john", "jhn") / 4 == 0.25


def test_wer_tokenization():
    assert wer("  a   b ", "a b") == 0.0


def test_nfc_optional():
    composed, decomposed = "\u00e9", "e\u0301"
    assert cer(composed, decomposed) > 0
    assert cer(composed, decomposed, normalize=True) == 0.0


short = st.text(alphabet="abc", max_size=5)


@settings(max_examples=300)
@given(short, short)
def test_levenshtein_matches_bfs(a, b):
    assert levenshtein(a, b) == edit_distance_bfs(a, b)


@given(short, short, short)
def test_metric_axioms(a, b, c):
    assert levenshtein(a, b) == levenshtein(b, a)
    assert (levenshtein(a, b) == 0) == (a == b)
    assert levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c)


@given(st.text(alphabet="abcd", max_size=80), st.text(alphabet="abcd", max_size=80))
def test_numpy_path_agrees(a, b):
    if a and b:
        assert _levenshtein_np(a, b) == _levenshtein_py(a, b)


@given(st.lists(st.sampled_from(["x", "y", "zz"]), max_size=70), st.lists(st.sampled_from(["x", "y", "zz"]), max_size=70))
def test_numpy_path_on_words(a, b):
    if a and b:
        assert _levenshtein_np(a, b) == _levenshtein_py(a, b)


def test_long_strings_use_numpy_and_agree():
    a = "abcde" * 120
    b = "abdde" * 100 + "xyz"
    assert levenshtein(a, b) == _levenshtein_py(a, b)


@given(st.text(max_size=10))
def test_identity_rates(a):
    assert cer(a, a) == 0.0
    assert wer(a, a) == 0.0


@given(short, short)
def test_capped_bounded_and_monotone(a, b):
    if a:
        assert capped_cer(a, b) == min(1.0, cer(a, b))
    assert 0.0 <= capped_cer(a, b) <= 1.0
