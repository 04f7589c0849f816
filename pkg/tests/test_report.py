import json
import math

import numpy as np
import pytest

from iemetrics.analysis import bootstrap_ci, bootstrap_cis
from iemetrics.corpus import Corpus, Document, DocumentPair, Token
from iemetrics.report import (
    DocumentResult,
    aggregate,
    evaluate_corpus,
    evaluate_document,
    format_percent,
    metric_names,
    render,
)
from iemetrics.sequential import NoReferenceEntities
from synth import random_corpus


def test_format_percent_half_even():
    assert [format_percent(v) for v in (0.25, 0.35, 12.05, 72.22, 100.0)] == ["0.2", "0.4", "12.0", "72.2", "100.0"]
    assert format_percent(math.nan) == "" and format_percent(math.inf) == "inf"


def test_metric_names():
    base = metric_names()
    assert base[:2] == ["ECER", "OIECER"] and base[-2:] == ["CER", "WER"] and len(base) == 20
    swept = metric_names((0.1, 0.5))
    assert "Nerval-F1@0.1" in swept and "Nerval-F1" not in swept and "ECER" in swept


def test_aggregate_pools_documents():
    c = random_corpus(5, n_docs=6)
    results = [evaluate_document(p) for p in c]
    whole = aggregate(results)
    n_ref = sum(r.n_ref for r in results)
    assert whole["OIECER"] == pytest.approx(100 * sum(r.oiecer for r in results) / n_ref)
    assert whole["ECER"] != pytest.approx(np.mean([aggregate([r])["ECER"] for r in results if r.n_ref]))


def test_empty_reference_document_excluded_from_rows_only():
    ref = Document("a", (Token("x", "B-P"),))
    hyp = Document("a", (Token("x", "B-P"),))
    extra = DocumentPair(Document("b", (Token("y", "O"),)), Document("b", (Token("y", "B-P"),)))
    rep = evaluate_corpus(Corpus((DocumentPair(ref, hyp), extra)), per_document=True)
    assert rep.excluded == ["b"] and [d["id"] for d in rep.documents] == ["a"]
    # the spurious entity still counts in the pooled numerator
    assert rep.scores["ECER"] == 100.0
    assert rep.scores["Nerval-P"] == 50.0


def test_no_reference_entities():
    pair = DocumentPair(Document("a", (Token("y", "O"),)), Document("a", (Token("y", "B-P"),)))
    with pytest.raises(NoReferenceEntities):
        evaluate_corpus(Corpus((pair,)))


def test_unknown_metric():
    with pytest.raises(KeyError):
        evaluate_corpus(random_corpus(1), metrics=["bogus"])


def test_json_is_deterministic_and_strict():
    c = random_corpus(2, n_docs=8)
    a = render(evaluate_corpus(c, ci=True, resamples=30, per_document=True), "json")
    b = render(evaluate_corpus(c, ci=True, resamples=30, per_document=True), "json")
    assert a == b and a.endswith("\n")
    json.loads(a, parse_constant=lambda x: pytest.fail(f"non-standard constant {x}"))


def test_multi_bootstrap_matches_single():
    xs = list(np.random.default_rng(1).random(20))
    many = bootstrap_cis(xs, lambda v: {"mean": np.mean(v), "max": np.max(v)}, resamples=100, seed=3)
    assert many["mean"] == bootstrap_ci(xs, np.mean, resamples=100, seed=3)
    assert many["max"] == bootstrap_ci(xs, np.max, resamples=100, seed=3)


def test_document_result_round_trips_through_aggregate():
    r = evaluate_document(next(iter(random_corpus(9))))
    assert isinstance(r, DocumentResult)
    assert set(aggregate([r])) == set(metric_names())


def test_aggregate_agrees_with_match_count_pooling():
    from iemetrics.sequential import prf_from_counts, MatchCounts

    results = [evaluate_document(p) for p in random_corpus(12, n_docs=9)]
    s = aggregate(results)
    for name, attr in (("OINerval", "oinerval"), ("Nerval", "nerval")):
        prf = prf_from_counts(MatchCounts.total(getattr(r, attr)["0.3"] for r in results))
        assert (s[f"{name}-P"], s[f"{name}-R"], s[f"{name}-F1"]) == (prf.precision, prf.recall, prf.f1)
    prf = prf_from_counts(MatchCounts.total(r.be for r in results))
    assert s["be-F1"] == prf.f1


def test_additive_bootstrap_matches_generic():
    from iemetrics.analysis import bootstrap_additive
    from iemetrics.report import _columns, _row, _scores_from_sums

    results = [evaluate_document(p) for p in random_corpus(13, n_docs=10)]
    th = (0.3,)
    point = aggregate(results)
    generic = bootstrap_cis(results, lambda rs: aggregate(rs), resamples=60, seed=8)
    comps = np.array([_row(r, th) for r in results], dtype=float)
    fast = bootstrap_additive(comps, lambda s: _scores_from_sums(dict(zip(_columns(th), s.T)), th), point,
                              resamples=60, seed=8)
    for name in point:
        assert fast[name].low == pytest.approx(generic[name].low, nan_ok=True)
        assert fast[name].high == pytest.approx(generic[name].high, nan_ok=True)


def test_large_corpus_within_budget():
    import time

    corpus = random_corpus(1, n_docs=804, max_entities=8)
    t0 = time.perf_counter()
    evaluate_corpus(corpus, ci=True, resamples=1000)
    assert time.perf_counter() - t0 < 120
