"""Corpus evaluation and report rendering (JSON, CSV, markdown)."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from functools import partial
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .analysis import ConfidenceInterval, bootstrap_additive
from .assignment import build_nerval_cost_matrix, build_oi_cost_matrix, counts_from_assignment, solve_assignment
from .bags import bag_error_numerator, bag_match_counts, entity_bag, tagged_word_bag
from .corpus import Corpus, DocumentPair
from .distance import EditCount, char_edits, word_edits
from .sequential import (
    DEFAULT_THRESHOLD,
    Kind,
    MatchCounts,
    NervalConfig,
    NoReferenceEntities,
    nerval_document,
    sequence_edit_cost,
    substitution_matrix,
)

SCHEMA = "iemetrics.report/1"
FORMATS = ("markdown", "csv", "json")

# conventional display order: entity alignment, matching, bags, then plain text rates
_BASE_METRICS = (
    "ECER", "OIECER", "EWER", "OIEWER",
    "Nerval-P", "OINerval-P", "Nerval-R", "OINerval-R", "Nerval-F1", "OINerval-F1",
    "btWER", "bt-P", "bt-R", "bt-F1",
    "beER", "be-P", "be-R", "be-F1",
    "CER", "WER",
)  # fmt: skip
_THRESHOLDED = {"Nerval-P", "OINerval-P", "Nerval-R", "OINerval-R", "Nerval-F1", "OINerval-F1"}
HIGHER_IS_BETTER = {m for m in _BASE_METRICS if m[-2:] in ("-P", "-R", "F1")}


def format_percent(value: float) -> str:
    """One decimal, round-half-even on the shortest decimal repr of ``value``."""
    if value is None or math.isnan(value):
        return ""
    if math.isinf(value):
        return "inf"
    return str(Decimal(repr(value)).quantize(Decimal("0.1"), rounding=ROUND_HALF_EVEN))


def _tkey(threshold: float) -> str:
    return format(threshold, "g")


def metric_names(thresholds: Sequence[float] = (DEFAULT_THRESHOLD,)) -> list[str]:
    """All metric names in report order; Nerval rows get ``@M`` suffixes when sweeping."""
    names = []
    for m in _BASE_METRICS:
        if m in _THRESHOLDED and len(thresholds) > 1:
            names.extend(f"{m}@{_tkey(t)}" for t in thresholds)
        else:
            names.append(m)
    return names


@dataclass(frozen=True)
class DocumentResult:
    """Everything needed to pool one document into corpus scores."""

    id: str
    n_ref: int
    n_hyp: int
    char: EditCount
    word: EditCount
    ecer: float
    ewer: float
    oiecer: float
    oiewer: float
    nerval: dict[str, MatchCounts]
    oinerval: dict[str, MatchCounts]
    bt: MatchCounts
    bt_errors: int
    bt_ref: int
    be: MatchCounts
    be_errors: int
    repairs_ref: int = 0
    repairs_hyp: int = 0


def evaluate_document(
    pair: DocumentPair, thresholds: Sequence[float] = (DEFAULT_THRESHOLD,), normalize: bool = False
) -> DocumentResult:
    x, y = pair.reference.entities(), pair.hypothesis.entities()
    sub_c = substitution_matrix(x, y, Kind.ECER, normalize)
    sub_w = substitution_matrix(x, y, Kind.EWER, normalize)
    nerval, oinerval = {}, {}
    for t in thresholds:
        cfg = NervalConfig(t)
        nerval[_tkey(t)] = nerval_document(x, y, cfg, capped_cer=sub_c)
        m = build_nerval_cost_matrix(x, y, cfg, capped_cer=sub_c)
        oinerval[_tkey(t)] = counts_from_assignment(m, solve_assignment(m))
    btx, bty = tagged_word_bag(x, normalize), tagged_word_bag(y, normalize)
    bex, bey = entity_bag(x, normalize), entity_bag(y, normalize)
    ref_text, hyp_text = pair.reference.text, pair.hypothesis.text
    return DocumentResult(
        id=pair.id,
        n_ref=len(x),
        n_hyp=len(y),
        char=char_edits(ref_text, hyp_text, normalize),
        word=word_edits(ref_text, hyp_text, normalize),
        ecer=sequence_edit_cost(sub_c),
        ewer=sequence_edit_cost(sub_w),
        oiecer=solve_assignment(build_oi_cost_matrix(x, y, substitution=sub_c)).total_cost,
        oiewer=solve_assignment(build_oi_cost_matrix(x, y, substitution=sub_w)).total_cost,
        nerval=nerval,
        oinerval=oinerval,
        bt=bag_match_counts(btx, bty),
        bt_errors=bag_error_numerator(btx, bty),
        bt_ref=btx.total,
        be=bag_match_counts(bex, bey),
        be_errors=bag_error_numerator(bex, bey),
        repairs_ref=len(x.repairs),
        repairs_hyp=len(y.repairs),
    )


def evaluate_documents(
    corpus: Corpus,
    thresholds: Sequence[float] = (DEFAULT_THRESHOLD,),
    normalize: bool = False,
    jobs: int = 1,
) -> list[DocumentResult]:
    work = partial(evaluate_document, thresholds=tuple(thresholds), normalize=normalize)
    if jobs <= 1 or len(corpus) < 2:
        return [work(p) for p in corpus]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(work, corpus.pairs, chunksize=max(1, len(corpus) // (4 * jobs))))


def _columns(thresholds: Sequence[float]) -> list[str]:
    cols = ["n_ref", "ecer", "oiecer", "ewer", "oiewer", "bt_errors", "bt_ref", "be_errors",
            "char_edits", "char_len", "word_edits", "word_len"]
    groups = [f"{p}@{_tkey(t)}" for t in thresholds for p in ("nerval", "oinerval")] + ["bt", "be"]
    return cols + [f"{g}.{c}" for g in groups for c in ("tp", "fp", "fn")]


def _row(r: DocumentResult, thresholds: Sequence[float]) -> list[float]:
    row = [r.n_ref, r.ecer, r.oiecer, r.ewer, r.oiewer, r.bt_errors, r.bt_ref, r.be_errors,
           r.char.edits, r.char.length, r.word.edits, r.word.length]
    counts = [c for t in thresholds for c in (r.nerval[_tkey(t)], r.oinerval[_tkey(t)])] + [r.bt, r.be]
    for c in counts:
        row += [c.tp, c.fp, c.fn]
    return row


def _ratio(num, den):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den > 0, 100 * num / np.where(den > 0, den, 1), np.nan)


def _prf(tp, fp, fn):
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(tp + fp > 0, tp / np.where(tp + fp > 0, tp + fp, 1), 0.0)
        r = np.where(tp + fn > 0, tp / np.where(tp + fn > 0, tp + fn, 1), 0.0)
        f1 = np.where(p + r > 0, 2 * p * r / np.where(p + r > 0, p + r, 1), 0.0)
    return 100 * p, 100 * r, 100 * f1


def _scores_from_sums(s: dict, thresholds: Sequence[float]) -> dict:
    """Corpus scores from pooled column sums; works on scalars or arrays of resamples."""
    out = {
        "ECER": _ratio(s["ecer"], s["n_ref"]),
        "OIECER": _ratio(s["oiecer"], s["n_ref"]),
        "EWER": _ratio(s["ewer"], s["n_ref"]),
        "OIEWER": _ratio(s["oiewer"], s["n_ref"]),
        "btWER": _ratio(s["bt_errors"], s["bt_ref"]),
        "beER": _ratio(s["be_errors"], s["n_ref"]),
        "CER": _ratio(s["char_edits"], s["char_len"]),
        "WER": _ratio(s["word_edits"], s["word_len"]),
    }
    sweep = len(thresholds) > 1
    groups = [(f"{p}@{_tkey(t)}", name, f"@{_tkey(t)}" if sweep else "")
              for t in thresholds for p, name in (("nerval", "Nerval"), ("oinerval", "OINerval"))]
    groups += [("bt", "bt", ""), ("be", "be", "")]
    for g, name, suffix in groups:
        p, r, f1 = _prf(s[f"{g}.tp"], s[f"{g}.fp"], s[f"{g}.fn"])
        out[f"{name}-P{suffix}"], out[f"{name}-R{suffix}"], out[f"{name}-F1{suffix}"] = p, r, f1
    return out


def aggregate(results: Sequence[DocumentResult], thresholds: Sequence[float] = (DEFAULT_THRESHOLD,)) -> dict[str, float]:
    """Pool document results into percent scores; undefined ratios are NaN."""
    cols = _columns(thresholds)
    rows = [_row(r, thresholds) for r in results]
    sums = {c: np.float64(math.fsum(row[i] for row in rows)) for i, c in enumerate(cols)}
    return {k: float(v) for k, v in _scores_from_sums(sums, thresholds).items()}


def document_scores(result: DocumentResult, thresholds: Sequence[float] = (DEFAULT_THRESHOLD,)) -> dict[str, float]:
    return aggregate([result], thresholds)


@dataclass
class MetricReport:
    header: dict
    scores: dict[str, float]
    metrics: list[str]
    documents: list[dict] | None = None
    intervals: dict[str, ConfidenceInterval] = field(default_factory=dict)
    excluded: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        rows = []
        for name in self.metrics:
            v = self.scores[name]
            row = {"name": name, "value": _json_float(v), "display": format_percent(v)}
            ci = self.intervals.get(name)
            if ci is not None:
                row["ci"] = {
                    "low": _json_float(ci.low),
                    "high": _json_float(ci.high),
                    "level": ci.level,
                    "resamples": ci.resamples,
                }
            rows.append(row)
        out = {"schema": SCHEMA, "header": self.header, "metrics": rows, "excluded_documents": self.excluded}
        if self.documents is not None:
            out["documents"] = [
                {"id": d["id"], "scores": {m: _json_float(d["scores"][m]) for m in self.metrics}}
                for d in self.documents
            ]
        return out


def _json_float(v: float):
    if v is None or math.isnan(v):
        return None
    if math.isinf(v):
        return "inf"
    return v


def input_checksum(path: str | Path) -> str:
    """sha256 of a file, or of a directory's files (relative names and bytes, sorted)."""
    path = Path(path)
    h = hashlib.sha256()
    if path.is_dir():
        for p in sorted(q for q in path.rglob("*") if q.is_file()):
            h.update(p.relative_to(path).as_posix().encode("utf-8") + b"\0")
            h.update(hashlib.sha256(p.read_bytes()).digest())
    else:
        h.update(path.read_bytes())
    return h.hexdigest()


def evaluate_corpus(
    corpus: Corpus,
    thresholds: Sequence[float] = (DEFAULT_THRESHOLD,),
    normalize: bool = False,
    metrics: Sequence[str] | None = None,
    per_document: bool = False,
    ci: bool = False,
    resamples: int = 1000,
    seed: int = 0,
    jobs: int = 1,
    header: dict | None = None,
) -> MetricReport:
    thresholds = tuple(thresholds)
    available = metric_names(thresholds)
    if metrics:
        unknown = [m for m in metrics if m not in available]
        if unknown:
            raise KeyError(f"unknown metric(s): {', '.join(unknown)}")
        selected = [m for m in available if m in set(metrics)]
    else:
        selected = available

    results = evaluate_documents(corpus, thresholds, normalize, jobs)
    if sum(r.n_ref for r in results) == 0:
        raise NoReferenceEntities("no reference entities in corpus")
    scores = aggregate(results, thresholds)

    intervals = {}
    if ci:
        cols = _columns(thresholds)
        components = np.array([_row(r, thresholds) for r in results], dtype=float)
        intervals = bootstrap_additive(
            components,
            lambda sums: _scores_from_sums(dict(zip(cols, sums.T)), thresholds),
            {m: scores[m] for m in selected},
            resamples=resamples,
            seed=seed,
        )

    docs = None
    if per_document:
        docs = [
            {"id": r.id, "scores": document_scores(r, thresholds)}
            for r in results
            if not (r.n_ref == 0 and r.n_hyp > 0)
        ]

    hdr = {
        "tool": "iemetrics",
        "version": __version__,
        "seed": seed,
        "thresholds": list(thresholds),
        "normalize": normalize,
        "documents": len(results),
        "reference_entities": sum(r.n_ref for r in results),
        "hypothesis_entities": sum(r.n_hyp for r in results),
        "repaired_tags": {
            "reference": sum(r.repairs_ref for r in results),
            "hypothesis": sum(r.repairs_hyp for r in results),
        },
    }
    if header:
        hdr.update(header)
    excluded = [r.id for r in results if r.n_ref == 0 and r.n_hyp > 0]
    return MetricReport(hdr, {m: scores[m] for m in selected}, selected, docs, intervals, excluded)


def render_json(data: dict) -> str:
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False, allow_nan=False) + "\n"


def render(report: MetricReport, fmt: str) -> str:
    if fmt == "json":
        return render_json(report.to_dict())
    if fmt == "csv":
        return _render_csv(report)
    if fmt == "markdown":
        return _render_markdown(report)
    raise ValueError(f"unknown format {fmt!r}")


def _render_csv(report: MetricReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["document", "metric", "value", "display", "ci_low", "ci_high"])
    for name in report.metrics:
        v = report.scores[name]
        ci = report.intervals.get(name)
        w.writerow(
            ["", name, repr(v), format_percent(v)]
            + ([repr(ci.low), repr(ci.high)] if ci else ["", ""])
        )
    for d in report.documents or []:
        for name in report.metrics:
            v = d["scores"][name]
            w.writerow([d["id"], name, "" if math.isnan(v) else repr(v), format_percent(v), "", ""])
    return buf.getvalue()


def _render_markdown(report: MetricReport) -> str:
    lines = []
    with_ci = bool(report.intervals)
    head = "| Metric | Score |" + (" 95% CI |" if with_ci else "")
    lines += [head, "|---|---:|" + ("---:|" if with_ci else "")]
    for name in report.metrics:
        v = report.scores[name]
        arrow = "↑" if name.split("@")[0] in HIGHER_IS_BETTER else "↓"
        row = f"| {name} {arrow} | {format_percent(v)} |"
        ci = report.intervals.get(name)
        if with_ci:
            row += f" [{format_percent(ci.low)}, {format_percent(ci.high)}] |" if ci else " |"
        lines.append(row)
    if report.documents:
        lines += ["", "| Document | " + " | ".join(report.metrics) + " |"]
        lines.append("|---|" + "---:|" * len(report.metrics))
        for d in report.documents:
            cells = [format_percent(d["scores"][m]) for m in report.metrics]
            lines.append(f"| {d['id']} | " + " | ".join(cells) + " |")
    if report.excluded:
        lines += ["", "Documents without reference entities (excluded from per-document rates): "
                  + ", ".join(report.excluded)]
    return "\n".join(lines) + "\n"
