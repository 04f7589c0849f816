"""Command-line entry point.

Exit codes: 0 success, 2 input or configuration error, 3 not enough data.
Flags override ``IEMETRICS_*`` environment variables, which override defaults.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import os
import sys
from pathlib import Path

from . import __version__
from .analysis import (
    CategoryReport,
    CorrelationKind,
    CorrelationMatrix,
    Scope,
    ShuffleConfig,
    correlate,
    per_category_breakdown,
    shuffle_entities,
)
from .corpus import (
    DIRECTORY,
    MODES,
    CorpusError,
    IOB2ParseError,
    load_corpus,
    parse_iob2,
    parse_iob2_documents,
    serialize_iob2,
    serialize_iob2_documents,
)
from .report import (
    FORMATS,
    aggregate,
    evaluate_corpus,
    evaluate_documents,
    format_percent,
    input_checksum,
    metric_names,
    render,
    render_json,
)
from .sequential import DEFAULT_THRESHOLD, NoReferenceEntities

log = logging.getLogger("iemetrics")

EXIT_OK, EXIT_INPUT, EXIT_DATA = 0, 2, 3
ENV_PREFIX = "IEMETRICS_"


class InputError(Exception):
    pass


class DataError(Exception):
    pass


def _env(name: str, default, convert=str):
    raw = os.environ.get(ENV_PREFIX + name)
    if raw is None or raw == "":
        return default
    try:
        return convert(raw)
    except ValueError:
        raise InputError(f"bad value for {ENV_PREFIX}{name}: {raw!r}")


def _flag(raw: str) -> bool:
    if raw.lower() in ("1", "true", "yes", "on"):
        return True
    if raw.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(raw)


def _thresholds(raw: str) -> list[float]:
    return [float(t) for t in raw.replace(",", " ").split()]


def _add_inputs(p: argparse.ArgumentParser) -> None:
    p.add_argument("labels", type=Path, help="reference IOB2 directory or file")
    p.add_argument("predictions", type=Path, help="hypothesis IOB2 directory or file")
    p.add_argument("--mode", choices=MODES, default=_env("MODE", DIRECTORY),
                   help="directory: one file per document, paired by name; "
                        "file: blank-line separated documents, paired by position")
    p.add_argument("--normalize", action=argparse.BooleanOptionalAction,
                   default=_env("NORMALIZE", False, _flag),
                   help="apply Unicode NFC to both sides before comparing")
    p.add_argument("--format", choices=FORMATS, default=_env("FORMAT", "markdown"))
    p.add_argument("--output", "-o", type=Path, help="write here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iemetrics", description="Evaluate named-entity extraction from document transcriptions."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("evaluate", help="compute corpus metrics")
    _add_inputs(ev)
    ev.add_argument("--threshold", type=float, nargs="+",
                    default=_env("THRESHOLD", [DEFAULT_THRESHOLD], _thresholds),
                    help="Nerval CER threshold(s) in [0, 1]; several values sweep")
    ev.add_argument("--metrics", nargs="+", help="subset of metrics to report")
    ev.add_argument("--per-document", action="store_true")
    ev.add_argument("--ci", action="store_true", help="add bootstrap 95%% confidence intervals")
    ev.add_argument("--resamples", type=int, default=_env("RESAMPLES", 1000, int))
    ev.add_argument("--seed", type=int, default=_env("SEED", 0, int))
    ev.add_argument("--jobs", type=int, default=_env("JOBS", 1, int))

    sh = sub.add_parser("shuffle", help="permute entity blocks of IOB2 documents")
    sh.add_argument("predictions", type=Path)
    sh.add_argument("output", type=Path, help="output directory (directory mode) or file")
    sh.add_argument("--mode", choices=MODES, default=_env("MODE", DIRECTORY))
    sh.add_argument("--seed", type=int, default=_env("SEED", None, int))
    sh.add_argument("--scope", choices=[s.value for s in Scope], default=Scope.HYPOTHESIS.value)
    sh.add_argument("--labels", type=Path, help="reference input, required with --scope both")
    sh.add_argument("--labels-output", type=Path, help="where shuffled references go with --scope both")

    bc = sub.add_parser("by-category", help="CER/WER per entity category")
    _add_inputs(bc)
    bc.add_argument("--categories", nargs="*", help="restrict to these categories")

    co = sub.add_parser("correlate", help="Pearson and Spearman matrices of per-document metrics")
    _add_inputs(co)
    co.add_argument("--threshold", type=float,
                    default=_env("THRESHOLD", [DEFAULT_THRESHOLD], _thresholds)[0])
    co.add_argument("--metrics", nargs="+")
    return parser


def _load(args):
    for p in (args.labels, args.predictions):
        if not p.exists() or not os.access(p, os.R_OK):
            raise InputError(f"cannot read {p}")
    return load_corpus(args.labels, args.predictions, args.mode)


def _provenance(args) -> dict:
    return {
        "mode": args.mode,
        "inputs": {
            "labels": {"path": str(args.labels), "sha256": input_checksum(args.labels)},
            "predictions": {"path": str(args.predictions), "sha256": input_checksum(args.predictions)},
        },
    }


def _emit(text: str, output: Path | None) -> None:
    if output is None:
        sys.stdout.write(text)
        return
    try:
        output.parent.mkdir(parents=True, exist_ok=True)
        output.write_text(text, encoding="utf-8", newline="")
    except OSError as exc:
        raise InputError(f"cannot write {output}: {exc}")


def _check_thresholds(values) -> None:
    for t in values:
        if not 0.0 <= t <= 1.0:
            raise InputError(f"threshold must lie in [0, 1], got {t}")


def cmd_evaluate(args) -> int:
    _check_thresholds(args.threshold)
    corpus = _load(args)
    header = _provenance(args)
    try:
        report = evaluate_corpus(
            corpus,
            thresholds=args.threshold,
            normalize=args.normalize,
            metrics=args.metrics,
            per_document=args.per_document,
            ci=args.ci,
            resamples=args.resamples,
            seed=args.seed,
            jobs=args.jobs,
            header=header,
        )
    except KeyError as exc:
        raise InputError(exc.args[0])
    _emit(render(report, args.format), args.output)
    return EXIT_OK


def _shuffle_path(src: Path, dst: Path, mode: str, cfg: ShuffleConfig, side: int) -> None:
    if not src.exists():
        raise InputError(f"cannot read {src}")
    if src.resolve() == dst.resolve():
        raise InputError("refusing to overwrite the input with its shuffle")
    try:
        if mode == DIRECTORY:
            dst.mkdir(parents=True, exist_ok=True)
            for path in sorted(p for p in src.iterdir() if p.is_file() and not p.name.startswith(".")):
                doc = parse_iob2(path.read_bytes().decode("utf-8"), path.stem, source=str(path))
                out = serialize_iob2(shuffle_entities(doc, cfg, side))
                (dst / path.name).write_text(out, encoding="utf-8", newline="")
        else:
            docs = parse_iob2_documents(src.read_bytes().decode("utf-8"), source=str(src))
            dst.parent.mkdir(parents=True, exist_ok=True)
            out = serialize_iob2_documents(shuffle_entities(d, cfg, side) for d in docs)
            dst.write_text(out, encoding="utf-8", newline="")
    except OSError as exc:
        raise InputError(f"cannot write {dst}: {exc}")


def cmd_shuffle(args) -> int:
    seed = args.seed
    if seed is None:
        seed = 0
        log.warning("no --seed given; using seed %d", seed)
    try:
        cfg = ShuffleConfig(seed, Scope(args.scope))
    except ValueError as exc:
        raise InputError(str(exc))
    if cfg.scope is Scope.BOTH:
        if args.labels is None or args.labels_output is None:
            raise InputError("--scope both needs --labels and --labels-output")
        _shuffle_path(args.labels, args.labels_output, args.mode, cfg, side=0)
    _shuffle_path(args.predictions, args.output, args.mode, cfg, side=1)
    return EXIT_OK


def render_categories(report: CategoryReport, fmt: str) -> str:
    if fmt == "json":
        return render_json({
            "rows": [
                {"category": r.category, "cer": r.cer, "wer": r.wer, "entities": r.entities,
                 "cer_display": format_percent(r.cer), "wer_display": format_percent(r.wer)}
                for r in report.rows
            ],
            "total": {"cer": report.total_cer, "wer": report.total_wer,
                      "cer_display": format_percent(report.total_cer),
                      "wer_display": format_percent(report.total_wer)},
            "note": report.note,
        })
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["category", "cer", "wer", "entities"])
        for r in report.rows:
            w.writerow([r.category, format_percent(r.cer), format_percent(r.wer), r.entities])
        w.writerow(["total (including untagged words)", format_percent(report.total_cer),
                    format_percent(report.total_wer), ""])
        return buf.getvalue()
    lines = ["| Category | CER ↓ | WER ↓ | Number of entities |", "|---|---:|---:|---:|"]
    for r in report.rows:
        lines.append(f"| {r.category} | {format_percent(r.cer)} | {format_percent(r.wer)} | {r.entities} |")
    lines.append(f"| total (including untagged words) | {format_percent(report.total_cer)} | "
                 f"{format_percent(report.total_wer)} | - |")
    lines += ["", f"Note: {report.note}."]
    return "\n".join(lines) + "\n"


def cmd_by_category(args) -> int:
    corpus = _load(args)
    try:
        report = per_category_breakdown(corpus, args.categories or None, args.normalize)
    except KeyError as exc:
        raise InputError(exc.args[0])
    _emit(render_categories(report, args.format), args.output)
    return EXIT_OK


def per_document_table(results, threshold: float, metrics=None) -> dict[str, list[float]]:
    """Metric columns over documents that have reference entities and defined scores."""
    names = metrics or metric_names((threshold,))
    rows = []
    for r in results:
        if r.n_ref == 0:
            continue
        s = aggregate([r], (threshold,))
        if any(math.isnan(s[m]) for m in names):
            continue
        rows.append(s)
    return {m: [s[m] for s in rows] for m in names}


def _matrix_dict(m: CorrelationMatrix) -> dict:
    def clean(v):
        return None if math.isnan(v) else float(v)

    return {
        "names": list(m.names),
        "n": m.n,
        "coefficients": [[clean(v) for v in row] for row in m.coefficients],
        "p_values": [[clean(v) for v in row] for row in m.p_values],
        "stars": [[m.stars(i, j) for j in range(len(m.names))] for i in range(len(m.names))],
    }


def render_correlations(mats: list[CorrelationMatrix], fmt: str) -> str:
    if fmt == "json":
        return render_json({m.kind.value: _matrix_dict(m) for m in mats})
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["kind", "metric_a", "metric_b", "coefficient", "p_value", "stars"])
        for m in mats:
            for i, a in enumerate(m.names):
                for j, b in enumerate(m.names):
                    r, p = m.coefficients[i, j], m.p_values[i, j]
                    w.writerow([m.kind.value, a, b, "" if math.isnan(r) else repr(float(r)),
                                "" if math.isnan(p) else repr(float(p)), m.stars(i, j)])
        return buf.getvalue()
    lines = []
    for m in mats:
        title = "Absolute linear correlation (Pearson)" if m.kind is CorrelationKind.PEARSON \
            else "Absolute rank correlation (Spearman)"
        lines += [f"{title}, n = {m.n} documents", ""]
        lines.append("| | " + " | ".join(m.names) + " |")
        lines.append("|---|" + "---:|" * len(m.names))
        for i, a in enumerate(m.names):
            lines.append(f"| {a} | " + " | ".join(m.cell(i, j) for j in range(len(m.names))) + " |")
        lines.append("")
    lines.append("* p < 0.05, ** p < 0.01, *** p < 0.001")
    return "\n".join(lines) + "\n"


def cmd_correlate(args) -> int:
    _check_thresholds([args.threshold])
    corpus = _load(args)
    available = metric_names((args.threshold,))
    if args.metrics:
        unknown = [m for m in args.metrics if m not in available]
        if unknown:
            raise InputError(f"unknown metric(s): {', '.join(unknown)}")
    results = evaluate_documents(corpus, (args.threshold,), args.normalize)
    table = per_document_table(results, args.threshold, args.metrics)
    n = len(next(iter(table.values()), []))
    if n < 3:
        raise DataError(f"correlation needs at least 3 scorable documents, got {n}")
    mats = [correlate(table, CorrelationKind.PEARSON), correlate(table, CorrelationKind.SPEARMAN)]
    _emit(render_correlations(mats, args.format), args.output)
    return EXIT_OK


COMMANDS = {
    "evaluate": cmd_evaluate,
    "shuffle": cmd_shuffle,
    "by-category": cmd_by_category,
    "correlate": cmd_correlate,
}


def main(argv: list[str] | None = None) -> int:
    try:
        parser = build_parser()
    except InputError as exc:
        print(f"iemetrics: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="iemetrics: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except (InputError, CorpusError, IOB2ParseError, UnicodeDecodeError) as exc:
        print(f"iemetrics: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (DataError, NoReferenceEntities) as exc:
        print(f"iemetrics: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())
