"""Evaluate released predictions, regular and shuffled, next to the published scores.

Expects ``<data>/<dataset>/{labels,predictions}``; ``--data`` defaults to
``$IEMETRICS_DATA_DIR``. Missing datasets are reported and skipped.
"""

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from iemetrics.analysis import ShuffleConfig, shuffle_corpus
from iemetrics.corpus import load_corpus
from iemetrics.report import evaluate_corpus, format_percent, metric_names

log = logging.getLogger("reproduce")
PUBLISHED = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "published_scores.json"
DATASETS = ("iam", "simara", "esposalles", "popp")


def evaluate(base: Path, seed: int, jobs: int) -> dict:
    corpus = load_corpus(base / "labels", base / "predictions")
    t0 = time.perf_counter()
    regular = evaluate_corpus(corpus, jobs=jobs).scores
    elapsed = time.perf_counter() - t0
    shuffled = evaluate_corpus(shuffle_corpus(corpus, ShuffleConfig(seed)), jobs=jobs).scores
    return {"regular": regular, "shuffled": shuffled, "seconds": elapsed, "documents": len(corpus)}


def table(name: str, got: dict, published: dict) -> str:
    lines = [f"### {name} ({got['documents']} documents, {got['seconds']:.1f}s)", "",
             "| Metric | Reg. | published | Shuf. | published |", "|---|---:|---:|---:|---:|"]
    for m in metric_names():
        cells = [format_percent(got["regular"][m]), f"{published['regular'][m]:.1f}",
                 format_percent(got["shuffled"][m]), f"{published['shuffled'][m]:.1f}"]
        lines.append(f"| {m} | " + " | ".join(cells) + " |")
    return "\n".join(lines)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data", type=Path, default=os.environ.get("IEMETRICS_DATA_DIR"))
    ap.add_argument("--datasets", nargs="+", default=list(DATASETS), choices=DATASETS)
    ap.add_argument("--seed", type=int, default=0, help="shuffle seed")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--json", type=Path, help="also dump raw scores here")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    if args.data is None:
        ap.error("no data directory: pass --data or set IEMETRICS_DATA_DIR")

    published = json.loads(PUBLISHED.read_text(encoding="utf-8"))
    raw = {}
    for name in args.datasets:
        base = args.data / name
        if not (base / "labels").is_dir():
            log.warning("skipping %s: %s/labels not found", name, base)
            continue
        raw[name] = evaluate(base, args.seed, args.jobs)
        print(table(name, raw[name], {k: v[name] for k, v in published.items() if name in v}))
        print()
    if args.json:
        args.json.write_text(json.dumps(raw, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return 0 if raw else 1


if __name__ == "__main__":
    sys.exit(main())
