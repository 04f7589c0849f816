"""Time a full evaluation on synthetic corpora shaped like the released test sets."""

import argparse
import sys
import time
from pathlib import Path

from iemetrics.report import evaluate_corpus

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
from synth import random_corpus  # noqa: E402

# (name, documents, max entities per document), roughly matching test-set sizes
SHAPES = (("simara-like", 804, 8), ("iam-like", 336, 40), ("popp-like", 16, 300), ("esposalles-like", 200, 30))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ci", action="store_true", help="include bootstrap intervals")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args(argv)
    for name, docs, ents in SHAPES:
        corpus = random_corpus(1, n_docs=docs, max_entities=ents)
        t0 = time.perf_counter()
        evaluate_corpus(corpus, ci=args.ci, jobs=args.jobs)
        print(f"{name:<16} {docs:5d} docs  {time.perf_counter() - t0:6.2f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
