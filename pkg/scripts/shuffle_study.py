"""How much does each metric move when entity blocks are shuffled?

Runs on a released dataset (``--data``) or, by default, on synthetic
corpora with recognition noise. Prints mean and spread of the shift per
metric over several shuffle seeds.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from iemetrics.analysis import ShuffleConfig, shuffle_corpus
from iemetrics.corpus import load_corpus
from iemetrics.report import evaluate_corpus, metric_names

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))


def synthetic(seed: int, docs: int):
    from synth import random_corpus

    return random_corpus(seed, n_docs=docs)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data", type=Path, help="dataset dir holding labels/ and predictions/")
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--docs", type=int, default=200, help="synthetic corpus size")
    args = ap.parse_args(argv)

    if args.data:
        corpus = load_corpus(args.data / "labels", args.data / "predictions")
    else:
        corpus = synthetic(0, args.docs)
    base = evaluate_corpus(corpus).scores
    shifts = {m: [] for m in metric_names()}
    for seed in range(args.seeds):
        scores = evaluate_corpus(shuffle_corpus(corpus, ShuffleConfig(seed))).scores
        for m in shifts:
            shifts[m].append(scores[m] - base[m])

    print(f"{len(corpus)} documents, {args.seeds} shuffle seeds")
    print(f"{'metric':<12} {'regular':>8} {'mean shift':>11} {'max |shift|':>12}")
    for m, d in shifts.items():
        d = np.array(d)
        print(f"{m:<12} {base[m]:8.2f} {d.mean():11.2f} {np.abs(d).max():12.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
