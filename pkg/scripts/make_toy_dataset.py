#!/usr/bin/env python3
"""Generate a deterministic synthetic dataset directory.

Writes train.txt / valid.txt / test.txt triple files plus a labels.tsv
mapping every entity and relation name to a short synthetic phrase, so
the whole pipeline (including tokenization and the fallback embedder)
can run without any external data.
"""

from __future__ import annotations

import argparse
import os

import numpy as np

SYLLABLES = [
    "ba", "ce", "di", "fo", "gu", "ka", "le", "mi", "no", "pu",
    "ra", "se", "ti", "vo", "wu", "za", "el", "or", "an", "ix",
]


def phrase(rng: np.random.Generator, n_words: int) -> str:
    words = []
    for _ in range(n_words):
        n_syll = 1 + int(rng.integers(3))
        words.append("".join(SYLLABLES[int(i)] for i in rng.integers(len(SYLLABLES), size=n_syll)))
    return " ".join(words)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", required=True, help="output dataset directory")
    parser.add_argument("--entities", type=int, default=50, help="number of entities (default 50)")
    parser.add_argument("--relations", type=int, default=5, help="number of relations (default 5)")
    parser.add_argument("--triples", type=int, default=400, help="total triples across splits (default 400)")
    parser.add_argument("--valid-frac", type=float, default=0.15, help="validation fraction (default 0.15)")
    parser.add_argument("--test-frac", type=float, default=0.15, help="test fraction (default 0.15)")
    parser.add_argument("--seed", type=int, default=0, help="generator seed (default 0)")
    args = parser.parse_args()

    if args.entities < 2 or args.relations < 1:
        parser.error("need at least 2 entities and 1 relation")
    cap = args.entities * (args.entities - 1) * args.relations
    if args.triples > cap:
        parser.error(f"{args.triples} distinct triples impossible; max is {cap}")

    rng = np.random.default_rng(args.seed)
    entities = [f"node_{i:04d}" for i in range(args.entities)]
    relations = [f"rel_{j:02d}" for j in range(args.relations)]

    seen = set()
    triples = []
    while len(triples) < args.triples:
        h = int(rng.integers(args.entities))
        t = int(rng.integers(args.entities))
        if h == t:
            continue
        r = int(rng.integers(args.relations))
        if (h, r, t) in seen:
            continue
        seen.add((h, r, t))
        triples.append((h, r, t))

    n_valid = int(args.triples * args.valid_frac)
    n_test = int(args.triples * args.test_frac)
    n_train = args.triples - n_valid - n_test
    splits = {
        "train": triples[:n_train],
        "valid": triples[n_train : n_train + n_valid],
        "test": triples[n_train + n_valid :],
    }

    os.makedirs(args.out, exist_ok=True)
    for split, rows in splits.items():
        with open(os.path.join(args.out, f"{split}.txt"), "w", encoding="utf-8") as fh:
            for h, r, t in rows:
                fh.write(f"{entities[h]}\t{relations[r]}\t{entities[t]}\n")

    with open(os.path.join(args.out, "labels.tsv"), "w", encoding="utf-8") as fh:
        for name in entities:
            fh.write(f"{name}\t{phrase(rng, 2 + int(rng.integers(2)))}\n")
        for name in relations:
            fh.write(f"{name}\t{phrase(rng, 1 + int(rng.integers(2)))}\n")

    print(
        f"wrote {n_train}/{n_valid}/{len(splits['test'])} train/valid/test triples, "
        f"{args.entities} entities, {args.relations} relations -> {args.out}"
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
