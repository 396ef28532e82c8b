#!/usr/bin/env python3
"""Drive the whole pipeline over one dataset directory.

Runs prepare, tokenize, embed, whiten, train, and eval in order,
collecting every artifact under one working directory. Each stage is
the same code path as the standalone CLI, so the manifests written
along the way fully describe the run.
"""

from __future__ import annotations

import argparse
import os
import sys

from kgsem.cli import main as kgsem_main


def stage(argv: list[str]) -> None:
    print("+ kgsem " + " ".join(argv), file=sys.stderr)
    code = kgsem_main(argv)
    if code != 0:
        raise SystemExit(code)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dataset", required=True, help="dataset directory with train/valid/test.txt")
    parser.add_argument("--workdir", required=True, help="directory for all pipeline outputs")
    parser.add_argument("--labels", default=None, help="name<TAB>text label file (default: <dataset>/labels.tsv if present)")
    parser.add_argument("--model", default="aesi", help="model variant (default aesi)")
    parser.add_argument("--dim", type=int, default=128, help="embedding dimension (default 128)")
    parser.add_argument("--sem-dim", type=int, default=768, help="raw semantic vector dimension (default 768)")
    parser.add_argument("--target-size", type=int, default=2000, help="subword vocabulary size (default 2000)")
    parser.add_argument("--epochs", type=int, default=50, help="training epochs (default 50)")
    parser.add_argument("--lr", type=float, default=0.001, help="learning rate (default 0.001)")
    parser.add_argument("--margin", type=float, default=4.0, help="ranking margin (default 4.0)")
    parser.add_argument("--norm", type=int, choices=(1, 2), default=2, help="score norm p (default 2)")
    parser.add_argument("--C", type=float, default=0.001, help="soft-constraint weight (default 0.001)")
    parser.add_argument("--seed", type=int, default=0, help="run seed (default 0)")
    parser.add_argument("--eval-threads", type=int, default=1, help="evaluation threads (default 1)")
    args = parser.parse_args()

    labels = args.labels
    if labels is None:
        candidate = os.path.join(args.dataset, "labels.tsv")
        labels = candidate if os.path.exists(candidate) else None

    w = args.workdir
    os.makedirs(w, exist_ok=True)
    subwords = os.path.join(w, "subwords.vocab")
    semvec = os.path.join(w, "raw.semvec")
    white = os.path.join(w, "whitened.semvec")
    ckpt = os.path.join(w, "checkpoint")
    report = os.path.join(w, "report.json")
    label_flags = ["--labels", labels] if labels else []

    stage(["prepare", "--dataset", args.dataset, "--out", os.path.join(w, "prepared"), "--seed", str(args.seed)])
    stage(
        ["tokenize", "--dataset", args.dataset, *label_flags,
         "--target-size", str(args.target_size), "--out", subwords, "--seed", str(args.seed)]
    )
    train_sem_flags = []
    if args.model == "aesi":
        stage(
            ["embed", "--dataset", args.dataset, *label_flags, "--subwords", subwords,
             "--dim", str(args.sem_dim), "--seed", str(args.seed), "--out", semvec]
        )
        stage(
            ["whiten", "--dataset", args.dataset, "--semvec", semvec,
             "--k", str(args.dim), "--out", white, "--seed", str(args.seed)]
        )
        train_sem_flags = ["--semvec", white]
    stage(
        ["train", "--dataset", args.dataset, "--model", args.model, "--dim", str(args.dim),
         "--epochs", str(args.epochs), "--lr", str(args.lr), "--margin", str(args.margin),
         "--norm", str(args.norm), "--C", str(args.C), "--seed", str(args.seed),
         *train_sem_flags, "--out", ckpt]
    )
    stage(
        ["eval", "--dataset", args.dataset, "--checkpoint", ckpt,
         "--threads", str(args.eval_threads), "--out", report, "--seed", str(args.seed)]
    )
    print(f"pipeline complete; report at {report}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
