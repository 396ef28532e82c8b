#!/usr/bin/env python3
"""Opt-in full-scale benchmark runs (hours of CPU).

Trains the complete model on the full WN18 and/or FB15K datasets with
the published settings and compares the resulting metrics against the
reference results, reporting relative deviation per metric. Dataset
directories come from --wn18/--fb15k flags or the KGC_WN18_DIR /
KGC_FB15K_DIR environment variables; anything not supplied is skipped.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from kgsem.cli import main as kgsem_main

REFERENCE = {
    "wn18": {"mr_raw": 302.2, "mr_filt": 300.9, "hits10_raw": 77.3, "hits10_filt": 87.9},
    "fb15k": {"mr_raw": 201.0, "mr_filt": 82.0, "hits10_raw": 48.3, "hits10_filt": 59.8},
}


def stage(argv: list[str]) -> None:
    print("+ kgsem " + " ".join(argv), file=sys.stderr)
    code = kgsem_main(argv)
    if code != 0:
        raise SystemExit(code)


def run_one(name: str, dataset: str, workdir: str, epochs: int, threads: int, seed: int) -> bool:
    ckpt = os.path.join(workdir, name, "checkpoint")
    report_path = os.path.join(workdir, name, "report.json")
    started = time.perf_counter()
    stage(
        ["train", "--dataset", dataset, "--model", "aesi", "--dim", "128",
         "--norm", "1", "--lr", "0.001", "--margin", "4.0", "--C", "0.001",
         "--epochs", str(epochs), "--seed", str(seed), "--out", ckpt]
    )
    stage(
        ["eval", "--dataset", dataset, "--checkpoint", ckpt,
         "--threads", str(threads), "--out", report_path]
    )
    with open(report_path, encoding="utf-8") as fh:
        got = json.load(fh)
    elapsed = time.perf_counter() - started
    ok = True
    print(f"{name}: {elapsed / 3600:.2f}h")
    for metric, want in REFERENCE[name].items():
        rel = abs(got[metric] - want) / want
        status = "ok" if rel <= 0.10 else "OUT OF BAND"
        ok = ok and rel <= 0.10
        print(f"  {metric:12s} got {got[metric]:8.2f}  reference {want:8.2f}  deviation {100 * rel:5.1f}%  {status}")
    return ok


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--wn18", default=os.environ.get("KGC_WN18_DIR"), help="WN18 dataset directory")
    parser.add_argument("--fb15k", default=os.environ.get("KGC_FB15K_DIR"), help="FB15K dataset directory")
    parser.add_argument("--workdir", required=True, help="directory for checkpoints and reports")
    parser.add_argument("--epochs", type=int, default=500, help="training epochs (default 500)")
    parser.add_argument("--eval-threads", type=int, default=max(os.cpu_count() or 1, 1), help="evaluation threads")
    parser.add_argument("--seed", type=int, default=0, help="run seed (default 0)")
    args = parser.parse_args()

    targets = [(name, path) for name, path in (("wn18", args.wn18), ("fb15k", args.fb15k)) if path]
    if not targets:
        parser.error("no dataset given; pass --wn18/--fb15k or set KGC_WN18_DIR/KGC_FB15K_DIR")

    all_ok = True
    for name, dataset in targets:
        all_ok = run_one(name, dataset, args.workdir, args.epochs, args.eval_threads, args.seed) and all_ok
    return 0 if all_ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
