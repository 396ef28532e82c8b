"""Command line for the embedding exporter."""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import __version__
from .export import ExportError, ExportSpec, export_embeddings

_LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bertexport", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"bertexport {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("export", help="encode every label and write one SEMVEC row per name")
    p.add_argument("--labels", required=True, help="kind<TAB>name<TAB>text file, kinds entity/relation")
    p.add_argument("--model", required=True, help="encoder identifier or local checkpoint directory")
    p.add_argument("--out", required=True, help="output SEMVEC file")
    p.add_argument("--max-len", type=int, default=64, help="token budget per label (default 64)")
    p.add_argument("--batch-size", type=int, default=32, help="labels encoded per forward pass (default 32)")
    return parser


def main(argv=None) -> int:
    level = _LOG_LEVELS.get(os.environ.get("KGC_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        spec = ExportSpec(
            labels=args.labels,
            model=args.model,
            out=args.out,
            max_len=args.max_len,
            batch_size=args.batch_size,
        )
        dim = export_embeddings(spec)
    except (ExportError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(f"exported embeddings at dim {dim} -> {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
