"""Command-line pipeline: prepare, tokenize, embed, whiten, train, eval.

All randomness flows from a single --seed, fanned out to named
sub-streams. Every command writes a run manifest next to its outputs so
a result can always be traced back to its exact configuration. The
KGC_LOG environment variable ({error, warn, info, debug}) sets log
verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from datetime import datetime, timezone

from . import __version__
from .data import LabelMap, load_dataset, load_labels
from .errors import KgsemError
from .evaluator import TableScorer, evaluate
from .ioutil import atomic_write
from .rng import substream
from .scoring import MODEL_NAMES, init_params, load_checkpoint, save_checkpoint
from .semstore import fallback_embed, load_semvec, save_semvec, whiten_store
from .trainer import SAMPLING_MODES, TrainConfig, train
from .whitening import save_transform
from .wordpiece import load_vocab, save_vocab, train_vocab

log = logging.getLogger(__name__)

_LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _write_manifest(path, command: str, args: argparse.Namespace, started: str) -> None:
    resolved = {k: v for k, v in vars(args).items() if k != "func" and k != "command"}
    payload = {
        "command": command,
        "version": __version__,
        "seed": resolved.get("seed"),
        "config": {k: (os.fspath(v) if hasattr(v, "__fspath__") else v) for k, v in sorted(resolved.items())},
        "started": started,
        "finished": _now(),
    }
    atomic_write(path, json.dumps(payload, indent=2) + "\n")


def _label_corpus(vocab, labels: LabelMap) -> list[str]:
    corpus = [labels.entity(vocab, i) for i in range(vocab.n_entities)]
    corpus += [labels.relation(vocab, j) for j in range(vocab.n_relations)]
    return corpus


def _load_labelmap(args, vocab) -> LabelMap:
    if getattr(args, "labels", None):
        return load_labels(args.labels, vocab)
    return LabelMap()


def _subword_vocab(args, vocab, labels: LabelMap):
    if getattr(args, "subwords", None):
        return load_vocab(args.subwords)
    log.info("no subword vocab given, training one in process")
    return train_vocab(_label_corpus(vocab, labels), target_size=args.target_size)


def cmd_prepare(args) -> int:
    started = _now()
    train_set, valid_set, test_set, vocab = load_dataset(args.dataset, args.column_order)
    from .data import build_filter_index

    index = build_filter_index(train_set, valid_set, test_set, vocab.n_entities)
    os.makedirs(args.out, exist_ok=True)
    atomic_write(os.path.join(args.out, "entities.txt"), "".join(n + "\n" for n in vocab.entity_names))
    atomic_write(os.path.join(args.out, "relations.txt"), "".join(n + "\n" for n in vocab.relation_names))
    stats = {
        "n_entities": vocab.n_entities,
        "n_relations": vocab.n_relations,
        "n_train": len(train_set),
        "n_valid": len(valid_set),
        "n_test": len(test_set),
        "tph": {vocab.relation_names[r]: v for r, v in sorted(index.tph.items())},
        "hpt": {vocab.relation_names[r]: v for r, v in sorted(index.hpt.items())},
    }
    atomic_write(os.path.join(args.out, "stats.json"), json.dumps(stats, indent=2) + "\n")
    _write_manifest(os.path.join(args.out, "manifest.json"), "prepare", args, started)
    print(
        f"prepared {vocab.n_entities} entities, {vocab.n_relations} relations, "
        f"{len(train_set)}/{len(valid_set)}/{len(test_set)} train/valid/test triples"
    )
    return 0


def cmd_tokenize(args) -> int:
    started = _now()
    _, _, _, vocab = load_dataset(args.dataset, args.column_order)
    labels = _load_labelmap(args, vocab)
    sub = train_vocab(_label_corpus(vocab, labels), target_size=args.target_size, min_delta=args.min_delta)
    save_vocab(args.out, sub)
    _write_manifest(args.out + ".manifest.json", "tokenize", args, started)
    print(f"trained subword vocab: {len(sub.tokens)} tokens, {len(sub.merge_log)} merges -> {args.out}")
    return 0


def cmd_embed(args) -> int:
    started = _now()
    _, _, _, vocab = load_dataset(args.dataset, args.column_order)
    if args.semvec:
        store = load_semvec(args.semvec, vocab)
        print(f"validated {args.semvec}: dim {store.dim}, covers the vocabulary")
    else:
        labels = _load_labelmap(args, vocab)
        sub = _subword_vocab(args, vocab, labels)
        store = fallback_embed(labels, sub, vocab, dim=args.dim, seed=args.seed)
    save_semvec(args.out, store, vocab)
    _write_manifest(args.out + ".manifest.json", "embed", args, started)
    print(f"wrote {store.entity_vecs.shape[0] + store.relation_vecs.shape[0]} vectors at dim {store.dim} -> {args.out}")
    return 0


def cmd_whiten(args) -> int:
    started = _now()
    _, _, _, vocab = load_dataset(args.dataset, args.column_order)
    store = load_semvec(args.semvec, vocab)
    reduced, transform = whiten_store(store, args.k, eps=args.eps)
    save_semvec(args.out, reduced, vocab)
    transform_out = args.transform_out or args.out + ".transform"
    save_transform(transform_out, transform)
    _write_manifest(args.out + ".manifest.json", "whiten", args, started)
    print(f"whitened {store.dim} -> {reduced.dim} dims; vectors -> {args.out}, transform -> {transform_out}")
    return 0


def cmd_train(args) -> int:
    started = _now()
    if args.threads != 1:
        raise ValueError("parallel training is not implemented; use --threads 1")
    train_set, valid_set, _, vocab = load_dataset(args.dataset, args.column_order)
    cfg = TrainConfig(
        lr=args.lr,
        margin=args.margin,
        C=args.C,
        epsilon=args.epsilon,
        tau=args.tau,
        lambda_sem=args.lambda_sem,
        score_norm=args.norm,
        dim=args.dim,
        epochs=args.epochs,
        batch_size=args.batch_size,
        sampling=args.sampling,
        model=args.model,
        seed=args.seed,
        aug_sigma=args.aug_sigma,
    )
    sem = None
    if cfg.model == "aesi":
        if args.semvec:
            sem = load_semvec(args.semvec, vocab)
        else:
            labels = _load_labelmap(args, vocab)
            sub = _subword_vocab(args, vocab, labels)
            sem = fallback_embed(labels, sub, vocab, dim=args.sem_dim, seed=cfg.seed)
        if sem.dim != cfg.dim:
            log.info("whitening semantic vectors %d -> %d dims", sem.dim, cfg.dim)
            sem, _ = whiten_store(sem, cfg.dim)
    params = init_params(vocab.n_entities, vocab.n_relations, cfg.dim, cfg.score_norm, substream(cfg.seed, "init"))
    params, history = train(train_set, valid_set, params, sem, cfg)
    os.makedirs(args.out, exist_ok=True)
    save_checkpoint(args.out, params, cfg.model)
    history.save_csv(os.path.join(args.out, "loss.csv"))
    _write_manifest(os.path.join(args.out, "manifest.json"), "train", args, started)
    last = history.epochs[-1] if len(history) else (float("nan"), float("nan"))
    print(
        f"trained {cfg.model} for {cfg.epochs} epochs; final train loss {last[0]:.6f}, "
        f"valid loss {last[1]:.6f}; checkpoint -> {args.out}"
    )
    return 0


def cmd_eval(args) -> int:
    started = _now()
    train_set, valid_set, test_set, vocab = load_dataset(args.dataset, args.column_order)
    params, model = load_checkpoint(args.checkpoint)
    if params.n_entities != vocab.n_entities or params.n_relations != vocab.n_relations:
        raise ValueError(
            f"checkpoint shape ({params.n_entities} entities, {params.n_relations} relations) "
            f"does not match dataset ({vocab.n_entities}, {vocab.n_relations})"
        )
    from .data import build_filter_index

    index = build_filter_index(train_set, valid_set, test_set, vocab.n_entities)
    report = evaluate(test_set, TableScorer(params, model), index, threads=args.threads)
    if args.out:
        report.save_json(args.out)
        _write_manifest(args.out + ".manifest.json", "eval", args, started)
    else:
        print(json.dumps({
            "mr_raw": report.mr_raw,
            "mr_filt": report.mr_filt,
            "hits10_raw": report.hits10_raw,
            "hits10_filt": report.hits10_filt,
            "n_test": report.n_test,
            "per_triple": [list(r) for r in report.per_triple_ranks],
        }))
    print(
        f"MR raw {report.mr_raw:.2f} filt {report.mr_filt:.2f}; "
        f"Hits@10 raw {report.hits10_raw:.2f} filt {report.hits10_filt:.2f} "
        f"over {report.n_test} test triples",
        file=sys.stderr,
    )
    return 0


def _dataset_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset", required=True, help="dataset directory with train.txt/valid.txt/test.txt")
    p.add_argument("--column-order", default="hrt", help="column permutation of the triple files (default hrt)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kgsem", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"kgsem {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="load and validate a dataset, write vocab and filter stats")
    _dataset_flags(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0, help="run seed recorded in the manifest (default 0)")
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("tokenize", help="train a subword vocabulary from surface labels")
    _dataset_flags(p)
    p.add_argument("--labels", default=None, help="name<TAB>text label file (default: raw names)")
    p.add_argument("--target-size", type=int, default=2000, help="vocabulary size to stop at (default 2000)")
    p.add_argument("--min-delta", type=float, default=0.0, help="minimum likelihood gain per merge (default 0)")
    p.add_argument("--out", required=True, help="output vocab file")
    p.add_argument("--seed", type=int, default=0, help="run seed recorded in the manifest (default 0)")
    p.set_defaults(func=cmd_tokenize)

    p = sub.add_parser("embed", help="build semantic vectors (fallback embedder) or validate an external file")
    _dataset_flags(p)
    p.add_argument("--labels", default=None, help="name<TAB>text label file (default: raw names)")
    p.add_argument("--semvec", default=None, help="external SEMVEC file to validate and re-emit")
    p.add_argument("--subwords", default=None, help="subword vocab file (default: train in process)")
    p.add_argument("--target-size", type=int, default=2000, help="subword vocab size when training in process")
    p.add_argument("--dim", type=int, default=768, help="fallback embedding dimension (default 768)")
    p.add_argument("--seed", type=int, default=0, help="seed for the fallback embedder (default 0)")
    p.add_argument("--out", required=True, help="output SEMVEC file")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("whiten", help="fit and apply the whitening transform to a SEMVEC file")
    _dataset_flags(p)
    p.add_argument("--semvec", required=True, help="input SEMVEC file")
    p.add_argument("--k", type=int, required=True, help="target dimension")
    p.add_argument("--eps", type=float, default=1e-12, help="variance floor (default 1e-12)")
    p.add_argument("--out", required=True, help="output SEMVEC file")
    p.add_argument("--transform-out", default=None, help="transform file (default <out>.transform)")
    p.add_argument("--seed", type=int, default=0, help="run seed recorded in the manifest (default 0)")
    p.set_defaults(func=cmd_whiten)

    p = sub.add_parser("train", help="train a model and write its checkpoint, including loss history and manifest")
    _dataset_flags(p)
    p.add_argument("--model", choices=MODEL_NAMES, default="aesi", help="model variant (default aesi)")
    p.add_argument("--lr", type=float, default=0.001, help="learning rate (default 0.001)")
    p.add_argument("--margin", type=float, default=4.0, help="ranking margin (default 4.0)")
    p.add_argument("--norm", type=int, choices=(1, 2), default=2, help="score norm p (default 2)")
    p.add_argument("--C", type=float, default=0.001, help="soft-constraint weight (default 0.001)")
    p.add_argument("--epsilon", type=float, default=0.001, help="orthogonality tolerance (default 0.001)")
    p.add_argument("--tau", type=float, default=0.5, help="contrastive temperature (default 0.5)")
    p.add_argument("--lambda-sem", type=float, default=1.0, help="contrastive weight inside the C braces (default 1.0)")
    p.add_argument("--dim", type=int, default=128, help="embedding dimension (default 128)")
    p.add_argument("--epochs", type=int, default=50, help="training epochs (default 50)")
    p.add_argument("--batch-size", type=int, default=128, help="mini-batch size (default 128)")
    p.add_argument("--sampling", choices=SAMPLING_MODES, default="unif", help="negative sampling mode (default unif)")
    p.add_argument("--aug-sigma", type=float, default=0.05, help="augmentation noise scale (default 0.05)")
    p.add_argument("--seed", type=int, default=0, help="run seed, fanned out to all sub-streams (default 0)")
    p.add_argument("--semvec", default=None, help="semantic vectors file (default: fallback embedder)")
    p.add_argument("--labels", default=None, help="label file for the fallback embedder")
    p.add_argument("--subwords", default=None, help="subword vocab file for the fallback embedder")
    p.add_argument("--target-size", type=int, default=2000, help="subword vocab size when training in process")
    p.add_argument("--sem-dim", type=int, default=768, help="fallback embedding dimension before whitening (default 768)")
    p.add_argument("--threads", type=int, default=1, help="worker threads; only the deterministic value 1 is supported (default 1)")
    p.add_argument("--out", required=True, help="checkpoint output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="rank test triples and write the metrics report")
    _dataset_flags(p)
    p.add_argument("--checkpoint", required=True, help="checkpoint directory from train")
    p.add_argument("--threads", type=int, default=1, help="evaluation threads; 1 is fully deterministic (default 1)")
    p.add_argument("--out", default=None, help="report JSON path (default: print to stdout)")
    p.add_argument("--seed", type=int, default=0, help="run seed recorded in the manifest (default 0)")
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv=None) -> int:
    level = _LOG_LEVELS.get(os.environ.get("KGC_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except KgsemError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
