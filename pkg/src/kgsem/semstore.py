"""Frozen semantic text vectors for entities and relations.

Vectors come either from a SEMVEC interchange file written by an external
encoder export, or from a deterministic hash-based fallback so the whole
pipeline runs without any encoder on hand.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass

import numpy as np

from .data import LabelMap, Vocab
from .errors import CoverageError, FormatError
from .ioutil import atomic_write, fmt_floats
from .whitening import WhiteningTransform, apply_whitening, fit_whitening
from .wordpiece import SubwordVocab, tokenize

log = logging.getLogger(__name__)

SEMVEC_MAGIC = "semvec v1"
_KINDS = ("entity", "relation")


@dataclass(frozen=True)
class SemanticStore:
    """Immutable id-indexed vector tables, one row per entity/relation."""

    entity_vecs: np.ndarray
    relation_vecs: np.ndarray
    dim: int
    whitened: bool = False

    def entity(self, eid: int) -> np.ndarray:
        return self.entity_vecs[eid]

    def relation(self, rid: int) -> np.ndarray:
        return self.relation_vecs[rid]


def load_semvec(path, vocab: Vocab) -> SemanticStore:
    """Read a SEMVEC file and check it covers the whole vocabulary.

    Rows naming unknown entities/relations are skipped with a warning;
    a row of the wrong width or with non-finite values is a format error;
    any vocab name left without a vector is a coverage error.
    """
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        parts = header.split(" ")
        if len(parts) != 4 or " ".join(parts[:2]) != SEMVEC_MAGIC:
            raise FormatError(f"{path}:1: bad header {header!r}")
        try:
            count, dim = int(parts[2]), int(parts[3])
        except ValueError:
            raise FormatError(f"{path}:1: bad header {header!r}") from None
        if dim < 1:
            raise FormatError(f"{path}:1: dimension must be positive, got {dim}")

        ent = np.zeros((len(vocab.entity_names), dim))
        rel = np.zeros((len(vocab.relation_names), dim))
        seen_ent = np.zeros(len(vocab.entity_names), dtype=bool)
        seen_rel = np.zeros(len(vocab.relation_names), dtype=bool)
        rows = 0
        for lineno, raw in enumerate(fh, start=2):
            line = raw.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise FormatError(f"{path}:{lineno}: expected 3 tab-separated fields, got {len(cols)}")
            kind, name, payload = cols
            if kind not in _KINDS:
                raise FormatError(f"{path}:{lineno}: unknown kind {kind!r}")
            rows += 1
            values = payload.split(" ")
            if len(values) != dim:
                raise FormatError(f"{path}:{lineno}: expected {dim} floats, got {len(values)}")
            try:
                vec = np.array([float(v) for v in values], dtype=np.float64)
            except ValueError as e:
                raise FormatError(f"{path}:{lineno}: {e}") from None
            if not np.all(np.isfinite(vec)):
                raise FormatError(f"{path}:{lineno}: non-finite value in vector for {name!r}")
            if kind == "entity":
                eid = vocab.lookup_entity(name)
                if eid is None:
                    log.warning("%s:%d: vector for unknown entity %r skipped", path, lineno, name)
                    continue
                if seen_ent[eid]:
                    log.warning("%s:%d: duplicate vector for entity %r, keeping the last", path, lineno, name)
                ent[eid] = vec
                seen_ent[eid] = True
            else:
                rid = vocab.lookup_relation(name)
                if rid is None:
                    log.warning("%s:%d: vector for unknown relation %r skipped", path, lineno, name)
                    continue
                if seen_rel[rid]:
                    log.warning("%s:%d: duplicate vector for relation %r, keeping the last", path, lineno, name)
                rel[rid] = vec
                seen_rel[rid] = True

    if rows != count:
        raise FormatError(f"{path}: header declares {count} rows, file has {rows}")
    missing = [vocab.entity_names[i] for i in np.flatnonzero(~seen_ent)]
    missing += [vocab.relation_names[i] for i in np.flatnonzero(~seen_rel)]
    if missing:
        raise CoverageError(f"{path}: no vector for: {', '.join(missing)}")
    return SemanticStore(entity_vecs=ent, relation_vecs=rel, dim=dim)


def save_semvec(path, store: SemanticStore, vocab: Vocab) -> None:
    """Write the store in SEMVEC format, entities then relations, id order."""
    n = store.entity_vecs.shape[0] + store.relation_vecs.shape[0]
    lines = [f"{SEMVEC_MAGIC} {n} {store.dim}"]
    for eid, name in enumerate(vocab.entity_names):
        lines.append(f"entity\t{name}\t{fmt_floats(store.entity_vecs[eid])}")
    for rid, name in enumerate(vocab.relation_names):
        lines.append(f"relation\t{name}\t{fmt_floats(store.relation_vecs[rid])}")
    atomic_write(path, "\n".join(lines) + "\n")


def _token_vector(token: str, dim: int, seed: int) -> np.ndarray:
    """Unit-norm vector from a seeded hash of the token string.

    blake2b fixes the 64-bit stream key and a counter-based generator
    turns it into Gaussian coordinates, so the result depends only on
    (seed, token, dim)."""
    digest = hashlib.blake2b(f"{seed}\x00{token}".encode("utf-8"), digest_size=8).digest()
    key = int.from_bytes(digest, "little")
    rng = np.random.Generator(np.random.Philox(key=key))
    v = rng.standard_normal(dim)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        v[0] = 1.0
        norm = 1.0
    return v / norm


def fallback_embed(
    labels: LabelMap,
    subwords: SubwordVocab,
    vocab: Vocab,
    dim: int = 768,
    seed: int = 0,
) -> SemanticStore:
    """Deterministic text vectors without an encoder.

    Each entity/relation is tokenized (label text, falling back to the raw
    name) and embedded as the mean of its tokens' hash vectors, repeats
    included. An empty tokenization yields a zero vector with a warning.
    """
    if dim < 1:
        raise ValueError(f"dimension must be positive, got {dim}")

    cache: dict[str, np.ndarray] = {}

    def text_vec(text: str, what: str) -> np.ndarray:
        toks = tokenize(text, subwords)
        if not toks:
            log.warning("%s %r tokenizes to nothing, using a zero vector", what, text)
            return np.zeros(dim)
        acc = np.zeros(dim)
        for tok in toks:
            if tok not in cache:
                cache[tok] = _token_vector(tok, dim, seed)
            acc += cache[tok]
        return acc / len(toks)

    ent = np.zeros((len(vocab.entity_names), dim))
    for eid in range(len(vocab.entity_names)):
        ent[eid] = text_vec(labels.entity(vocab, eid), "entity")
    rel = np.zeros((len(vocab.relation_names), dim))
    for rid in range(len(vocab.relation_names)):
        rel[rid] = text_vec(labels.relation(vocab, rid), "relation")
    return SemanticStore(entity_vecs=ent, relation_vecs=rel, dim=dim)


def whiten_store(store: SemanticStore, k: int, eps: float = 1e-12) -> tuple[SemanticStore, WhiteningTransform]:
    """Fit whitening on all vectors (entities then relations stacked) and
    return the reduced store plus the fitted transform."""
    stacked = np.vstack([store.entity_vecs, store.relation_vecs])
    transform = fit_whitening(stacked, k, eps=eps)
    ent = apply_whitening(store.entity_vecs, transform)
    rel = apply_whitening(store.relation_vecs, transform)
    return SemanticStore(entity_vecs=ent, relation_vecs=rel, dim=k, whitened=True), transform
