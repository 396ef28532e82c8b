"""Shared fixtures: deterministic toy knowledge graphs and dataset
directories."""

from __future__ import annotations

import os

import numpy as np
import pytest

from kgsem import Triple, TripleSet, Vocab, init_params
from kgsem.rng import substream


def make_kg(n_entities: int, n_relations: int, n_triples: int, seed: int):
    """Random connected-ish triple soup with deterministic names/ids."""
    rng = np.random.default_rng(seed)
    vocab = Vocab()
    for i in range(n_entities):
        vocab.entity_id(f"node_{i:04d}")
    for j in range(n_relations):
        vocab.relation_id(f"rel_{j:02d}")
    seen = set()
    triples = []
    while len(triples) < n_triples:
        h = int(rng.integers(n_entities))
        t = int(rng.integers(n_entities))
        if h == t:
            continue
        r = int(rng.integers(n_relations))
        tr = Triple(h, r, t)
        if tr in seen:
            continue
        seen.add(tr)
        triples.append(tr)
    return triples, vocab


def split_kg(triples, fractions=(0.7, 0.15, 0.15)):
    n = len(triples)
    n_train = int(n * fractions[0])
    n_valid = int(n * fractions[1])
    return (
        TripleSet(triples[:n_train], "train"),
        TripleSet(triples[n_train : n_train + n_valid], "valid"),
        TripleSet(triples[n_train + n_valid :], "test"),
    )


def write_dataset(dirpath, vocab: Vocab, train: TripleSet, valid: TripleSet, test: TripleSet):
    os.makedirs(dirpath, exist_ok=True)
    for tset in (train, valid, test):
        with open(os.path.join(dirpath, f"{tset.split}.txt"), "w", encoding="utf-8") as fh:
            for h, r, t in tset:
                fh.write(f"{vocab.entity_names[h]}\t{vocab.relation_names[r]}\t{vocab.entity_names[t]}\n")
    return dirpath


@pytest.fixture
def toy_kg():
    """40 triples over 12 entities and 2 relations, pre-split."""
    triples, vocab = make_kg(12, 2, 40, seed=0)
    train, valid, test = split_kg(triples)
    return train, valid, test, vocab


@pytest.fixture
def toy_dataset_dir(tmp_path, toy_kg):
    train, valid, test, vocab = toy_kg
    return str(write_dataset(tmp_path / "data", vocab, train, valid, test))


def make_params(n_entities=12, n_relations=2, dim=8, score_norm=2, seed=0):
    return init_params(n_entities, n_relations, dim, score_norm, substream(seed, "init"))
