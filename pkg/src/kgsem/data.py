"""Triple datasets: loading, vocabularies, filtered-evaluation index,
negative sampling.

File format: UTF-8, tab-separated, three columns per line, lines starting
with ``#`` ignored. Column order is configurable per dataset (default
head, relation, tail). Duplicate lines are dropped with a warning so each
split is a true set of facts.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .errors import ParseError, SamplingError

log = logging.getLogger(__name__)

SPLITS = ("train", "valid", "test")


class Triple(NamedTuple):
    h: int
    r: int
    t: int


class Vocab:
    """Dense integer ids for entity and relation names.

    Ids are assigned in first-appearance order, so loading the same files
    in the same order always yields the same mapping.
    """

    def __init__(self) -> None:
        self.entity_names: list[str] = []
        self.relation_names: list[str] = []
        self._ent_ids: dict[str, int] = {}
        self._rel_ids: dict[str, int] = {}

    @property
    def n_entities(self) -> int:
        return len(self.entity_names)

    @property
    def n_relations(self) -> int:
        return len(self.relation_names)

    def entity_id(self, name: str) -> int:
        idx = self._ent_ids.get(name)
        if idx is None:
            idx = len(self.entity_names)
            self._ent_ids[name] = idx
            self.entity_names.append(name)
        return idx

    def relation_id(self, name: str) -> int:
        idx = self._rel_ids.get(name)
        if idx is None:
            idx = len(self.relation_names)
            self._rel_ids[name] = idx
            self.relation_names.append(name)
        return idx

    def lookup_entity(self, name: str) -> int | None:
        return self._ent_ids.get(name)

    def lookup_relation(self, name: str) -> int | None:
        return self._rel_ids.get(name)


@dataclass
class TripleSet:
    triples: list[Triple]
    split: str

    def __post_init__(self) -> None:
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {self.split!r}")

    def __len__(self) -> int:
        return len(self.triples)

    def __iter__(self):
        return iter(self.triples)


def load_triples(
    path,
    vocab: Vocab,
    split: str = "train",
    column_order: str = "hrt",
) -> tuple[TripleSet, list[str]]:
    """Read a triples file, extending ``vocab`` with unseen names.

    Returns the deduplicated TripleSet and the list of names (entities then
    relations) newly added to the vocabulary by this file.
    """
    if sorted(column_order) != ["h", "r", "t"]:
        raise ValueError(f"column_order must be a permutation of 'hrt', got {column_order!r}")
    pos = {c: i for i, c in enumerate(column_order)}

    before_e, before_r = vocab.n_entities, vocab.n_relations
    seen: set[Triple] = set()
    triples: list[Triple] = []
    n_dup = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise ParseError(f"{path}:{lineno}: expected 3 tab-separated columns, got {len(cols)}")
            h = vocab.entity_id(cols[pos["h"]])
            r = vocab.relation_id(cols[pos["r"]])
            t = vocab.entity_id(cols[pos["t"]])
            tri = Triple(h, r, t)
            if tri in seen:
                n_dup += 1
                continue
            seen.add(tri)
            triples.append(tri)
    if n_dup:
        log.warning("%s: dropped %d duplicate triple(s)", path, n_dup)
    added = vocab.entity_names[before_e:] + vocab.relation_names[before_r:]
    return TripleSet(triples, split), added


def save_triples(path, triples: TripleSet, vocab: Vocab) -> None:
    """Write triples in canonical head/relation/tail column order."""
    with open(path, "w", encoding="utf-8") as fh:
        for h, r, t in triples:
            fh.write(f"{vocab.entity_names[h]}\t{vocab.relation_names[r]}\t{vocab.entity_names[t]}\n")


@dataclass
class FilterIndex:
    """Membership over all known triples plus per-relation tph/hpt stats.

    tph(r) = train triples with r / distinct heads under r; hpt symmetric.
    Both are computed from the train split only.
    """

    members: frozenset[Triple]
    tph: dict[int, float]
    hpt: dict[int, float]
    n_entities: int

    def __contains__(self, triple: Triple) -> bool:
        return triple in self.members


def build_filter_index(
    train: TripleSet, valid: TripleSet | None, test: TripleSet | None, n_entities: int
) -> FilterIndex:
    members = frozenset(t for split in (train, valid, test) if split is not None for t in split)
    per_rel_heads: dict[int, set[int]] = {}
    per_rel_tails: dict[int, set[int]] = {}
    per_rel_count: dict[int, int] = {}
    for h, r, t in train:
        per_rel_heads.setdefault(r, set()).add(h)
        per_rel_tails.setdefault(r, set()).add(t)
        per_rel_count[r] = per_rel_count.get(r, 0) + 1
    tph = {r: per_rel_count[r] / len(per_rel_heads[r]) for r in per_rel_count}
    hpt = {r: per_rel_count[r] / len(per_rel_tails[r]) for r in per_rel_count}
    return FilterIndex(members, tph, hpt, n_entities)


MAX_RESAMPLES = 100


def sample_negative(
    pos: Triple,
    mode: str,
    index: FilterIndex,
    rng: np.random.Generator,
    strict: bool = False,
) -> Triple:
    """Corrupt exactly one entity slot of ``pos``.

    unif flips a fair coin for the slot; bern replaces the head with
    probability tph/(tph+hpt) (0.5 for relations unseen in train). The
    replacement entity is drawn uniformly among the others, redrawn while
    the corruption is a known true triple, up to MAX_RESAMPLES; past the
    budget the last candidate is returned with a warning (raised as
    SamplingError when ``strict``).
    """
    n = index.n_entities
    if n < 2:
        raise ValueError("negative sampling needs at least 2 entities")
    if mode == "unif":
        p_head = 0.5
    elif mode == "bern":
        tph = index.tph.get(pos.r)
        hpt = index.hpt.get(pos.r)
        p_head = 0.5 if tph is None else tph / (tph + hpt)
    else:
        raise ValueError(f"sampling mode must be 'unif' or 'bern', got {mode!r}")

    corrupt_head = rng.random() < p_head
    original = pos.h if corrupt_head else pos.t
    candidate = pos
    for _ in range(MAX_RESAMPLES):
        e = int(rng.integers(n - 1))
        if e >= original:
            e += 1
        candidate = Triple(e, pos.r, pos.t) if corrupt_head else Triple(pos.h, pos.r, e)
        if candidate not in index:
            return candidate
    if strict:
        raise SamplingError(f"resample budget exhausted for {pos}")
    log.warning("resample budget exhausted for %s; returning filtered candidate", (pos,))
    return candidate


@dataclass
class LabelMap:
    """Surface text per entity/relation id; falls back to the raw name."""

    entity_text: dict[int, str] = field(default_factory=dict)
    relation_text: dict[int, str] = field(default_factory=dict)

    def entity(self, vocab: Vocab, eid: int) -> str:
        return self.entity_text.get(eid, vocab.entity_names[eid])

    def relation(self, vocab: Vocab, rid: int) -> str:
        return self.relation_text.get(rid, vocab.relation_names[rid])


def load_labels(path, vocab: Vocab) -> LabelMap:
    """Read a two-column ``name<TAB>surface text`` file.

    A name may label an entity, a relation, or (on collision) both; names
    matching neither are skipped with a warning.
    """
    labels = LabelMap()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                raise ParseError(f"{path}:{lineno}: expected 2 tab-separated columns, got {len(cols)}")
            name, text = cols
            eid = vocab.lookup_entity(name)
            rid = vocab.lookup_relation(name)
            if eid is not None:
                labels.entity_text[eid] = text
            if rid is not None:
                labels.relation_text[rid] = text
            if eid is None and rid is None:
                log.warning("%s:%d: label for unknown name %r skipped", path, lineno, name)
    return labels


def load_dataset(
    dataset_dir, column_order: str = "hrt"
) -> tuple[TripleSet, TripleSet, TripleSet, Vocab]:
    """Load train/valid/test splits from ``<dir>/{train,valid,test}.txt``."""
    vocab = Vocab()
    sets = []
    for split in SPLITS:
        path = os.path.join(dataset_dir, f"{split}.txt")
        tset, _ = load_triples(path, vocab, split=split, column_order=column_order)
        sets.append(tset)
    return sets[0], sets[1], sets[2], vocab
