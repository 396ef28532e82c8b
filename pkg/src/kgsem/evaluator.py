"""Link-prediction evaluation.

For each test triple, the true head (then tail) competes against every
other entity substituted into its slot. Lower score is better; the rank
is 1 plus the number of strictly better candidates, so ties resolve
optimistically. The filtered setting drops candidates that form a known
true triple, except the test triple itself. Reported metrics are the
mean rank and Hits@10 over all 2 * |test| slot rankings, raw and
filtered.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .data import FilterIndex, Triple, TripleSet
from .ioutil import atomic_write
from .scoring import ModelParams

SLOTS = ("head", "tail")


@dataclass(frozen=True)
class TableScorer:
    """Vectorized scorer over the whole entity table.

    Uses the same residual arithmetic as the per-triple score functions:
    plain translation for the transe model, hyperplane projection for the
    others.
    """

    params: ModelParams
    model: str

    def scores_for_slot(self, triple: Triple, slot: str) -> np.ndarray:
        p = self.params
        E = p.entity_emb
        d_r = p.rel_trans[triple.r]
        if slot == "head":
            fixed = E[triple.t]
            diff = E - fixed
        elif slot == "tail":
            fixed = E[triple.h]
            diff = fixed - E
        else:
            raise ValueError(f"slot must be one of {SLOTS}, got {slot!r}")
        if self.model != "transe":
            w = p.rel_normal[triple.r]
            diff = diff - np.outer(diff @ w, w)
        U = diff + d_r
        if p.score_norm == 2:
            return (U * U).sum(axis=1)
        return np.abs(U).sum(axis=1)

    def __call__(self, h: int, r: int, t: int) -> float:
        from .scoring import score_triple

        return score_triple(self.model, h, r, t, self.params)


def _slot_scores(triple: Triple, slot: str, scorer, n_entities: int) -> np.ndarray:
    if hasattr(scorer, "scores_for_slot"):
        return np.asarray(scorer.scores_for_slot(triple, slot), dtype=np.float64)
    if slot == "head":
        return np.array([scorer(e, triple.r, triple.t) for e in range(n_entities)])
    if slot == "tail":
        return np.array([scorer(triple.h, triple.r, e) for e in range(n_entities)])
    raise ValueError(f"slot must be one of {SLOTS}, got {slot!r}")


def _rank(scores: np.ndarray, true_id: int, excluded: np.ndarray | None) -> int:
    true_score = scores[true_id]
    better = scores < true_score
    if excluded is not None:
        better &= ~excluded
    return 1 + int(np.count_nonzero(better))


def rank_entity_slot(
    triple: Triple, slot: str, scorer, filter_index: FilterIndex, filtered: bool
) -> int:
    """Rank of the true entity for one slot of one triple."""
    n = filter_index.n_entities
    scores = _slot_scores(triple, slot, scorer, n)
    excluded = None
    if filtered:
        excluded = np.zeros(n, dtype=bool)
        true_id = triple.h if slot == "head" else triple.t
        for e in range(n):
            if e == true_id:
                continue
            cand = Triple(e, triple.r, triple.t) if slot == "head" else Triple(triple.h, triple.r, e)
            if cand in filter_index:
                excluded[e] = True
    true_id = triple.h if slot == "head" else triple.t
    return _rank(scores, true_id, excluded)


@dataclass(frozen=True)
class EvalReport:
    mr_raw: float
    mr_filt: float
    hits10_raw: float
    hits10_filt: float
    per_triple_ranks: list[tuple[int, int, int, int]]
    n_test: int

    def save_json(self, path) -> None:
        payload = {
            "mr_raw": self.mr_raw,
            "mr_filt": self.mr_filt,
            "hits10_raw": self.hits10_raw,
            "hits10_filt": self.hits10_filt,
            "n_test": self.n_test,
            "per_triple": [list(r) for r in self.per_triple_ranks],
        }
        atomic_write(path, json.dumps(payload, indent=2) + "\n")


def _invert_members(filter_index: FilterIndex) -> tuple[dict, dict]:
    heads_by_rt: dict[tuple[int, int], list[int]] = {}
    tails_by_hr: dict[tuple[int, int], list[int]] = {}
    for h, r, t in filter_index.members:
        heads_by_rt.setdefault((r, t), []).append(h)
        tails_by_hr.setdefault((h, r), []).append(t)
    return heads_by_rt, tails_by_hr


def evaluate(test: TripleSet, scorer, filter_index: FilterIndex, threads: int = 1) -> EvalReport:
    """Rank both slots of every test triple under both settings.

    MR is the mean over all 2*|test| slot ranks; Hits@10 the percentage
    of slot ranks <= 10. Aggregation is sum-then-divide, so the result
    does not depend on test order or sharding.
    """
    if len(test) == 0:
        raise ValueError("test set must not be empty")
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    n = filter_index.n_entities
    heads_by_rt, tails_by_hr = _invert_members(filter_index)

    def rank_one(triple: Triple) -> tuple[int, int, int, int]:
        scores_h = _slot_scores(triple, "head", scorer, n)
        excluded_h = np.zeros(n, dtype=bool)
        excluded_h[heads_by_rt.get((triple.r, triple.t), ())] = True
        excluded_h[triple.h] = False
        scores_t = _slot_scores(triple, "tail", scorer, n)
        excluded_t = np.zeros(n, dtype=bool)
        excluded_t[tails_by_hr.get((triple.h, triple.r), ())] = True
        excluded_t[triple.t] = False
        return (
            _rank(scores_h, triple.h, None),
            _rank(scores_h, triple.h, excluded_h),
            _rank(scores_t, triple.t, None),
            _rank(scores_t, triple.t, excluded_t),
        )

    if threads == 1:
        per_triple = [rank_one(tr) for tr in test]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_triple = list(pool.map(rank_one, test))

    raw = [r for hr, hf, tr, tf in per_triple for r in (hr, tr)]
    filt = [r for hr, hf, tr, tf in per_triple for r in (hf, tf)]
    count = len(raw)
    return EvalReport(
        mr_raw=sum(raw) / count,
        mr_filt=sum(filt) / count,
        hits10_raw=100.0 * sum(1 for r in raw if r <= 10) / count,
        hits10_filt=100.0 * sum(1 for r in filt if r <= 10) / count,
        per_triple_ranks=per_triple,
        n_test=len(test),
    )
