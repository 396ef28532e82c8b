"""Independent reference implementations used to check the package.

Everything here recomputes results from first principles (explicit loops,
full re-segmentation, brute-force sums) without reusing package
internals, so agreement is meaningful.
"""

from __future__ import annotations

import math
from collections import Counter


def wp_split_words(text: str) -> list[str]:
    out = []
    word = []
    for ch in text:
        if ch.isspace() or ch in "_/.":
            if word:
                out.append("".join(word))
                word = []
        else:
            word.append(ch)
    if word:
        out.append("".join(word))
    return out


def wp_initial_segs(corpus: list[str]) -> dict[str, list[str]]:
    segs = {}
    for line in corpus:
        for w in wp_split_words(line):
            if w not in segs:
                segs[w] = [w[0]] + ["##" + c for c in w[1:]]
    return segs


def wp_word_freq(corpus: list[str]) -> Counter:
    return Counter(w for line in corpus for w in wp_split_words(line))


def wp_counts(segs: dict[str, list[str]], freq: Counter) -> tuple[Counter, int]:
    counts: Counter = Counter()
    total = 0
    for w, f in freq.items():
        for tok in segs[w]:
            counts[tok] += f
        total += len(segs[w]) * f
    return counts, total


def wp_log_likelihood(segs: dict[str, list[str]], freq: Counter) -> float:
    counts, total = wp_counts(segs, freq)
    return sum(c * math.log(c / total) for _, c in sorted(counts.items()) if c > 0)


def wp_apply_merge(seq: list[str], x: str, y: str) -> list[str]:
    z = x + (y[2:] if y.startswith("##") else y)
    out = []
    i = 0
    while i < len(seq):
        if i < len(seq) - 1 and seq[i] == x and seq[i + 1] == y:
            out.append(z)
            i += 2
        else:
            out.append(seq[i])
            i += 1
    return out


def wp_all_pairs(segs: dict[str, list[str]], freq: Counter) -> set[tuple[str, str]]:
    pairs = set()
    for w in freq:
        seq = segs[w]
        for i in range(len(seq) - 1):
            pairs.add((seq[i], seq[i + 1]))
    return pairs


def wp_best_merge(segs: dict[str, list[str]], freq: Counter):
    """Exhaustive best merge: apply every candidate pair to a full copy of
    the segmentation and recompute the corpus log-likelihood from
    scratch. Deltas within 1e-9 of the maximum count as exact-arithmetic
    ties (distinct gains on small corpora differ by far more; equal ones
    differ only by ~1e-12 rounding noise) and the lexicographically
    smallest pair wins. Returns (pair, delta, new_segs) or None when no
    pair exists."""
    base = wp_log_likelihood(segs, freq)
    trials = {}
    deltas = {}
    for pair in wp_all_pairs(segs, freq):
        trial = {w: wp_apply_merge(seq, *pair) for w, seq in segs.items()}
        trials[pair] = trial
        deltas[pair] = wp_log_likelihood(trial, freq) - base
    if not deltas:
        return None
    top = max(deltas.values())
    pair = min(p for p, d in deltas.items() if d >= top - 1e-9)
    return pair, deltas[pair], trials[pair]


def wp_reference_merges(corpus: list[str], target_size: int, min_delta: float = 0.0):
    """Full greedy training by brute force; returns the merge sequence as
    (pair, delta) plus the final token inventory."""
    freq = wp_word_freq(corpus)
    segs = wp_initial_segs(corpus)
    counts, _ = wp_counts(segs, freq)
    tokens = sorted(counts)
    merges = []
    while len(tokens) < target_size:
        step = wp_best_merge(segs, freq)
        if step is None:
            break
        (x, y), delta, trial = step
        if not delta > min_delta:
            break
        segs = trial
        merges.append(((x, y), delta))
        z = x + (y[2:] if y.startswith("##") else y)
        if z not in tokens:
            tokens.append(z)
    return merges, tokens


def cosine(a, b) -> float:
    na = math.sqrt(sum(v * v for v in a))
    nb = math.sqrt(sum(v * v for v in b))
    return sum(p * q for p, q in zip(a, b)) / (na * nb)


def ntxent_reference(pairs, negatives, tau: float) -> float:
    """Brute-force contrastive loss: explicit double loop over the pool.

    pairs: list of (view_a, view_b); negatives: list of vectors. Anchor =
    view_a of each pair; denominator = every pool member except the
    anchor itself.
    """
    pool = [a for a, _ in pairs] + [b for _, b in pairs] + list(negatives)
    n = len(pairs)
    total = 0.0
    for j in range(n):
        anchor = pool[j]
        partner = pool[n + j]
        num = math.exp(cosine(anchor, partner) / tau)
        den = 0.0
        for m, u in enumerate(pool):
            if m == j:
                continue
            den += math.exp(cosine(anchor, u) / tau)
        total += -math.log(num / den)
    return total / n


def rank_oracle(scores, true_id, excluded=None):
    """Optimistic rank by explicit sort: walk candidates in ascending
    score order and count the strictly better ones that are not excluded."""
    order = sorted(range(len(scores)), key=lambda e: scores[e])
    true_score = scores[true_id]
    better = 0
    for e in order:
        if not scores[e] < true_score:
            break
        if excluded is not None and excluded[e]:
            continue
        better += 1
    return 1 + better
