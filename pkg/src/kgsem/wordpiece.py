"""Subword vocabulary training by greedy likelihood-maximizing merges, plus
greedy longest-match tokenization.

The corpus is modeled as a unigram bag: with token counts c(t) over a total
of T occurrences, the corpus log-likelihood is sum_t c(t)*log(c(t)/T).
Each training step merges the adjacent token pair whose merge raises that
quantity the most, until the vocabulary reaches its target size or no pair
still offers a gain above ``min_delta``.

Continuation tokens carry the ``##`` prefix; word-initial tokens do not.
Merging is a single left-to-right, non-overlapping pass per word.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field

from .errors import FormatError

UNK = "[UNK]"

_WORD_SPLIT = re.compile(r"[\s_/.]+")


def split_words(text: str) -> list[str]:
    """Word boundaries: whitespace plus the separators common in dataset
    identifiers (underscore, slash, dot)."""
    return [w for w in _WORD_SPLIT.split(text) if w]


def _char_tokens(word: str) -> list[str]:
    return [word[0]] + ["##" + c for c in word[1:]]


def merged_token(x: str, y: str) -> str:
    return x + (y[2:] if y.startswith("##") else y)


def _phi(n: int) -> float:
    # n*log(n) with the 0*log(0) = 0 convention
    return n * math.log(n) if n > 0 else 0.0


def merge_gain_per_occurrence(p_merged: float, p_x: float, p_y: float) -> float:
    """Per-occurrence gain of a merge under independent unigrams:
    log p(z) - log p(x) - log p(y), the pair's pointwise mutual
    information. Zero exactly when p(z) = p(x)*p(y)."""
    return math.log(p_merged) - math.log(p_x) - math.log(p_y)


class CorpusStats:
    """Mutable segmentation state of a training corpus.

    Tracks per-word segmentations, token counts, the token total, and
    non-overlapping adjacent-pair counts with a pair -> words index.
    """

    def __init__(self, word_freq: dict[str, int]):
        self.word_freq = dict(word_freq)
        self.segs: dict[str, list[str]] = {w: _char_tokens(w) for w in word_freq}
        self.counts: Counter[str] = Counter()
        self.total = 0
        for w, f in self.word_freq.items():
            for tok in self.segs[w]:
                self.counts[tok] += f
            self.total += len(self.segs[w]) * f
        self.pair_counts: Counter[tuple[str, str]] = Counter()
        self.pair_words: dict[tuple[str, str], set[str]] = {}
        for w in self.word_freq:
            self._add_word_pairs(w)

    def _word_pairs(self, seq: list[str]) -> set[tuple[str, str]]:
        return {(seq[i], seq[i + 1]) for i in range(len(seq) - 1)}

    @staticmethod
    def _pair_count_in(seq: list[str], pair: tuple[str, str]) -> int:
        x, y = pair
        c = i = 0
        while i < len(seq) - 1:
            if seq[i] == x and seq[i + 1] == y:
                c += 1
                i += 2
            else:
                i += 1
        return c

    def _add_word_pairs(self, w: str) -> None:
        seq, f = self.segs[w], self.word_freq[w]
        for pair in self._word_pairs(seq):
            self.pair_counts[pair] += f * self._pair_count_in(seq, pair)
            self.pair_words.setdefault(pair, set()).add(w)

    def _remove_word_pairs(self, w: str) -> None:
        seq, f = self.segs[w], self.word_freq[w]
        for pair in self._word_pairs(seq):
            self.pair_counts[pair] -= f * self._pair_count_in(seq, pair)
            if self.pair_counts[pair] <= 0:
                del self.pair_counts[pair]
            members = self.pair_words.get(pair)
            if members is not None:
                members.discard(w)
                if not members:
                    del self.pair_words[pair]

    def apply_merge(self, x: str, y: str) -> str:
        """Merge every non-overlapping (x, y) adjacency; returns the new token."""
        z = merged_token(x, y)
        for w in sorted(self.pair_words.get((x, y), ())):
            self._remove_word_pairs(w)
            seq = self.segs[w]
            out: list[str] = []
            i = 0
            f = self.word_freq[w]
            while i < len(seq):
                if i < len(seq) - 1 and seq[i] == x and seq[i + 1] == y:
                    out.append(z)
                    self.counts[x] -= f
                    self.counts[y] -= f
                    self.counts[z] += f
                    self.total -= f
                    i += 2
                else:
                    out.append(seq[i])
                    i += 1
            self.segs[w] = out
            self._add_word_pairs(w)
        return z

    def log_likelihood(self) -> float:
        """Corpus log-likelihood under relative-frequency unigrams."""
        return sum(_phi(c) for _, c in sorted(self.counts.items()) if c > 0) - _phi(self.total)


def merge_delta(x: str, y: str, stats: CorpusStats) -> float:
    """Total corpus log-likelihood change from merging adjacent (x, y).

    Computed in closed form from the count changes: the merge turns c
    adjacent occurrences into the joined token, shortening the corpus by c
    tokens. Equals a full before/after likelihood evaluation.
    """
    c = stats.pair_counts.get((x, y), 0)
    if c <= 0:
        raise ValueError(f"pair ({x!r}, {y!r}) is never adjacent in the current segmentation")
    z = merged_token(x, y)
    cz0 = stats.counts.get(z, 0)
    T = stats.total
    Tp = T - c
    delta = _phi(cz0 + c) - _phi(cz0) - _phi(Tp) + _phi(T)
    if x == y:
        cx = stats.counts[x]
        delta += _phi(cx - 2 * c) - _phi(cx)
    else:
        cx, cy = stats.counts[x], stats.counts[y]
        delta += _phi(cx - c) - _phi(cx) + _phi(cy - c) - _phi(cy)
    return delta


@dataclass
class SubwordVocab:
    """Trained subword inventory.

    ``tokens`` holds the base characters (in sorted order) followed by
    merged tokens in creation order; ``unigram_count`` covers only tokens
    still present in the final corpus segmentation; ``merge_log`` records
    each accepted merge as (x, y, delta).
    """

    tokens: list[str]
    unigram_count: dict[str, int] = field(default_factory=dict)
    merge_log: list[tuple[str, str, float]] = field(default_factory=list)

    def __post_init__(self) -> None:
        self._token_set = frozenset(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._token_set

    def __len__(self) -> int:
        return len(self.tokens)


# Two candidate merges can have mathematically identical gains (the gains
# are integer combinations of n*log(n) terms), yet their floating-point
# values differ by rounding noise near 1e-12. Genuinely different gains
# are separated by far more than 1e-9 on any corpus small enough to care,
# so this window detects exact ties without ever conflating distinct ones.
TIE_TOL = 1e-9


def train_vocab(corpus: list[str], target_size: int, min_delta: float = 0.0) -> SubwordVocab:
    """Greedy merge training.

    Starts from per-character segmentation and repeatedly merges the
    adjacent pair with the largest ``merge_delta``, until the vocabulary
    holds ``target_size`` tokens or the best gain is not above
    ``min_delta``. Pairs whose gains agree within ``TIE_TOL`` of the
    maximum count as tied and the lexicographically smallest (x, y) wins,
    which keeps the merge sequence independent of float rounding noise.
    """
    word_freq = Counter(w for line in corpus for w in split_words(line))
    if not word_freq:
        raise ValueError("corpus is empty")
    charset = {ch for w in word_freq for ch in w}
    if target_size < len(charset):
        raise ValueError(f"target_size {target_size} below the {len(charset)} distinct base characters")

    stats = CorpusStats(word_freq)
    tokens = sorted(stats.counts)
    token_set = set(tokens)
    merge_log: list[tuple[str, str, float]] = []

    while len(tokens) < target_size and stats.pair_counts:
        deltas = {pair: merge_delta(pair[0], pair[1], stats) for pair in stats.pair_counts}
        best_delta = max(deltas.values())
        best_pair = min(p for p, d in deltas.items() if d >= best_delta - TIE_TOL)
        if not deltas[best_pair] > min_delta:
            break
        z = stats.apply_merge(*best_pair)
        merge_log.append((best_pair[0], best_pair[1], deltas[best_pair]))
        if z not in token_set:
            token_set.add(z)
            tokens.append(z)

    return SubwordVocab(tokens, {t: c for t, c in stats.counts.items() if c > 0}, merge_log)


def tokenize(text: str, vocab: SubwordVocab) -> list[str]:
    """Greedy longest-prefix-match segmentation.

    Words are split as in training; pieces after the first carry ``##``.
    A position with no matching piece emits ``[UNK]`` and advances one
    character, so tokenization is total.
    """
    out: list[str] = []
    for word in split_words(text):
        i = 0
        while i < len(word):
            match = None
            for end in range(len(word), i, -1):
                piece = word[i:end]
                cand = piece if i == 0 else "##" + piece
                if cand in vocab:
                    match = cand
                    break
            if match is None:
                out.append(UNK)
                i += 1
            else:
                out.append(match)
                i += len(match) - 2 if match.startswith("##") else len(match)  # chars consumed
    return out


VOCAB_MAGIC = "wordpiece-vocab v1"


def save_vocab(path, vocab: SubwordVocab) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{VOCAB_MAGIC} {len(vocab.tokens)}\n")
        for tok in vocab.tokens:
            fh.write(tok + "\n")


def load_vocab(path) -> SubwordVocab:
    """Read a vocab file; counts and the merge log are not persisted."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        parts = header.rsplit(" ", 1)
        if len(parts) != 2 or parts[0] != VOCAB_MAGIC or not parts[1].isdigit():
            raise FormatError(f"{path}: bad vocab header {header!r}")
        count = int(parts[1])
        tokens = [line.rstrip("\n") for line in fh]
    if len(tokens) != count:
        raise FormatError(f"{path}: header declares {count} tokens, file has {len(tokens)}")
    return SubwordVocab(tokens)
