"""Semantic fusion, per-triple attention, and the contrastive loss.

Fusion adds the frozen semantic vector to the trainable structural vector.
Attention treats each of the d embedding dimensions as one position: the
logit matrix is the scaled outer product of the fused head (query) and
fused tail (key), softmaxed per row, applied to the fused relation
(value). The contrastive term scores agreement between two noisy views of
each positive triple's attention output against the rest of the pool.

Forward/backward pairs are provided for both attention and the
contrastive loss so the trainer can assemble exact closed-form gradients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ContrastConfig:
    tau: float = 0.5
    aug_sigma: float = 0.05
    include_negatives: bool = True

    def __post_init__(self) -> None:
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.aug_sigma < 0:
            raise ValueError(f"aug_sigma must be non-negative, got {self.aug_sigma}")


def fuse(struct_vec: np.ndarray, sem_vec: np.ndarray) -> np.ndarray:
    """Elementwise sum of the structural and semantic components."""
    struct_vec = np.asarray(struct_vec, dtype=np.float64)
    sem_vec = np.asarray(sem_vec, dtype=np.float64)
    if struct_vec.shape != sem_vec.shape:
        raise ValueError(f"dimension mismatch: {struct_vec.shape} vs {sem_vec.shape}")
    return struct_vec + sem_vec


def attention_forward(
    Q: np.ndarray, K: np.ndarray, V: np.ndarray
) -> tuple[np.ndarray, tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]]:
    """Batched attention on (B, d) arrays.

    Logits L[b] = outer(Q[b], K[b]) / sqrt(d); A = softmax per row;
    output[b] = A[b] V[b]. Returns the outputs plus a cache for backward.
    """
    Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
    K = np.atleast_2d(np.asarray(K, dtype=np.float64))
    V = np.atleast_2d(np.asarray(V, dtype=np.float64))
    d = Q.shape[1]
    if d == 0:
        raise ValueError("attention needs dimension >= 1")
    if K.shape != Q.shape or V.shape != Q.shape:
        raise ValueError(f"dimension mismatch: {Q.shape}, {K.shape}, {V.shape}")
    logits = Q[:, :, None] * K[:, None, :] / np.sqrt(d)
    logits -= logits.max(axis=2, keepdims=True)
    A = np.exp(logits)
    A /= A.sum(axis=2, keepdims=True)
    out = np.einsum("bij,bj->bi", A, V)
    return out, (Q, K, V, A, out)


def attention_backward(
    cache: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray], g: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of sum(g * output) with respect to Q, K, V."""
    Q, K, V, A, out = cache
    g = np.atleast_2d(np.asarray(g, dtype=np.float64))
    d = Q.shape[1]
    gV = np.einsum("bij,bi->bj", A, g)
    # softmax rows: dL[b,i,j] = g[b,i] * A[b,i,j] * (V[b,j] - out[b,i])
    dL = g[:, :, None] * A * (V[:, None, :] - out[:, :, None])
    gQ = np.einsum("bij,bj->bi", dL, K) / np.sqrt(d)
    gK = np.einsum("bij,bi->bj", dL, Q) / np.sqrt(d)
    return gQ, gK, gV


def attention(q: np.ndarray, k: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Single-triple attention output; coordinate i is a softmax-weighted
    average of v, weighted by the affinity of q_i to every k_j."""
    out, _ = attention_forward(q, k, v)
    return out[0]


def _normalize_pool(U: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    norms = np.linalg.norm(U, axis=1)
    if np.any(norms == 0.0):
        raise ValueError("zero vector in contrastive pool, cosine similarity undefined")
    return U / norms[:, None], norms


def ntxent_forward_backward(
    views_a: np.ndarray, views_b: np.ndarray, negatives: np.ndarray, cfg: ContrastConfig
) -> tuple[float, np.ndarray, np.ndarray, np.ndarray]:
    """Contrastive loss and its gradients.

    Pool = both views of the N pairs plus the negatives (when configured).
    Anchors are the first views; for anchor j the positive is its partner
    and the denominator runs over every pool member except the anchor
    itself. Loss is the mean over anchors of
    log sum_m exp(sim/tau) - sim(anchor, partner)/tau with cosine sim.
    """
    views_a = np.atleast_2d(np.asarray(views_a, dtype=np.float64))
    views_b = np.atleast_2d(np.asarray(views_b, dtype=np.float64))
    n = views_a.shape[0]
    if n == 0:
        raise ValueError("contrastive loss needs at least one positive pair")
    if views_b.shape != views_a.shape:
        raise ValueError(f"view shape mismatch: {views_a.shape} vs {views_b.shape}")
    negatives = np.asarray(negatives, dtype=np.float64)
    if negatives.size == 0 or not cfg.include_negatives:
        negatives = np.zeros((0, views_a.shape[1]))
    negatives = np.atleast_2d(negatives)

    U = np.vstack([views_a, views_b, negatives])
    P = U.shape[0]
    Uhat, norms = _normalize_pool(U)

    S = Uhat[:n] @ Uhat.T                      # (n, P) cosine similarities
    Z = S / cfg.tau
    self_cols = np.arange(n)
    Z[self_cols, self_cols] = -np.inf          # anchor never scores itself
    zmax = Z.max(axis=1, keepdims=True)
    E = np.exp(Z - zmax)
    denom = E.sum(axis=1)
    lse = zmax[:, 0] + np.log(denom)
    pos_cols = n + np.arange(n)
    loss = float(np.mean(lse - S[self_cols, pos_cols] / cfg.tau))

    # dloss/dS[j,m] = (pi[j,m] - [m is j's partner]) / (n * tau)
    C = E / denom[:, None]
    C[self_cols, self_cols] = 0.0
    C[self_cols, pos_cols] -= 1.0
    C /= n * cfg.tau

    # sim(j, m) = Uhat[j] . Uhat[m]; chain through the normalizations
    anchor_hat = Uhat[:n]
    row_sum_cs = (C * S).sum(axis=1)           # per anchor j
    gU = np.zeros_like(U)
    gU[:n] += (C @ Uhat - row_sum_cs[:, None] * anchor_hat) / norms[:n, None]
    col_sum_cs = (C * S).sum(axis=0)           # per pool member m
    gU += (C.T @ anchor_hat - col_sum_cs[:, None] * Uhat) / norms[:, None]

    return loss, gU[:n], gU[n : 2 * n], gU[2 * n :]


def ntxent_loss(pos_pairs, neg_outputs, cfg: ContrastConfig) -> float:
    """Loss-only entry point over a list of (view, view) pairs plus a list
    of negative outputs."""
    if len(pos_pairs) == 0:
        raise ValueError("contrastive loss needs at least one positive pair")
    views_a = np.vstack([np.asarray(a, dtype=np.float64) for a, _ in pos_pairs])
    views_b = np.vstack([np.asarray(b, dtype=np.float64) for _, b in pos_pairs])
    if len(neg_outputs):
        negatives = np.vstack([np.asarray(v, dtype=np.float64) for v in neg_outputs])
    else:
        negatives = np.zeros((0, views_a.shape[1]))
    loss, _, _, _ = ntxent_forward_backward(views_a, views_b, negatives, cfg)
    return loss
