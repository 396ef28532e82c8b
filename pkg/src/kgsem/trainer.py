"""Objective assembly and mini-batch SGD.

The batch objective is

    sum over pairs [f(pos) + margin - f(neg)]_+
    + C * ( sum_e [||e||^2 - 1]_+
          + sum_r [(w_r . d_r)^2 / ||d_r||^2 - eps^2]_+
          + lambda_sem * contrastive )

where the contrastive term is present only for the semantic model
variant. Norm and orthogonality penalties run over every entity and
relation in the tables. After every gradient step each relation normal
w_r is renormalized to unit length.

All gradients are closed form; ``grad_check`` verifies them against
central finite differences on small instances.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .data import Triple, TripleSet, build_filter_index, sample_negative
from .errors import TrainingError
from .ioutil import atomic_write
from .rng import substream
from .scoring import MODEL_NAMES, ModelParams
from .semloss import ContrastConfig, attention_backward, attention_forward, ntxent_forward_backward
from .semstore import SemanticStore

log = logging.getLogger(__name__)

SAMPLING_MODES = ("unif", "bern")


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.001
    margin: float = 4.0
    C: float = 0.001
    epsilon: float = 0.001
    tau: float = 0.5
    lambda_sem: float = 1.0
    score_norm: int = 2
    dim: int = 128
    epochs: int = 50
    batch_size: int = 128
    sampling: str = "unif"
    model: str = "aesi"
    seed: int = 0
    aug_sigma: float = 0.05
    include_negatives: bool = True

    def __post_init__(self) -> None:
        if self.lr < 0:
            raise ValueError(f"lr must be >= 0, got {self.lr}")
        if self.margin < 0:
            raise ValueError(f"margin must be >= 0, got {self.margin}")
        if self.C < 0:
            raise ValueError(f"C must be >= 0, got {self.C}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if not self.tau > 0:
            raise ValueError(f"tau must be > 0, got {self.tau}")
        if self.lambda_sem < 0:
            raise ValueError(f"lambda_sem must be >= 0, got {self.lambda_sem}")
        if self.score_norm not in (1, 2):
            raise ValueError(f"score_norm must be 1 or 2, got {self.score_norm}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.sampling not in SAMPLING_MODES:
            raise ValueError(f"sampling must be one of {SAMPLING_MODES}, got {self.sampling!r}")
        if self.model not in MODEL_NAMES:
            raise ValueError(f"model must be one of {MODEL_NAMES}, got {self.model!r}")
        if self.aug_sigma < 0:
            raise ValueError(f"aug_sigma must be >= 0, got {self.aug_sigma}")

    def contrast(self) -> ContrastConfig:
        return ContrastConfig(
            tau=self.tau, aug_sigma=self.aug_sigma, include_negatives=self.include_negatives
        )


@dataclass
class LossHistory:
    """Per-epoch (train_loss, valid_loss), both normalized per triple."""

    epochs: list[tuple[float, float]] = field(default_factory=list)

    def append(self, train_loss: float, valid_loss: float) -> None:
        self.epochs.append((float(train_loss), float(valid_loss)))

    def __len__(self) -> int:
        return len(self.epochs)

    def __iter__(self):
        return iter(self.epochs)

    def save_csv(self, path) -> None:
        lines = ["epoch,train_loss,valid_loss"]
        for i, (tr, va) in enumerate(self.epochs, start=1):
            lines.append(f"{i},{tr!r},{va!r}")
        atomic_write(path, "\n".join(lines) + "\n")


def _split_batch(batch) -> tuple[np.ndarray, ...]:
    pos = np.array([[p.h, p.r, p.t] for p, _ in batch], dtype=np.int64)
    neg = np.array([[q.h, q.r, q.t] for _, q in batch], dtype=np.int64)
    return pos[:, 0], pos[:, 1], pos[:, 2], neg[:, 0], neg[:, 1], neg[:, 2]


def _residuals(params: ModelParams, model: str, hs, rs, ts):
    """Batched score residuals; returns (U, W, delta) with W/delta None
    for the plain translation model."""
    H = params.entity_emb[hs]
    T = params.entity_emb[ts]
    D = params.rel_trans[rs]
    if model == "transe":
        return H + D - T, None, None
    W = params.rel_normal[rs]
    delta = H - T
    U = delta - (W * delta).sum(axis=1, keepdims=True) * W + D
    return U, W, delta


def _scores_from_residuals(U: np.ndarray, p: int) -> np.ndarray:
    if p == 2:
        return (U * U).sum(axis=1)
    return np.abs(U).sum(axis=1)


def _residual_grad(U: np.ndarray, p: int) -> np.ndarray:
    if p == 2:
        return 2.0 * U
    return np.sign(U)


def _draw_noise(rng: np.random.Generator, n: int, dim: int, sigma: float) -> np.ndarray:
    """Augmentation noise for one batch: two views x n pairs x three slots
    (head, tail, relation) x dim, drawn in a single call."""
    return rng.standard_normal((2, n, 3, dim)) * sigma


def _contrastive_inputs(hs, rs, ts, hn, tn, params: ModelParams, sem: SemanticStore, noise):
    semH = sem.entity_vecs[hs]
    semT = sem.entity_vecs[ts]
    semR = sem.relation_vecs[rs]
    Q0 = params.entity_emb[hs] + semH
    K0 = params.entity_emb[ts] + semT
    V0 = params.rel_trans[rs] + semR
    Qa, Ka, Va = Q0 + noise[0, :, 0], K0 + noise[0, :, 1], V0 + noise[0, :, 2]
    Qb, Kb, Vb = Q0 + noise[1, :, 0], K0 + noise[1, :, 1], V0 + noise[1, :, 2]
    Qn = params.entity_emb[hn] + sem.entity_vecs[hn]
    Kn = params.entity_emb[tn] + sem.entity_vecs[tn]
    Vn = params.rel_trans[rs] + semR
    return (Qa, Ka, Va), (Qb, Kb, Vb), (Qn, Kn, Vn)


def _check_sem(params: ModelParams, sem: SemanticStore | None, cfg: TrainConfig) -> None:
    if cfg.model != "aesi":
        return
    if sem is None:
        raise ValueError("the semantic model variant needs a semantic store")
    if sem.dim != params.dim:
        raise ValueError(f"semantic dimension {sem.dim} does not match model dimension {params.dim}")


def _resolve_noise(batch, cfg: TrainConfig, params: ModelParams, aug_noise, rng):
    if cfg.model != "aesi":
        return None
    if aug_noise is not None:
        return aug_noise
    if rng is None:
        raise ValueError("the semantic model variant needs aug_noise or an augmentation stream")
    return _draw_noise(rng, len(batch), params.dim, cfg.aug_sigma)


def total_loss(
    batch,
    params: ModelParams,
    sem: SemanticStore | None,
    cfg: TrainConfig,
    aug_noise: np.ndarray | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[float, dict[str, float]]:
    """Batch objective value and its term breakdown.

    ``batch`` is a list of (positive, negative) Triple pairs. For the
    semantic variant the augmentation noise is either passed explicitly
    (shape (2, n, 3, dim)) or drawn from ``rng``.
    """
    if len(batch) == 0:
        raise ValueError("batch must not be empty")
    _check_sem(params, sem, cfg)
    noise = _resolve_noise(batch, cfg, params, aug_noise, rng)
    hs, rs, ts, hn, rn, tn = _split_batch(batch)

    U_pos, _, _ = _residuals(params, cfg.model, hs, rs, ts)
    U_neg, _, _ = _residuals(params, cfg.model, hn, rn, tn)
    f_pos = _scores_from_residuals(U_pos, cfg.score_norm)
    f_neg = _scores_from_residuals(U_neg, cfg.score_norm)
    viol = f_pos + cfg.margin - f_neg
    margin_sum = float(viol[viol > 0].sum())

    E = params.entity_emb
    exc_e = (E * E).sum(axis=1) - 1.0
    scale_sum = float(exc_e[exc_e > 0].sum())

    W, D = params.rel_normal, params.rel_trans
    nrm = (D * D).sum(axis=1)
    s = (W * D).sum(axis=1)
    ok = nrm > 0
    exc_r = np.zeros_like(nrm)
    exc_r[ok] = s[ok] ** 2 / nrm[ok] - cfg.epsilon**2
    orth_sum = float(exc_r[exc_r > 0].sum())

    contrastive = 0.0
    if cfg.model == "aesi":
        va, vb, vn = _contrastive_inputs(hs, rs, ts, hn, tn, params, sem, noise)
        Xa, _ = attention_forward(*va)
        Xb, _ = attention_forward(*vb)
        if cfg.include_negatives:
            Xn, _ = attention_forward(*vn)
        else:
            Xn = np.zeros((0, params.dim))
        contrastive, _, _, _ = ntxent_forward_backward(Xa, Xb, Xn, cfg.contrast())

    total = margin_sum + cfg.C * (scale_sum + orth_sum + cfg.lambda_sem * contrastive)
    breakdown = {
        "margin": margin_sum,
        "scale": scale_sum,
        "orth": orth_sum,
        "contrastive": contrastive,
        "total": total,
    }
    return total, breakdown


def grad_total_loss(
    batch,
    params: ModelParams,
    sem: SemanticStore | None,
    cfg: TrainConfig,
    aug_noise: np.ndarray | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[float, dict[str, float], dict[str, np.ndarray]]:
    """Objective value and breakdown, with closed-form gradients for the
    three parameter tables."""
    if len(batch) == 0:
        raise ValueError("batch must not be empty")
    _check_sem(params, sem, cfg)
    noise = _resolve_noise(batch, cfg, params, aug_noise, rng)
    hs, rs, ts, hn, rn, tn = _split_batch(batch)

    g_ent = np.zeros_like(params.entity_emb)
    g_rtr = np.zeros_like(params.rel_trans)
    g_rno = np.zeros_like(params.rel_normal)

    U_pos, W_pos, delta_pos = _residuals(params, cfg.model, hs, rs, ts)
    U_neg, W_neg, delta_neg = _residuals(params, cfg.model, hn, rn, tn)
    f_pos = _scores_from_residuals(U_pos, cfg.score_norm)
    f_neg = _scores_from_residuals(U_neg, cfg.score_norm)
    viol = f_pos + cfg.margin - f_neg
    active = viol > 0
    margin_sum = float(viol[active].sum())

    def margin_side(U, W, delta, heads, rels, tails, sign):
        gU = _residual_grad(U, cfg.score_norm) * (sign * active)[:, None]
        if cfg.model == "transe":
            gH = gU
            gD = gU
        else:
            wg = (W * gU).sum(axis=1, keepdims=True)
            gH = gU - wg * W
            gD = gU
            wd = (W * delta).sum(axis=1, keepdims=True)
            gW = -(wg * delta + wd * gU)
            np.add.at(g_rno, rels, gW)
        np.add.at(g_ent, heads, gH)
        np.add.at(g_ent, tails, -gH)
        np.add.at(g_rtr, rels, gD)

    margin_side(U_pos, W_pos, delta_pos, hs, rs, ts, 1.0)
    margin_side(U_neg, W_neg, delta_neg, hn, rn, tn, -1.0)

    E = params.entity_emb
    exc_e = (E * E).sum(axis=1) - 1.0
    act_e = exc_e > 0
    scale_sum = float(exc_e[act_e].sum())
    g_ent[act_e] += cfg.C * 2.0 * E[act_e]

    W, D = params.rel_normal, params.rel_trans
    nrm = (D * D).sum(axis=1)
    s = (W * D).sum(axis=1)
    ok = nrm > 0
    exc_r = np.zeros_like(nrm)
    exc_r[ok] = s[ok] ** 2 / nrm[ok] - cfg.epsilon**2
    act_r = exc_r > 0
    orth_sum = float(exc_r[act_r].sum())
    if np.any(act_r):
        sr = s[act_r][:, None]
        nr = nrm[act_r][:, None]
        g_rno[act_r] += cfg.C * 2.0 * sr / nr * D[act_r]
        g_rtr[act_r] += cfg.C * (2.0 * sr / nr * W[act_r] - 2.0 * sr**2 / nr**2 * D[act_r])

    contrastive = 0.0
    if cfg.model == "aesi":
        va, vb, vn = _contrastive_inputs(hs, rs, ts, hn, tn, params, sem, noise)
        Xa, cache_a = attention_forward(*va)
        Xb, cache_b = attention_forward(*vb)
        if cfg.include_negatives:
            Xn, cache_n = attention_forward(*vn)
        else:
            Xn, cache_n = np.zeros((0, params.dim)), None
        contrastive, gXa, gXb, gXn = ntxent_forward_backward(Xa, Xb, Xn, cfg.contrast())
        w = cfg.C * cfg.lambda_sem
        gQa, gKa, gVa = attention_backward(cache_a, w * gXa)
        gQb, gKb, gVb = attention_backward(cache_b, w * gXb)
        np.add.at(g_ent, hs, gQa + gQb)
        np.add.at(g_ent, ts, gKa + gKb)
        np.add.at(g_rtr, rs, gVa + gVb)
        if cache_n is not None and len(gXn):
            gQn, gKn, gVn = attention_backward(cache_n, w * gXn)
            np.add.at(g_ent, hn, gQn)
            np.add.at(g_ent, tn, gKn)
            np.add.at(g_rtr, rs, gVn)

    total = margin_sum + cfg.C * (scale_sum + orth_sum + cfg.lambda_sem * contrastive)
    breakdown = {
        "margin": margin_sum,
        "scale": scale_sum,
        "orth": orth_sum,
        "contrastive": contrastive,
        "total": total,
    }
    grads = {"entity_emb": g_ent, "rel_trans": g_rtr, "rel_normal": g_rno}
    return total, breakdown, grads


def _renormalize_normals(params: ModelParams) -> None:
    norms = np.linalg.norm(params.rel_normal, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    params.rel_normal /= norms


def _validation_loss(
    valid: TripleSet, params: ModelParams, cfg: TrainConfig, index, rng
) -> float:
    """Margin term only, per-triple mean, negatives from the validation
    stream."""
    pairs = [(pos, sample_negative(pos, cfg.sampling, index, rng)) for pos in valid]
    hs, rs, ts, hn, rn, tn = _split_batch(pairs)
    U_pos, _, _ = _residuals(params, cfg.model, hs, rs, ts)
    U_neg, _, _ = _residuals(params, cfg.model, hn, rn, tn)
    f_pos = _scores_from_residuals(U_pos, cfg.score_norm)
    f_neg = _scores_from_residuals(U_neg, cfg.score_norm)
    viol = f_pos + cfg.margin - f_neg
    return float(viol[viol > 0].sum() / len(pairs))


def train(
    train_set: TripleSet,
    valid_set: TripleSet,
    params: ModelParams,
    sem: SemanticStore | None,
    cfg: TrainConfig,
    step_hook=None,
) -> tuple[ModelParams, LossHistory]:
    """Seeded mini-batch SGD over the full objective.

    Each epoch re-creates its RNG streams from the run seed, shuffles
    the training set, corrupts one negative per positive, steps on the
    batch gradient, and renormalizes every relation normal. With lr=0 parameters are left untouched, so
    the recorded history is constant. Recorded train loss is the epoch
    objective normalized per training triple; valid loss is the margin
    term per validation triple. ``step_hook(step, params, breakdown)``
    runs after every optimizer step when provided.
    """
    if len(train_set) == 0 or len(valid_set) == 0:
        raise ValueError("train and valid sets must be non-empty")
    _check_sem(params, sem, cfg)
    if params.n_entities < 2:
        raise ValueError("need at least 2 entities to sample corruptions")

    index = build_filter_index(train_set, None, None, params.n_entities)
    triples = list(train_set)
    n = len(triples)
    history = LossHistory()
    step = 0

    for epoch in range(1, cfg.epochs + 1):
        samp = substream(cfg.seed, "sampling")
        aug = substream(cfg.seed, "augmentation")
        val = substream(cfg.seed, "validation")
        order = samp.permutation(n)
        epoch_sum = 0.0
        for lo in range(0, n, cfg.batch_size):
            chunk = order[lo : lo + cfg.batch_size]
            batch = []
            for i in chunk:
                pos = triples[i]
                batch.append((pos, sample_negative(pos, cfg.sampling, index, samp)))
            if cfg.lr == 0.0:
                loss, breakdown = total_loss(batch, params, sem, cfg, rng=aug)
            else:
                loss, breakdown, grads = grad_total_loss(batch, params, sem, cfg, rng=aug)
                params.entity_emb -= cfg.lr * grads["entity_emb"]
                params.rel_trans -= cfg.lr * grads["rel_trans"]
                params.rel_normal -= cfg.lr * grads["rel_normal"]
                _renormalize_normals(params)
            epoch_sum += loss
            step += 1
            if step_hook is not None:
                step_hook(step, params, breakdown)
        train_loss = epoch_sum / n
        valid_loss = _validation_loss(valid_set, params, cfg, index, val)
        if not (np.isfinite(train_loss) and np.isfinite(valid_loss)):
            raise TrainingError(f"loss diverged at epoch {epoch}")
        history.append(train_loss, valid_loss)
        log.info("epoch %d: train %.6f valid %.6f", epoch, train_loss, valid_loss)

    return params, history


def _kink_signature(batch, params, sem, cfg, noise) -> tuple:
    """Hashable activation pattern of every non-smooth site of the
    objective; used to reject finite-difference points that straddle a
    hinge or an L1 kink."""
    hs, rs, ts, hn, rn, tn = _split_batch(batch)
    U_pos, _, _ = _residuals(params, cfg.model, hs, rs, ts)
    U_neg, _, _ = _residuals(params, cfg.model, hn, rn, tn)
    f_pos = _scores_from_residuals(U_pos, cfg.score_norm)
    f_neg = _scores_from_residuals(U_neg, cfg.score_norm)
    parts = [tuple(f_pos + cfg.margin - f_neg > 0)]
    if cfg.score_norm == 1:
        parts.append(tuple(np.sign(U_pos).ravel()))
        parts.append(tuple(np.sign(U_neg).ravel()))
    E = params.entity_emb
    parts.append(tuple((E * E).sum(axis=1) > 1.0))
    W, D = params.rel_normal, params.rel_trans
    nrm = (D * D).sum(axis=1)
    s = (W * D).sum(axis=1)
    ok = nrm > 0
    exc = np.zeros_like(nrm)
    exc[ok] = s[ok] ** 2 / nrm[ok] - cfg.epsilon**2
    parts.append(tuple(exc > 0))
    return tuple(parts)


def grad_check(
    batch,
    params: ModelParams,
    sem: SemanticStore | None,
    cfg: TrainConfig,
    h: float = 1e-5,
) -> float:
    """Max relative error between analytic and central-difference
    gradients over all parameters.

    Only coordinates with |analytic| > 1e-8 participate; coordinates
    whose two evaluation points land on different sides of a hinge or
    L1 kink are skipped. Instances are capped small so the sweep stays
    tractable.
    """
    if params.dim > 16:
        raise ValueError(f"gradient check is limited to dim <= 16, got {params.dim}")
    if params.n_entities > 20:
        raise ValueError(f"gradient check is limited to <= 20 entities, got {params.n_entities}")
    if not h > 0:
        raise ValueError(f"step must be positive, got {h}")

    noise = None
    if cfg.model == "aesi":
        noise = _draw_noise(substream(cfg.seed, "augmentation"), len(batch), params.dim, cfg.aug_sigma)

    _, _, grads = grad_total_loss(batch, params, sem, cfg, aug_noise=noise)
    tables = {"entity_emb": params.entity_emb, "rel_trans": params.rel_trans, "rel_normal": params.rel_normal}
    worst = 0.0
    for name, table in tables.items():
        analytic = grads[name]
        for idx in np.ndindex(table.shape):
            a = analytic[idx]
            if abs(a) <= 1e-8:
                continue
            orig = table[idx]
            table[idx] = orig + h
            f_plus, _ = total_loss(batch, params, sem, cfg, aug_noise=noise)
            sig_plus = _kink_signature(batch, params, sem, cfg, noise)
            table[idx] = orig - h
            f_minus, _ = total_loss(batch, params, sem, cfg, aug_noise=noise)
            sig_minus = _kink_signature(batch, params, sem, cfg, noise)
            table[idx] = orig
            if sig_plus != sig_minus:
                continue
            numeric = (f_plus - f_minus) / (2.0 * h)
            rel = abs(a - numeric) / max(abs(a), abs(numeric))
            worst = max(worst, rel)
    return worst
