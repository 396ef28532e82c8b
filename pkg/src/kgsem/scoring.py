"""Translation-model geometry.

Entities live in R^d. Each relation r carries a translation vector d_r
and a hyperplane normal w_r; the hyperplane score projects head and tail
onto the hyperplane of r before translating. The plain translation score
ignores w_r. With score_norm=2 the score is the squared L2 norm of the
residual; with score_norm=1 its L1 norm.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import FormatError
from .ioutil import atomic_write, fmt_floats, parse_floats

MODEL_NAMES = ("transe", "transh", "aesi")


@dataclass
class ModelParams:
    entity_emb: np.ndarray
    rel_trans: np.ndarray
    rel_normal: np.ndarray
    dim: int
    score_norm: int = 2

    @property
    def n_entities(self) -> int:
        return self.entity_emb.shape[0]

    @property
    def n_relations(self) -> int:
        return self.rel_trans.shape[0]


def init_params(
    n_entities: int, n_relations: int, dim: int, score_norm: int, rng: np.random.Generator
) -> ModelParams:
    """Uniform init in [-6/sqrt(d), 6/sqrt(d)]; normals drawn the same way
    then renormalized to unit length. Draw order is entities, translations,
    normals."""
    if dim < 1:
        raise ValueError(f"dim must be positive, got {dim}")
    if score_norm not in (1, 2):
        raise ValueError(f"score_norm must be 1 or 2, got {score_norm}")
    bound = 6.0 / np.sqrt(dim)
    ent = rng.uniform(-bound, bound, size=(n_entities, dim))
    d_r = rng.uniform(-bound, bound, size=(n_relations, dim))
    w_r = rng.uniform(-bound, bound, size=(n_relations, dim))
    norms = np.linalg.norm(w_r, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    w_r = w_r / norms
    return ModelParams(entity_emb=ent, rel_trans=d_r, rel_normal=w_r, dim=dim, score_norm=score_norm)


def project_to_hyperplane(e: np.ndarray, w: np.ndarray) -> np.ndarray:
    """e - (w.e) w for unit w; the result is orthogonal to w."""
    norm = float(np.linalg.norm(w))
    if abs(norm - 1.0) > 1e-6:
        raise ValueError(f"hyperplane normal must be unit length, got norm {norm}")
    return e - np.dot(w, e) * w


def residual_norm(v: np.ndarray, p: int) -> float:
    if p == 2:
        return float(np.dot(v, v))
    if p == 1:
        return float(np.abs(v).sum())
    raise ValueError(f"score_norm must be 1 or 2, got {p}")


def _check_ids(params: ModelParams, h: int, r: int, t: int) -> None:
    if not 0 <= h < params.n_entities or not 0 <= t < params.n_entities:
        raise ValueError(f"entity id out of range: h={h}, t={t}, n_entities={params.n_entities}")
    if not 0 <= r < params.n_relations:
        raise ValueError(f"relation id out of range: r={r}, n_relations={params.n_relations}")


def transh_score(h: int, r: int, t: int, params: ModelParams) -> float:
    """Hyperplane score: residual (h - (w.h)w) + d_r - (t - (w.t)w).

    Computes the projection literally from the stored normal without
    renormalizing, so the score is an exact function of the parameters.
    """
    _check_ids(params, h, r, t)
    hv = params.entity_emb[h]
    tv = params.entity_emb[t]
    w = params.rel_normal[r]
    diff = hv - tv
    u = diff - np.dot(w, diff) * w + params.rel_trans[r]
    return residual_norm(u, params.score_norm)


def transe_score(h: int, r: int, t: int, params: ModelParams) -> float:
    """Plain translation score: residual h + d_r - t; w_r plays no part."""
    _check_ids(params, h, r, t)
    u = params.entity_emb[h] + params.rel_trans[r] - params.entity_emb[t]
    return residual_norm(u, params.score_norm)


def score_triple(model: str, h: int, r: int, t: int, params: ModelParams) -> float:
    """Dispatch by model name; the semantic variant scores with the
    hyperplane geometry."""
    if model == "transe":
        return transe_score(h, r, t, params)
    if model in ("transh", "aesi"):
        return transh_score(h, r, t, params)
    raise ValueError(f"unknown model {model!r}")


META_KEYS = ("dim", "n_entities", "n_relations", "score_norm", "model")


def save_checkpoint(ckpt_dir, params: ModelParams, model: str) -> None:
    """Checkpoint layout: a `meta` key=value file plus one text matrix per
    parameter table, one float row per id."""
    if model not in MODEL_NAMES:
        raise ValueError(f"unknown model {model!r}")
    os.makedirs(ckpt_dir, exist_ok=True)
    meta = {
        "dim": params.dim,
        "n_entities": params.n_entities,
        "n_relations": params.n_relations,
        "score_norm": params.score_norm,
        "model": model,
    }
    atomic_write(os.path.join(ckpt_dir, "meta"), "".join(f"{k}={meta[k]}\n" for k in META_KEYS))
    for fname, table in (
        ("entities.vec", params.entity_emb),
        ("rel_trans.vec", params.rel_trans),
        ("rel_normal.vec", params.rel_normal),
    ):
        atomic_write(os.path.join(ckpt_dir, fname), "".join(fmt_floats(row) + "\n" for row in table))


def load_checkpoint(ckpt_dir) -> tuple[ModelParams, str]:
    meta_path = os.path.join(ckpt_dir, "meta")
    meta: dict[str, str] = {}
    with open(meta_path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line:
                continue
            if "=" not in line:
                raise FormatError(f"{meta_path}:{lineno}: expected key=value, got {line!r}")
            k, v = line.split("=", 1)
            meta[k] = v
    missing = [k for k in META_KEYS if k not in meta]
    if missing:
        raise FormatError(f"{meta_path}: missing keys: {', '.join(missing)}")
    try:
        dim = int(meta["dim"])
        n_ent = int(meta["n_entities"])
        n_rel = int(meta["n_relations"])
        score_norm = int(meta["score_norm"])
    except ValueError as e:
        raise FormatError(f"{meta_path}: {e}") from None
    model = meta["model"]
    if model not in MODEL_NAMES:
        raise FormatError(f"{meta_path}: unknown model {model!r}")
    if score_norm not in (1, 2):
        raise FormatError(f"{meta_path}: score_norm must be 1 or 2, got {score_norm}")

    def read_table(fname: str, rows: int) -> np.ndarray:
        path = os.path.join(ckpt_dir, fname)
        out = np.empty((rows, dim))
        with open(path, encoding="utf-8") as fh:
            for i in range(rows):
                out[i] = parse_floats(fh.readline(), dim, path, i + 1)
            extra = fh.readline()
            if extra not in ("", "\n"):
                raise FormatError(f"{path}: more rows than the declared {rows}")
        return out

    params = ModelParams(
        entity_emb=read_table("entities.vec", n_ent),
        rel_trans=read_table("rel_trans.vec", n_rel),
        rel_normal=read_table("rel_normal.vec", n_rel),
        dim=dim,
        score_norm=score_norm,
    )
    return params, model
