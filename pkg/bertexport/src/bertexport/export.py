"""Export frozen text embeddings into the SEMVEC interchange format.

Each entity or relation label is framed as "[CLS] text [SEP]" and
pushed through a pretrained bidirectional encoder in inference mode.
The vector is the average of the penultimate layer over all
non-padding tokens ([CLS] and [SEP] included). One SEMVEC row is
written per label, in label-file order.

SEMVEC is line-oriented text: a `semvec v1 <count> <dim>` header, then
one tab-separated row per vector. A row holds the kind (`entity` or
`relation`) and the name, followed by `dim` space-separated floats.
"""

from __future__ import annotations

import logging
import os
import tempfile
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

KINDS = ("entity", "relation")


class ExportError(Exception):
    """Unusable labels file or encoder."""


@dataclass(frozen=True)
class ExportSpec:
    """One export job: which labels, which encoder, where to write.

    max_len is the per-label token budget including [CLS]/[SEP]; longer
    labels are truncated with a warning.
    """

    labels: str
    model: str
    out: str
    max_len: int = 64
    batch_size: int = 32

    def __post_init__(self) -> None:
        if self.max_len < 3:
            raise ValueError(f"max_len must leave room for [CLS] and [SEP], got {self.max_len}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


def read_labels(path) -> list[tuple[str, str, str]]:
    """Parse a kind<TAB>name<TAB>text label file.

    Kinds are `entity`/`relation`; every (kind, name) must be unique so
    each vocabulary name gets exactly one output row. Blank lines are
    tolerated.
    """
    rows: list[tuple[str, str, str]] = []
    seen: set[tuple[str, str]] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise ExportError(f"{path}:{lineno}: expected 3 tab-separated fields, got {len(cols)}")
            kind, name, text = cols
            if kind not in KINDS:
                raise ExportError(f"{path}:{lineno}: unknown kind {kind!r}")
            if not name:
                raise ExportError(f"{path}:{lineno}: empty name")
            if (kind, name) in seen:
                raise ExportError(f"{path}:{lineno}: duplicate {kind} {name!r}")
            seen.add((kind, name))
            rows.append((kind, name, text))
    if not rows:
        raise ExportError(f"{path}: no labels")
    return rows


def _load_encoder(identifier: str):
    import torch  # noqa: F401  (fail here, together, if the stack is absent)
    from transformers import AutoModel, AutoTokenizer

    try:
        tokenizer = AutoTokenizer.from_pretrained(identifier)
        model = AutoModel.from_pretrained(identifier)
    except Exception as e:
        raise ExportError(f"cannot load encoder {identifier!r}: {e}") from e
    model.eval()
    return tokenizer, model


def _pooled_batch(texts: list[str], tokenizer, model, max_len: int) -> np.ndarray:
    import torch

    probe = tokenizer(texts, add_special_tokens=True, truncation=False, padding=False)
    for text, ids in zip(texts, probe["input_ids"]):
        if len(ids) > max_len:
            log.warning("label %r spans %d tokens, truncating to %d", text, len(ids), max_len)

    enc = tokenizer(texts, padding=True, truncation=True, max_length=max_len, return_tensors="pt")
    with torch.no_grad():
        out = model(**enc, output_hidden_states=True)
    hidden = out.hidden_states[-2]
    mask = enc["attention_mask"].unsqueeze(-1).to(hidden.dtype)
    pooled = (hidden * mask).sum(dim=1) / mask.sum(dim=1)
    return pooled.cpu().numpy()


def export_embeddings(spec: ExportSpec) -> int:
    """Run the export job and return the output dimension (the encoder
    hidden size)."""
    rows = read_labels(spec.labels)
    tokenizer, model = _load_encoder(spec.model)

    chunks = []
    for i in range(0, len(rows), spec.batch_size):
        texts = [text for _, _, text in rows[i : i + spec.batch_size]]
        chunks.append(_pooled_batch(texts, tokenizer, model, spec.max_len))
    matrix = np.vstack(chunks)
    dim = matrix.shape[1]

    lines = [f"semvec v1 {len(rows)} {dim}"]
    for (kind, name, _), vec in zip(rows, matrix):
        lines.append(f"{kind}\t{name}\t" + " ".join(repr(float(v)) for v in vec))

    out_dir = os.path.dirname(os.path.abspath(spec.out))
    os.makedirs(out_dir, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=".semvec-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
        os.replace(tmp, spec.out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    log.info("wrote %d vectors at dim %d to %s", len(rows), dim, spec.out)
    return dim
