"""Shared fixtures: a tiny deterministic encoder saved to disk, so the
exporter runs fully offline, plus a 50-label vocabulary file."""

from __future__ import annotations

import os

import pytest

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")
os.environ.setdefault("HF_HUB_DISABLE_PROGRESS_BARS", "1")

WORDPIECES = (
    ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    + list("abcdefghijklmnopqrstuvwxyz")
    + ["##" + c for c in "abcdefghijklmnopqrstuvwxyz"]
    + ["red", "green", "blue", "dark", "pale", "apple", "pear", "plum",
       "berry", "leaf", "tree", "stone", "bird", "fish", "north", "south",
       "east", "west", "part", "of", "similar", "to", "near", "far",
       "kind", "type", "##s", "##ed", "##ing"]
)

ENTITY_TEXTS = [
    "red apple", "green pear", "dark plum", "pale berry", "blue bird",
    "north tree", "south stone", "east leaf", "west fish", "red bird",
    "green apple", "dark berry", "pale plum", "blue fish", "north stone",
    "south tree", "east bird", "west leaf", "red stone", "green fish",
    "dark apple", "pale pear", "blue tree", "north berry", "south bird",
    "east plum", "west stone", "red apple", "green pear", "dark plum",
]

RELATION_TEXTS = [
    "part of", "similar to", "near", "far", "kind of",
    "type of", "north of", "south of", "east of", "west of",
    "part of", "similar to", "red kind", "green kind", "blue kind",
    "dark type", "pale type", "near tree", "far stone", "near bird",
]


@pytest.fixture(scope="session")
def encoder_dir(tmp_path_factory):
    """Seeded 768-wide two-layer encoder plus wordpiece tokenizer."""
    import torch
    from transformers import BertConfig, BertModel, BertTokenizer

    path = tmp_path_factory.mktemp("encoder")
    with open(path / "vocab.txt", "w", encoding="utf-8") as fh:
        fh.write("\n".join(WORDPIECES) + "\n")
    tokenizer = BertTokenizer.from_pretrained(str(path))
    tokenizer.save_pretrained(str(path))

    config = BertConfig(
        vocab_size=len(WORDPIECES),
        hidden_size=768,
        num_hidden_layers=2,
        num_attention_heads=4,
        intermediate_size=96,
        max_position_embeddings=64,
    )
    torch.manual_seed(0)
    BertModel(config).save_pretrained(str(path))
    return str(path)


@pytest.fixture(scope="session")
def labels_file(tmp_path_factory):
    """50 labels: 30 entities and 20 relations, with repeated texts so
    identical-label rows can be compared."""
    path = tmp_path_factory.mktemp("labels") / "labels.tsv"
    lines = [f"entity\tnode_{i:04d}\t{text}" for i, text in enumerate(ENTITY_TEXTS)]
    lines += [f"relation\trel_{j:02d}\t{text}" for j, text in enumerate(RELATION_TEXTS)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(path)
