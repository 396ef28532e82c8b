"""Knowledge-graph completion with translation embeddings, frozen text
semantics, and a contrastive soft constraint."""

__version__ = "0.1.0"

from .data import (
    FilterIndex,
    LabelMap,
    Triple,
    TripleSet,
    Vocab,
    build_filter_index,
    load_dataset,
    load_labels,
    load_triples,
    sample_negative,
    save_triples,
)
from .errors import (
    CoverageError,
    FormatError,
    KgsemError,
    ParseError,
    SamplingError,
    TrainingError,
)
from .evaluator import EvalReport, TableScorer, evaluate, rank_entity_slot
from .rng import substream
from .scoring import (
    ModelParams,
    init_params,
    load_checkpoint,
    project_to_hyperplane,
    save_checkpoint,
    score_triple,
    transe_score,
    transh_score,
)
from .semloss import ContrastConfig, attention, fuse, ntxent_loss
from .semstore import SemanticStore, fallback_embed, load_semvec, save_semvec, whiten_store
from .trainer import LossHistory, TrainConfig, grad_check, grad_total_loss, total_loss, train
from .whitening import WhiteningTransform, apply_whitening, fit_whitening, load_transform, save_transform
from .wordpiece import (
    SubwordVocab,
    load_vocab,
    merge_delta,
    merge_gain_per_occurrence,
    save_vocab,
    tokenize,
    train_vocab,
)

__all__ = [name for name in dir() if not name.startswith("_")]
