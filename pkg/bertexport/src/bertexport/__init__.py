"""Frozen text embeddings from a pretrained encoder, written as SEMVEC."""

from .export import ExportError, ExportSpec, export_embeddings, read_labels

__version__ = "0.1.0"

__all__ = ["ExportError", "ExportSpec", "export_embeddings", "read_labels", "__version__"]
