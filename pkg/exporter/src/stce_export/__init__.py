"""Embed raw text with pre-trained encoders and export STCE files."""

from .exporter import (
    ExportJob,
    MalformedVectorFileError,
    ModelLoadError,
    export_sentence_embeddings,
    export_word_vector_table,
    load_encoder,
)
from .stce import write_stce

__version__ = "0.1.0"

__all__ = [
    "ExportJob",
    "MalformedVectorFileError",
    "ModelLoadError",
    "export_sentence_embeddings",
    "export_word_vector_table",
    "load_encoder",
    "write_stce",
]
