"""Run pre-trained sentence encoders over raw text and export embedding files.

Duplicate input lines are encoded once and replicated, so identical texts are
guaranteed byte-identical rows regardless of batch composition.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .stce import write_stce


class ModelLoadError(RuntimeError):
    """The requested encoder could not be loaded."""


class MalformedVectorFileError(ValueError):
    """A word-vector source line does not match the declared shape."""


@dataclass
class ExportJob:
    model: str
    input_path: str
    output_path: str
    batch_size: int = 64

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def load_encoder(model_name: str):
    """Resolve a sentence-transformers model into encode(list[str]) -> ndarray."""
    try:
        from sentence_transformers import SentenceTransformer
    except ImportError as exc:
        raise ModelLoadError(
            "sentence-transformers is not installed; install the 'encoders' extra"
        ) from exc
    try:
        model = SentenceTransformer(model_name)
    except Exception as exc:
        raise ModelLoadError(f"could not load model {model_name!r}: {exc}") from exc

    def encode(batch: list[str]) -> np.ndarray:
        return np.asarray(model.encode(batch, batch_size=len(batch),
                                       show_progress_bar=False), dtype=np.float32)

    return encode


def read_lines(path) -> list[str]:
    with open(path, "r", encoding="utf-8") as f:
        lines = [line.rstrip("\n") for line in f]
    if lines and lines[-1] == "":
        lines.pop()  # trailing newline artifact, not an input record
    if not lines:
        raise ValueError(f"input file {path} contains no lines")
    return lines


def export_sentence_embeddings(job: ExportJob, encoder=None) -> int:
    """Embed each input line (empty lines included) and write the STCE file.

    Returns the number of rows written. `encoder` defaults to the
    sentence-transformers model named in the job.
    """
    lines = read_lines(job.input_path)
    if encoder is None:
        encoder = load_encoder(job.model)

    unique = sorted(set(lines))
    index = {text: i for i, text in enumerate(unique)}
    chunks = []
    for start in range(0, len(unique), job.batch_size):
        batch = unique[start:start + job.batch_size]
        out = np.asarray(encoder(batch), dtype=np.float32)
        if out.ndim != 2 or out.shape[0] != len(batch):
            raise ValueError(f"encoder returned shape {out.shape} for {len(batch)} texts")
        chunks.append(out)
    table = np.concatenate(chunks, axis=0)
    rows = table[[index[text] for text in lines]]
    write_stce(rows, job.output_path)
    return rows.shape[0]


def export_word_vector_table(source, output_path, vocab_filter=None) -> int:
    """Copy a standard text word-vector file, optionally filtered to a vocabulary.

    Returns the number of rows written. The output keeps the source format:
    an "m d_w" header line, then one "word v1 ... v_dw" line per word.
    """
    keep = None if vocab_filter is None else set(vocab_filter)
    rows = []
    with open(source, "r", encoding="utf-8") as f:
        header = f.readline().split()
        if len(header) != 2:
            raise MalformedVectorFileError("line 1: expected an 'm d_w' header")
        m, d_w = int(header[0]), int(header[1])
        for i in range(m):
            line = f.readline()
            if not line:
                raise MalformedVectorFileError(f"line {i + 2}: file ends before {m} declared rows")
            parts = line.split()
            if len(parts) != d_w + 1:
                raise MalformedVectorFileError(
                    f"line {i + 2}: expected {d_w + 1} fields, got {len(parts)}")
            if keep is None or parts[0] in keep:
                rows.append(line.rstrip("\n"))
    if not rows:
        raise ValueError("vocabulary filter matched no words; table would be empty")
    with open(output_path, "w", encoding="utf-8") as f:
        f.write(f"{len(rows)} {d_w}\n")
        for row in rows:
            f.write(row + "\n")
    return len(rows)


def read_vocab_file(path) -> list[str]:
    with open(path, "r", encoding="utf-8") as f:
        return [w.strip() for w in f if w.strip()]
