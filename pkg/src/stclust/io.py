"""Embedding matrices, label files, raw-text corpora and baseline feature builders.

The on-disk embedding container is the STCE binary format (little-endian):
magic ``STCE``, version u32, n u64, d u64, then n*d float32 values row-major,
then a u8 id flag, then (if set) n length-prefixed UTF-8 id strings.
"""

from __future__ import annotations

import hashlib
import re
import struct
from dataclasses import dataclass

import numpy as np

_MAGIC = b"STCE"
_VERSION = 1
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


class StceFormatError(ValueError):
    """Base class for malformed STCE files."""


class BadMagicError(StceFormatError):
    """File does not start with the STCE magic."""


class UnsupportedVersionError(StceFormatError):
    """STCE version not understood by this reader."""


class TruncatedPayloadError(StceFormatError):
    """File ends before the header-declared payload is complete."""


class NonFiniteValueError(ValueError):
    """Embedding payload contains NaN or infinite values."""


@dataclass
class EmbeddingMatrix:
    """Row-major n x d float32 matrix, optionally with one text id per row."""

    data: np.ndarray
    ids: list[str] | None = None

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.float32)
        if self.data.ndim != 2:
            raise ValueError(f"embedding data must be 2-D, got shape {self.data.shape}")
        n, d = self.data.shape
        if n < 1 or d < 1:
            raise ValueError(f"embedding matrix must be at least 1x1, got {n}x{d}")
        if not np.all(np.isfinite(self.data)):
            raise NonFiniteValueError("embedding matrix contains NaN or Inf")
        if self.ids is not None:
            self.ids = [str(s) for s in self.ids]
            if len(self.ids) != n:
                raise ValueError(f"{len(self.ids)} ids for {n} rows")
            if len(set(self.ids)) != n:
                raise ValueError("ids are not unique")

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


@dataclass
class LabelVector:
    """Dense ground-truth labels 0..k-1."""

    labels: np.ndarray
    k: int

    @classmethod
    def from_raw(cls, values) -> "LabelVector":
        """Canonicalize arbitrary integer labels to 0..k-1 (sorted value order)."""
        values = np.asarray(values, dtype=np.int64)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("label vector must be a non-empty 1-D sequence")
        if np.any(values < 0):
            raise ValueError("labels must be non-negative")
        uniques, dense = np.unique(values, return_inverse=True)
        return cls(labels=dense.astype(np.int64), k=int(uniques.size))

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.k != len(np.unique(self.labels)):
            raise ValueError("k does not match the number of distinct labels")
        if self.labels.size and self.labels.max() >= self.k:
            raise ValueError("labels are not canonical (expected 0..k-1)")

    @property
    def n(self) -> int:
        return int(self.labels.size)


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric runs."""
    return _TOKEN_RE.findall(text.lower())


@dataclass
class Corpus:
    """Raw short texts with the shared deterministic tokenizer."""

    texts: list[str]

    def __post_init__(self):
        if len(self.texts) == 0:
            raise ValueError("corpus must contain at least one text")

    @property
    def n(self) -> int:
        return len(self.texts)

    def tokenized(self) -> list[list[str]]:
        return [tokenize(t) for t in self.texts]


@dataclass
class WordVectorTable:
    """Pre-trained word vectors: word -> row index into an m x d_w matrix."""

    vocabulary: dict[str, int]
    vectors: np.ndarray

    def __post_init__(self):
        self.vectors = np.ascontiguousarray(self.vectors, dtype=np.float32)
        if self.vectors.ndim != 2:
            raise ValueError("word vectors must form a 2-D matrix")
        if len(self.vocabulary) != self.vectors.shape[0]:
            raise ValueError("vocabulary size does not match vector count")
        if not np.all(np.isfinite(self.vectors)):
            raise NonFiniteValueError("word vector table contains NaN or Inf")

    @property
    def d_w(self) -> int:
        return self.vectors.shape[1]


@dataclass
class AveragedVectors:
    """Word-vector averaging output plus warning counters."""

    embeddings: EmbeddingMatrix
    empty_text_count: int = 0
    oov_token_count: int = 0


# ---------------------------------------------------------------------------
# STCE binary I/O
# ---------------------------------------------------------------------------


def _read_exact(f, count: int, what: str) -> bytes:
    buf = f.read(count)
    if len(buf) != count:
        raise TruncatedPayloadError(f"file ends inside {what} ({len(buf)}/{count} bytes)")
    return buf


def read_embeddings(path) -> EmbeddingMatrix:
    """Read an STCE file; rejects bad magic, truncation and non-finite payloads."""
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != _MAGIC:
            raise BadMagicError(f"expected magic {_MAGIC!r}, got {magic!r}")
        version, = struct.unpack("<I", _read_exact(f, 4, "version"))
        if version != _VERSION:
            raise UnsupportedVersionError(f"unsupported STCE version {version}")
        n, d = struct.unpack("<QQ", _read_exact(f, 16, "shape header"))
        if n < 1 or d < 1:
            raise StceFormatError(f"invalid shape {n}x{d}")
        payload = _read_exact(f, 4 * n * d, "float payload")
        data = np.frombuffer(payload, dtype="<f4").reshape(n, d)
        if not np.all(np.isfinite(data)):
            raise NonFiniteValueError("STCE payload contains NaN or Inf")
        has_ids, = struct.unpack("<B", _read_exact(f, 1, "id flag"))
        if has_ids not in (0, 1):
            raise StceFormatError(f"invalid id flag {has_ids}")
        ids = None
        if has_ids:
            ids = []
            for i in range(n):
                length, = struct.unpack("<I", _read_exact(f, 4, f"id length {i}"))
                ids.append(_read_exact(f, length, f"id string {i}").decode("utf-8"))
        if f.read(1):
            raise StceFormatError("trailing bytes after payload")
    return EmbeddingMatrix(data=data.copy(), ids=ids)


def write_embeddings(m: EmbeddingMatrix, path) -> None:
    """Write an STCE file such that read_embeddings round-trips bit-exactly."""
    data = np.ascontiguousarray(m.data, dtype="<f4")
    if not np.all(np.isfinite(data)):
        raise NonFiniteValueError("refusing to write non-finite embedding matrix")
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<I", _VERSION))
        f.write(struct.pack("<QQ", m.n, m.d))
        f.write(data.tobytes())
        if m.ids is None:
            f.write(struct.pack("<B", 0))
        else:
            f.write(struct.pack("<B", 1))
            for s in m.ids:
                raw = s.encode("utf-8")
                f.write(struct.pack("<I", len(raw)))
                f.write(raw)


def read_embeddings_tsv(path) -> EmbeddingMatrix:
    """Interoperability fallback: tab-separated floats, one row per line."""
    rows = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([float(v) for v in line.split("\t")])
            except ValueError as exc:
                raise StceFormatError(f"line {lineno}: {exc}") from exc
    if not rows:
        raise StceFormatError("TSV file contains no rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise StceFormatError(f"inconsistent row widths {sorted(widths)}")
    return EmbeddingMatrix(data=np.asarray(rows, dtype=np.float32))


def read_labels(path) -> LabelVector:
    """Read a labels file: one non-negative integer per line."""
    values = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                values.append(int(line))
            except ValueError as exc:
                raise ValueError(f"labels file line {lineno}: {line!r} is not an integer") from exc
    return LabelVector.from_raw(values)


def write_labels(labels: LabelVector, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for v in labels.labels:
            f.write(f"{int(v)}\n")


def read_corpus(path) -> Corpus:
    """Read raw texts, one per line (kept verbatim, including empty lines)."""
    with open(path, "r", encoding="utf-8") as f:
        texts = [line.rstrip("\n") for line in f]
    return Corpus(texts=texts)


def read_word_vectors(path) -> WordVectorTable:
    """Read the standard text word-vector format: header "m d_w", then one word per line."""
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().split()
        if len(header) != 2:
            raise ValueError("word-vector file must start with an 'm d_w' header line")
        m, d_w = int(header[0]), int(header[1])
        vocabulary: dict[str, int] = {}
        vectors = np.empty((m, d_w), dtype=np.float32)
        for i in range(m):
            parts = f.readline().split()
            if len(parts) != d_w + 1:
                raise ValueError(f"word-vector line {i + 2}: expected {d_w + 1} fields, got {len(parts)}")
            word = parts[0]
            if word in vocabulary:
                raise ValueError(f"duplicate word {word!r} at line {i + 2}")
            vocabulary[word] = i
            vectors[i] = np.asarray(parts[1:], dtype=np.float32)
    return WordVectorTable(vocabulary=vocabulary, vectors=vectors)


# ---------------------------------------------------------------------------
# Baseline feature builders
# ---------------------------------------------------------------------------


def bow_features(corpus: Corpus, weighting: str = "tfidf") -> EmbeddingMatrix:
    """Bag-of-words features with columns ordered by first token occurrence.

    binary: 0/1 term presence.  tfidf: tf * (ln((1+n)/(1+df)) + 1) with
    L2 row normalization; all-empty rows stay zero.
    """
    if weighting not in ("binary", "tfidf"):
        raise ValueError(f"unknown weighting {weighting!r}")
    token_lists = corpus.tokenized()
    vocab: dict[str, int] = {}
    for tokens in token_lists:
        for t in tokens:
            if t not in vocab:
                vocab[t] = len(vocab)
    if not vocab:
        raise ValueError("corpus has no tokens at all")

    n, v = corpus.n, len(vocab)
    counts = np.zeros((n, v), dtype=np.float64)
    for i, tokens in enumerate(token_lists):
        for t in tokens:
            counts[i, vocab[t]] += 1.0

    if weighting == "binary":
        out = (counts > 0).astype(np.float32)
    else:
        df = (counts > 0).sum(axis=0)
        idf = np.log((1.0 + n) / (1.0 + df)) + 1.0
        tfidf = counts * idf
        norms = np.linalg.norm(tfidf, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        out = (tfidf / norms).astype(np.float32)
    return EmbeddingMatrix(data=out)


def _oov_vector(oov_seed: int, token: str, d_w: int) -> np.ndarray:
    # Stable across runs and platforms: key the stream off a digest, not hash().
    digest = hashlib.sha256(f"{oov_seed}:{token}".encode("utf-8")).digest()
    rng = np.random.Generator(np.random.PCG64(int.from_bytes(digest[:8], "little")))
    return rng.uniform(-0.25, 0.25, size=d_w).astype(np.float32)


def average_word_vectors(corpus: Corpus, table: WordVectorTable, oov_seed: int = 0) -> AveragedVectors:
    """Average the word vectors of each text's tokens.

    OOV tokens get a deterministic pseudo-random vector in [-0.25, 0.25]^d_w
    keyed by (oov_seed, token); token-free texts become zero rows and are
    counted in the result metadata.
    """
    d_w = table.d_w
    out = np.zeros((corpus.n, d_w), dtype=np.float64)
    oov_cache: dict[str, np.ndarray] = {}
    empty = 0
    oov_total = 0
    for i, tokens in enumerate(corpus.tokenized()):
        if not tokens:
            empty += 1
            continue
        acc = np.zeros(d_w, dtype=np.float64)
        for t in tokens:
            idx = table.vocabulary.get(t)
            if idx is None:
                oov_total += 1
                if t not in oov_cache:
                    oov_cache[t] = _oov_vector(oov_seed, t, d_w)
                acc += oov_cache[t]
            else:
                acc += table.vectors[idx]
        out[i] = acc / len(tokens)
    emb = EmbeddingMatrix(data=out.astype(np.float32))
    return AveragedVectors(embeddings=emb, empty_text_count=empty, oov_token_count=oov_total)
