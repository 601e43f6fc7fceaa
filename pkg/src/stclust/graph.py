"""Structural text network: cosine similarity, top-K neighbor selection and the
symmetric degree-normalized propagation operator used by the graph autoencoder.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .io import EmbeddingMatrix


@dataclass
class TextGraph:
    """Undirected simple graph over n text nodes.

    edges is an [m, 2] array of node pairs with i < j, lexicographically
    sorted, without duplicates or self-loops.
    """

    n: int
    edges: np.ndarray
    k: int = 0  # neighbors-per-node used during construction, 0 if unknown

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if self.n < 1:
            raise ValueError("graph needs at least one node")
        if self.edges.size:
            if self.edges.min() < 0 or self.edges.max() >= self.n:
                raise ValueError("edge endpoint out of range")
            if np.any(self.edges[:, 0] >= self.edges[:, 1]):
                raise ValueError("edges must be canonical (i < j)")
            order = np.lexsort((self.edges[:, 1], self.edges[:, 0]))
            self.edges = self.edges[order]
            if np.any(np.all(np.diff(self.edges, axis=0) == 0, axis=1)):
                raise ValueError("duplicate edges")

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n).astype(np.int64)

    def adjacency(self) -> sp.csr_matrix:
        """Symmetric 0/1 adjacency without self-loops."""
        if self.edges.size == 0:
            return sp.csr_matrix((self.n, self.n), dtype=np.float64)
        i = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        j = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        data = np.ones(i.size, dtype=np.float64)
        return sp.csr_matrix((data, (i, j)), shape=(self.n, self.n))

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(a), int(b)) for a, b in self.edges}

    def save_edge_list(self, path) -> None:
        """Write the sorted canonical "i j" edge list for external inspection."""
        with open(path, "w", encoding="utf-8") as f:
            for a, b in self.edges:
                f.write(f"{int(a)} {int(b)}\n")


@dataclass
class NormalizedAdjacency:
    """The self-looped, symmetrically degree-normalized operator in CSR form."""

    matrix: sp.csr_matrix
    degrees_tilde: np.ndarray  # 1 + degree(i)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


def _as_array(X) -> np.ndarray:
    if isinstance(X, EmbeddingMatrix):
        return X.data
    return np.asarray(X)


def cosine_similarity_matrix(X) -> np.ndarray:
    """Dense symmetric cosine similarity with unit diagonal."""
    X = _as_array(X)
    norms = np.linalg.norm(X.astype(np.float64, copy=False), axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ValueError(f"row {int(zero[0])} has zero norm; cosine similarity undefined")
    Xn = X / norms[:, None].astype(X.dtype, copy=False)
    S = Xn @ Xn.T
    S = (S + S.T) / 2.0
    np.clip(S, -1.0, 1.0, out=S)
    np.fill_diagonal(S, 1.0)
    return S


def _topk_rows(S_rows: np.ndarray, row_offset: int, K: int) -> np.ndarray:
    """Top-K column indices per row, excluding self, ties to the lower index."""
    out = np.empty((S_rows.shape[0], K), dtype=np.int64)
    for r in range(S_rows.shape[0]):
        row = S_rows[r].copy()
        row[row_offset + r] = -np.inf
        # stable sort on the negated row: equal similarities keep index order
        out[r] = np.argsort(-row, kind="stable")[:K]
    return out


def _edges_from_neighbors(neighbors: np.ndarray) -> np.ndarray:
    n, K = neighbors.shape
    src = np.repeat(np.arange(n, dtype=np.int64), K)
    dst = neighbors.ravel()
    lo = np.minimum(src, dst)
    hi = np.maximum(src, dst)
    return np.unique(np.stack([lo, hi], axis=1), axis=0)


def build_knn_graph(S: np.ndarray, K: int) -> TextGraph:
    """Connect each node to its K most similar peers, then OR-symmetrize."""
    S = np.asarray(S)
    n = S.shape[0]
    if S.ndim != 2 or S.shape[1] != n:
        raise ValueError("S must be a square similarity matrix")
    if not 1 <= K < n:
        raise ValueError(f"need 1 <= K < n, got K={K}, n={n}")
    neighbors = _topk_rows(S, 0, K)
    return TextGraph(n=n, edges=_edges_from_neighbors(neighbors), k=K)


def knn_graph_from_embeddings(X, K: int, block_size: int = 2048) -> TextGraph:
    """build_knn_graph without materializing the full similarity matrix.

    Computes similarity rows block by block; the edge set is identical to
    build_knn_graph(cosine_similarity_matrix(X), K).
    """
    X = _as_array(X)
    n = X.shape[0]
    if not 1 <= K < n:
        raise ValueError(f"need 1 <= K < n, got K={K}, n={n}")
    norms = np.linalg.norm(X.astype(np.float64, copy=False), axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ValueError(f"row {int(zero[0])} has zero norm; cosine similarity undefined")
    Xn = X / norms[:, None].astype(X.dtype, copy=False)
    chunks = []
    for start in range(0, n, block_size):
        stop = min(start + block_size, n)
        # same symmetrized entries as the dense path: ((S + S.T)/2) rows
        S_block = (Xn[start:stop] @ Xn.T + (Xn @ Xn[start:stop].T).T) / 2.0
        np.clip(S_block, -1.0, 1.0, out=S_block)
        chunks.append(_topk_rows(S_block, start, K))
    neighbors = np.concatenate(chunks, axis=0)
    return TextGraph(n=n, edges=_edges_from_neighbors(neighbors), k=K)


def normalize_adjacency(g: TextGraph) -> NormalizedAdjacency:
    """A_hat = D~^{-1/2} (A + I) D~^{-1/2} with d~_i = 1 + degree(i)."""
    A_tilde = g.adjacency().tolil()
    A_tilde.setdiag(1.0)
    A_tilde = A_tilde.tocsr()
    d_tilde = (1 + g.degrees()).astype(np.float64)
    inv_sqrt = 1.0 / np.sqrt(d_tilde)
    D = sp.diags(inv_sqrt)
    A_hat = (D @ A_tilde @ D).tocsr()
    return NormalizedAdjacency(matrix=A_hat, degrees_tilde=d_tilde)
