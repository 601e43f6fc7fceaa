"""Graph autoencoder over the text network: GCN encoder propagating features
through the normalized adjacency, inner-product edge decoder trained with
binary cross-entropy against sampled non-edges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from . import neural
from .graph import NormalizedAdjacency, TextGraph, normalize_adjacency
from .io import EmbeddingMatrix
from .neural import Adam, DivergenceError, NetworkSpec, glorot_uniform


@dataclass
class GcnLayer:
    W: np.ndarray  # [in, out]
    activation: str = "linear"

    def __post_init__(self):
        if self.activation not in ("relu", "linear"):
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.W.ndim != 2:
            raise ValueError("GCN weight must be 2-D")
        if not np.all(np.isfinite(self.W)):
            raise ValueError("GCN weights must be finite")


@dataclass
class GaeModel:
    layers: list[GcnLayer]

    def parameters(self) -> list[np.ndarray]:
        return [l.W for l in self.layers]

    def save(self, path) -> None:
        neural.save_checkpoint(path, {"gcn": self.layers})

    @classmethod
    def load(cls, path) -> "GaeModel":
        def factory(W, b, activation):
            return GcnLayer(W=W, activation=activation)
        return cls(layers=neural.load_checkpoint(path, layer_factory=factory)["gcn"])


def init_gcn(spec: NetworkSpec, rng: np.random.Generator, dtype=np.float32) -> list[GcnLayer]:
    layers = []
    for i, act in enumerate(spec.activations):
        W = glorot_uniform(rng, spec.layer_sizes[i], spec.layer_sizes[i + 1], dtype)
        layers.append(GcnLayer(W=W, activation=act))
    return layers


def _as_array(X) -> np.ndarray:
    if isinstance(X, EmbeddingMatrix):
        return X.data
    return np.asarray(X)


def gcn_forward_all(A_hat: NormalizedAdjacency, X, layers: list[GcnLayer]) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """All layer activations plus the cached A_hat @ H products needed by backward."""
    X = _as_array(X)
    if X.shape[0] != A_hat.n:
        raise ValueError(f"{X.shape[0]} feature rows for {A_hat.n} graph nodes")
    if X.shape[1] != layers[0].W.shape[0]:
        raise ValueError(f"feature width {X.shape[1]} != first layer fan-in {layers[0].W.shape[0]}")
    A = A_hat.matrix
    acts = [X]
    mixed = []  # A_hat @ H^l per layer
    h = X
    for layer in layers:
        ah = A @ h
        mixed.append(ah)
        h = neural.apply_activation(ah @ layer.W, layer.activation)
        acts.append(h)
    return acts, mixed


def gcn_forward(A_hat: NormalizedAdjacency, X, layers: list[GcnLayer]) -> np.ndarray:
    """H^{l+1} = act(A_hat H^l W^l) with H^0 = X; returns the final layer output."""
    acts, _ = gcn_forward_all(A_hat, X, layers)
    return acts[-1]


def gcn_backward(A_hat: NormalizedAdjacency, layers: list[GcnLayer], acts: list[np.ndarray],
                 mixed: list[np.ndarray], out_grad: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    """Gradients of each W plus d/dX, given d(loss)/d(final activation)."""
    A = A_hat.matrix  # symmetric, so A^T @ v == A @ v
    delta = out_grad
    grads: list[np.ndarray] = [None] * len(layers)
    for i in range(len(layers) - 1, -1, -1):
        layer = layers[i]
        if layer.activation == "relu":
            delta = delta * (acts[i + 1] > 0)
        grads[i] = mixed[i].T @ delta
        delta = A @ (delta @ layer.W.T)
    return grads, delta


def sample_negative_pairs(g: TextGraph, count: int, rng: np.random.Generator,
                          max_tries: int = 200) -> np.ndarray:
    """Sample node pairs (i < j) that are not edges, uniformly with replacement."""
    existing = g.edge_set()
    max_pairs = g.n * (g.n - 1) // 2
    if len(existing) >= max_pairs or count == 0:
        return np.empty((0, 2), dtype=np.int64)
    out = np.empty((count, 2), dtype=np.int64)
    filled = 0
    for _ in range(max_tries):
        need = count - filled
        i = rng.integers(0, g.n, size=2 * need)
        j = rng.integers(0, g.n, size=2 * need)
        lo, hi = np.minimum(i, j), np.maximum(i, j)
        for a, b in zip(lo, hi):
            if a == b or (int(a), int(b)) in existing:
                continue
            out[filled] = (a, b)
            filled += 1
            if filled == count:
                return out
    return out[:filled]


def gae_loss(Z: np.ndarray, g: TextGraph, neg_ratio: float = 1.0,
             seed: int = 0) -> tuple[float, np.ndarray]:
    """Mean BCE of logistic(z_i . z_j) over edges (label 1) and sampled
    non-edges (label 0, neg_ratio per positive, seed-deterministic).

    Returns the loss and its gradient with respect to Z. The negative sample
    depends only on (graph, seed), never on Z.
    """
    Z = np.asarray(Z)
    if not np.all(np.isfinite(Z)):
        raise ValueError("latent matrix contains non-finite values")
    if g.num_edges == 0:
        raise ValueError("graph has no edges; nothing to reconstruct")
    pos = g.edges
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0x6E6567])))
    neg = sample_negative_pairs(g, int(round(neg_ratio * pos.shape[0])), rng)

    pairs = np.concatenate([pos, neg], axis=0) if neg.size else pos
    y = np.zeros(pairs.shape[0], dtype=Z.dtype)
    y[:pos.shape[0]] = 1.0
    s = np.einsum("ij,ij->i", Z[pairs[:, 0]], Z[pairs[:, 1]])

    # numerically stable BCE on logits: softplus(s) - y*s
    loss = float(np.mean(np.logaddexp(0.0, s) - y * s))
    p = expit(s)
    coeff = (p - y) / pairs.shape[0]

    dZ = np.zeros_like(Z)
    np.add.at(dZ, pairs[:, 0], coeff[:, None] * Z[pairs[:, 1]])
    np.add.at(dZ, pairs[:, 1], coeff[:, None] * Z[pairs[:, 0]])
    return loss, dZ


def train_stn_gae(X, g: TextGraph, spec: NetworkSpec | None = None, epochs: int = 300,
                  lr: float = 0.002, seed: int = 0, neg_ratio: float = 1.0,
                  dtype=np.float32) -> tuple[GaeModel, np.ndarray, list[float]]:
    """Full-batch Adam training of the GCN encoder against edge reconstruction.

    Returns the trained model, the final latent matrix and per-epoch losses
    (empty when epochs=0). Negative pairs are re-sampled each epoch from a
    seed-derived stream.
    """
    X = _as_array(X).astype(dtype, copy=False)
    if epochs < 0:
        raise ValueError("epochs must be >= 0")
    if spec is None:
        spec = NetworkSpec(layer_sizes=[X.shape[1], 64, 32])
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0x676165])))
    layers = init_gcn(spec, rng, dtype=dtype)
    model = GaeModel(layers=layers)
    A_hat = normalize_adjacency(g)
    opt = Adam(lr)
    params = model.parameters()

    history: list[float] = []
    for epoch in range(epochs):
        acts, mixed = gcn_forward_all(A_hat, X, layers)
        loss, dZ = gae_loss(acts[-1], g, neg_ratio=neg_ratio, seed=seed * 100003 + epoch)
        if not np.isfinite(loss):
            raise DivergenceError(f"non-finite GAE loss at epoch {epoch}", epoch=epoch)
        grads, _ = gcn_backward(A_hat, layers, acts, mixed, dZ)
        opt.step(params, grads)
        history.append(loss)
    Z = gcn_forward(A_hat, X, layers)
    return model, Z, history
