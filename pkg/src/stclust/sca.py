"""Soft-cluster-assignment fine-tuning: Student-t soft assignments over the
autoencoder latent, a sharpened target distribution, and KL self-training of
the encoder weights together with the cluster centroids.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import neural
from .autoencoder import AutoencoderModel, encode
from .cluster import clustering_accuracy, kmeans, nmi
from .io import EmbeddingMatrix
from .neural import DivergenceError, SgdMomentum


def soft_assign(Z: np.ndarray, U: np.ndarray) -> np.ndarray:
    """Student-t (one degree of freedom) similarity of each sample to each
    centroid, normalized per row: q_ij = (1+|z_i-u_j|^2)^-1 / sum_j'."""
    Z = np.asarray(Z)
    U = np.asarray(U)
    if U.shape[0] < 2:
        raise ValueError("need at least two centroids")
    w = 1.0 / (1.0 + _sq_dists(Z, U))
    return w / w.sum(axis=1, keepdims=True)


def target_distribution(Q: np.ndarray) -> np.ndarray:
    """Square each assignment, normalize by soft cluster frequency, renormalize rows."""
    f = Q.sum(axis=0)
    w = (Q * Q) / f
    return w / w.sum(axis=1, keepdims=True)


def kl_loss(P: np.ndarray, Q: np.ndarray) -> tuple[float, np.ndarray]:
    """KL(P || Q) = sum_ij p_ij ln(p_ij / q_ij), with P held constant.

    Returns the loss and dL/dQ = -P/Q.
    """
    if P.shape != Q.shape:
        raise ValueError(f"shape mismatch {P.shape} vs {Q.shape}")
    loss = float(np.sum(P * np.log(P / Q)))
    return loss, -P / Q


def _sq_dists(Z: np.ndarray, U: np.ndarray) -> np.ndarray:
    d2 = (Z * Z).sum(axis=1)[:, None] - 2.0 * (Z @ U.T) + (U * U).sum(axis=1)[None, :]
    return np.maximum(d2, 0.0)


def sca_gradients(Z: np.ndarray, U: np.ndarray, P: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """KL(P || soft_assign(Z, U)) and its gradients with respect to Z and U."""
    d2 = _sq_dists(Z, U)
    w = 1.0 / (1.0 + d2)
    s = w.sum(axis=1, keepdims=True)
    Q = w / s

    loss = float(np.sum(P * np.log(P / Q)))
    dQ = -P / Q
    # back through the row normalization, then w = (1+d2)^-1
    dW = (dQ - (dQ * Q).sum(axis=1, keepdims=True)) / s
    dD2 = -dW * w * w
    rowsum = dD2.sum(axis=1, keepdims=True)
    colsum = dD2.sum(axis=0)[:, None]
    dZ = 2.0 * (Z * rowsum - dD2 @ U)
    dU = 2.0 * (U * colsum - dD2.T @ Z)
    return loss, dZ, dU


@dataclass
class FinetuneEpoch:
    epoch: int
    kl_loss: float
    label_change_fraction: float | None
    min_cluster_mass: float
    acc: float | None = None
    nmi: float | None = None

    def to_dict(self) -> dict:
        out = {
            "epoch": self.epoch,
            "kl_loss": self.kl_loss,
            "label_change_fraction": self.label_change_fraction,
            "min_cluster_mass": self.min_cluster_mass,
        }
        if self.acc is not None:
            out["acc"] = self.acc
            out["nmi"] = self.nmi
        return out


@dataclass
class FinetuneResult:
    labels: np.ndarray
    Z: np.ndarray
    centroids: np.ndarray
    history: list[FinetuneEpoch]
    epochs_run: int


def _as_array(X) -> np.ndarray:
    if isinstance(X, EmbeddingMatrix):
        return X.data
    return np.asarray(X)


def finetune_sca(model: AutoencoderModel, X, k: int, lr: float = 0.01,
                 momentum: float = 0.9, batch_size: int = 64, max_epochs: int = 100,
                 tol: float = 0.001, seed: int = 0, true_labels=None,
                 log_path=None) -> FinetuneResult:
    """Jointly fine-tune the encoder and centroids by minimizing KL(P || Q).

    Centroids start from best-of-10 k-means on the pretrained latent. Each
    epoch recomputes the target distribution P from the full-dataset Q, then
    runs minibatch SGD-momentum on encoder weights and centroids (the decoder
    stays frozen and unused). Stops when the fraction of samples whose argmax
    assignment changed since the previous epoch drops below tol.
    """
    if k < 2:
        raise ValueError("need k >= 2 clusters")
    X = _as_array(X).astype(model.encoder[0].W.dtype, copy=False)
    n = X.shape[0]
    if true_labels is not None:
        true_labels = np.asarray(true_labels)

    shuffle_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0x736361])))
    Z = encode(model, X)
    init = kmeans(Z, k, restarts=10, seed=seed)
    U = init.centroids.astype(X.dtype)

    params = neural.network_parameters(model.encoder) + [U]
    opt = SgdMomentum(lr, momentum)

    history: list[FinetuneEpoch] = []
    prev_labels = init.labels
    log_file = open(log_path, "w", encoding="utf-8") if log_path else None
    epochs_run = 0
    try:
        for epoch in range(max_epochs + 1):
            Z = encode(model, X)
            Q = soft_assign(Z, U)
            P = target_distribution(Q)
            labels = Q.argmax(axis=1)
            loss = float(np.sum(P * np.log(P / Q)))
            if not np.isfinite(loss):
                raise DivergenceError(f"non-finite KL loss at epoch {epoch}", epoch=epoch)
            change = float(np.mean(labels != prev_labels)) if epoch > 0 else None
            entry = FinetuneEpoch(
                epoch=epoch,
                kl_loss=loss,
                label_change_fraction=change,
                min_cluster_mass=float(Q.sum(axis=0).min()),
            )
            if true_labels is not None:
                entry.acc = clustering_accuracy(true_labels, labels)
                entry.nmi = nmi(true_labels, labels)
            history.append(entry)
            if log_file:
                log_file.write(json.dumps(entry.to_dict(), sort_keys=True) + "\n")

            if epoch == max_epochs or (change is not None and change < tol):
                break
            prev_labels = labels
            epochs_run = epoch + 1

            order = shuffle_rng.permutation(n)
            for start in range(0, n, batch_size):
                batch = order[start:start + batch_size]
                acts = neural.forward(model.encoder, X[batch])
                _, dZb, dU = sca_gradients(acts[-1], U, P[batch])
                scale = 1.0 / batch.size
                enc_grads, _ = neural.backward(model.encoder, acts, (scale * dZb).astype(X.dtype))
                flat = [g for pair in enc_grads for g in pair] + [(scale * dU).astype(X.dtype)]
                opt.step(params, flat)
    finally:
        if log_file:
            log_file.close()

    return FinetuneResult(labels=labels, Z=Z, centroids=U, history=history,
                          epochs_run=epochs_run)
