"""Stacked autoencoder: mirror-image encoder/decoder MLP trained on
reconstruction error, exposing encode() for downstream clustering.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import neural
from .io import EmbeddingMatrix
from .neural import Adam, DenseLayer, DivergenceError, NetworkSpec


@dataclass
class AutoencoderModel:
    encoder: list[DenseLayer]
    decoder: list[DenseLayer]
    tied: bool = False  # decoder weights are transposed views of the encoder's

    def __post_init__(self):
        enc_sizes = _stack_sizes(self.encoder)
        dec_sizes = _stack_sizes(self.decoder)
        if dec_sizes != enc_sizes[::-1]:
            raise ValueError(f"decoder sizes {dec_sizes} are not the reverse of encoder sizes {enc_sizes}")
        if self.z >= self.d:
            raise ValueError(f"latent dim {self.z} must be smaller than input dim {self.d}")

    @property
    def d(self) -> int:
        return self.encoder[0].W.shape[0]

    @property
    def z(self) -> int:
        return self.encoder[-1].W.shape[1]

    def parameters(self) -> list[np.ndarray]:
        """Trainable tensors; with tied weights the decoder contributes only biases."""
        if self.tied:
            return neural.network_parameters(self.encoder) + [l.b for l in self.decoder]
        return neural.network_parameters(self.encoder) + neural.network_parameters(self.decoder)

    def save(self, path) -> None:
        neural.save_checkpoint(path, {"encoder": self.encoder, "decoder": self.decoder})

    @classmethod
    def load(cls, path) -> "AutoencoderModel":
        sections = neural.load_checkpoint(path)
        return cls(encoder=sections["encoder"], decoder=sections["decoder"])


def _stack_sizes(layers: list[DenseLayer]) -> list[int]:
    return [layers[0].W.shape[0]] + [l.W.shape[1] for l in layers]


def build_autoencoder(spec: NetworkSpec, rng: np.random.Generator, dtype=np.float32) -> AutoencoderModel:
    """Encoder from spec.layer_sizes, decoder mirrored; ReLU hidden layers,
    linear bottleneck and reconstruction layers.

    With spec.tied_decoder the decoder weight matrices are live transposed
    views of the encoder's, so the encoder update moves both directions.
    """
    encoder = neural.init_network(spec, rng, dtype=dtype)
    mirror = NetworkSpec(layer_sizes=spec.layer_sizes[::-1])
    decoder = neural.init_network(mirror, rng, dtype=dtype)
    if spec.tied_decoder:
        for i, layer in enumerate(decoder):
            layer.W = encoder[len(encoder) - 1 - i].W.T
    return AutoencoderModel(encoder=encoder, decoder=decoder, tied=spec.tied_decoder)


def _as_array(X) -> np.ndarray:
    if isinstance(X, EmbeddingMatrix):
        return X.data
    return np.asarray(X)


def train_autoencoder(X, spec: NetworkSpec, epochs: int = 15, batch_size: int = 64,
                      lr: float = 0.001, seed: int = 0,
                      dtype=np.float32) -> tuple[AutoencoderModel, list[float]]:
    """Minibatch Adam training on MSE reconstruction; returns per-epoch mean loss.

    Shuffling, initialization and therefore the whole loss history are
    deterministic functions of the seed. The final short batch is kept.
    """
    X = _as_array(X).astype(dtype, copy=False)
    n = X.shape[0]
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    if spec.layer_sizes[0] != X.shape[1]:
        raise ValueError(f"spec input size {spec.layer_sizes[0]} != data dim {X.shape[1]}")

    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0x_AE])))
    model = build_autoencoder(spec, rng, dtype=dtype)
    params = model.parameters()
    opt = Adam(lr)

    history: list[float] = []
    for epoch in range(epochs):
        order = rng.permutation(n)
        sq_err_sum = 0.0
        for start in range(0, n, batch_size):
            batch = order[start:start + batch_size]
            Xb = X[batch]
            # divergence surfaces as a non-finite loss or gradient, both
            # checked explicitly, so transient FP warnings carry no signal
            with np.errstate(over="ignore", invalid="ignore"):
                enc_acts = neural.forward(model.encoder, Xb)
                dec_acts = neural.forward(model.decoder, enc_acts[-1])
                loss, grad = neural.mse_loss(Xb, dec_acts[-1])
                if not np.isfinite(loss):
                    raise DivergenceError(f"non-finite reconstruction loss at epoch {epoch}", epoch=epoch)
                sq_err_sum += loss * Xb.size
                dec_grads, d_latent = neural.backward(model.decoder, dec_acts, grad)
                enc_grads, _ = neural.backward(model.encoder, enc_acts, d_latent)
            if model.tied:
                # fold the decoder weight gradient into its encoder twin
                L = len(model.encoder)
                enc_grads = [(dW + dec_grads[L - 1 - i][0].T, db)
                             for i, (dW, db) in enumerate(enc_grads)]
                flat = [g for pair in enc_grads for g in pair] + [db for _, db in dec_grads]
            else:
                flat = [g for pair in enc_grads for g in pair] + [g for pair in dec_grads for g in pair]
            opt.step(params, flat)
        epoch_loss = sq_err_sum / (n * X.shape[1])
        if not np.isfinite(epoch_loss):
            raise DivergenceError(f"non-finite epoch loss at epoch {epoch}", epoch=epoch)
        history.append(float(epoch_loss))
    return model, history


def encode(model: AutoencoderModel, X) -> np.ndarray:
    """Map inputs to the bottleneck representation."""
    X = _as_array(X)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError(f"expected a non-empty 2-D input, got shape {X.shape}")
    return neural.forward(model.encoder, X)[-1]


def reconstruct(model: AutoencoderModel, X) -> np.ndarray:
    X = _as_array(X)
    return neural.forward(model.decoder, encode(model, X))[-1]


def reconstruction_loss(model: AutoencoderModel, X) -> float:
    X = _as_array(X)
    loss, _ = neural.mse_loss(X, reconstruct(model, X))
    return loss
