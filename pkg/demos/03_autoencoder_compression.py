"""Compress high-dimensional embeddings with a stacked autoencoder, then cluster.

The bottleneck keeps the cluster geometry while dropping most of the ambient
dimensionality, which is the first trainable pipeline.
"""

import numpy as np

from stclust import NetworkSpec, clustering_accuracy, encode, kmeans, nmi, train_autoencoder

rng = np.random.default_rng(0)
centers = rng.standard_normal((3, 64)) * 5
labels = np.repeat(np.arange(3), 80)
X = (centers[labels] + rng.standard_normal((240, 64))).astype(np.float32)

spec = NetworkSpec(layer_sizes=[64, 128, 64, 10])  # d:...:z, ReLU hidden, linear bottleneck
model, history = train_autoencoder(X, spec, epochs=20, batch_size=32, lr=1e-3, seed=0)
print("reconstruction loss per epoch (first 5):", [round(v, 3) for v in history[:5]])
print("final loss:", round(history[-1], 4))

Z = encode(model, X)
print("latent shape:", Z.shape)

for name, features in (("raw 64-d", X), ("latent 10-d", Z)):
    result = kmeans(features, 3, restarts=10, seed=0)
    print(f"k-means on {name}: ACC {clustering_accuracy(labels, result.labels):.3f} "
          f"NMI {nmi(labels, result.labels):.3f}")
