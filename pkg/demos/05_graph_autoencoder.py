"""Train the graph autoencoder on a network whose structure contradicts the
node features: the latent follows the edges, not the noise.
"""

import numpy as np

from stclust import NetworkSpec, TextGraph, clustering_accuracy, kmeans, train_stn_gae

# two disconnected 5-cliques; features are pure noise
edges = []
for base in (0, 5):
    for i in range(5):
        for j in range(i + 1, 5):
            edges.append((base + i, base + j))
g = TextGraph(n=10, edges=np.array(edges))
labels = np.repeat([0, 1], 5)

rng = np.random.default_rng(100)
X = rng.standard_normal((10, 24)).astype(np.float32)

model, Z, history = train_stn_gae(X, g, NetworkSpec(layer_sizes=[24, 64, 32]),
                                  epochs=300, lr=0.002, seed=0)
print(f"edge-reconstruction BCE: {history[0]:.3f} -> {history[-1]:.5f}")

result = kmeans(Z, 2, restarts=10, seed=0)
print("k-means on the 32-d GAE latent recovers the cliques:",
      f"ACC = {clustering_accuracy(labels, result.labels):.1f}")
print("(with random features alone this split would be chance level)")
