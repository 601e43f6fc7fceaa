"""Build the structural text network: cosine similarities, top-K neighbors,
and the self-looped degree-normalized operator used for graph convolutions.
"""

import numpy as np

from stclust import build_knn_graph, cosine_similarity_matrix, normalize_adjacency

rng = np.random.default_rng(1)
# two semantic groups of "texts" in embedding space
X = np.vstack([
    np.array([5.0, 1.0]) + 0.3 * rng.standard_normal((4, 2)),
    np.array([1.0, 5.0]) + 0.3 * rng.standard_normal((4, 2)),
])

S = cosine_similarity_matrix(X)
print("cosine similarity matrix:")
print(np.round(S, 2))

g = build_knn_graph(S, K=2)
print(f"\nKNN graph with K=2: {g.num_edges} undirected edges")
print("edges:", sorted(g.edge_set()))
print("degrees:", g.degrees())

A_hat = normalize_adjacency(g)
print("\nnormalized operator row sums (not 1 by design; symmetric scaling):")
print(np.round(np.asarray(A_hat.matrix.sum(axis=1)).ravel(), 3))
print("entry (i,j) = (A+I)_ij / sqrt(d~_i d~_j); d~ =", A_hat.degrees_tilde)
