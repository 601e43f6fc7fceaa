"""Classic baseline features for short texts: bag-of-words and word-vector averages.

These are the representations the trainable pipelines are compared against.
"""

import numpy as np

from stclust import Corpus, WordVectorTable, average_word_vectors, bow_features

corpus = Corpus([
    "the market rallied today",
    "stocks fell on trade fears",
    "the team won the final",
    "a late goal won the match",
])

binary = bow_features(corpus, weighting="binary")
tfidf = bow_features(corpus, weighting="tfidf")
print(f"vocabulary size: {binary.d}")
print("binary row 0:", binary.data[0])
print("tfidf  row 0:", np.round(tfidf.data[0], 3), "| L2 norm:", np.linalg.norm(tfidf.data[0]))

# word-vector averaging with deterministic out-of-vocabulary handling
table = WordVectorTable(
    vocabulary={"market": 0, "stocks": 1, "team": 2, "goal": 3},
    vectors=np.array([[1, 0], [0.9, 0.1], [0, 1], [0.1, 0.9]], dtype=np.float32),
)
result = average_word_vectors(corpus, table, oov_seed=42)
print("\naveraged vectors (2-d word space):")
print(np.round(result.embeddings.data, 3))
print(f"out-of-vocabulary tokens: {result.oov_token_count} "
      f"(each mapped to a seed-stable random vector in [-0.25, 0.25]^2)")
