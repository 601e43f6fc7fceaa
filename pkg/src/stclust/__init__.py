"""stclust: fine-tune pre-computed short-text embeddings for clustering.

Three pipelines over any embedding matrix: plain autoencoder compression,
structural text-network graph autoencoder, and soft-cluster-assignment
autoencoder fine-tuning, evaluated with K-means, clustering accuracy and NMI.
"""

from .autoencoder import AutoencoderModel, build_autoencoder, encode, train_autoencoder
from .cluster import (
    ClusterResult,
    EvaluationReport,
    clustering_accuracy,
    evaluate_pipeline,
    kmeans,
    nmi,
)
from .gae import GaeModel, GcnLayer, gae_loss, gcn_forward, train_stn_gae
from .graph import (
    NormalizedAdjacency,
    TextGraph,
    build_knn_graph,
    cosine_similarity_matrix,
    knn_graph_from_embeddings,
    normalize_adjacency,
)
from .io import (
    Corpus,
    EmbeddingMatrix,
    LabelVector,
    WordVectorTable,
    average_word_vectors,
    bow_features,
    read_embeddings,
    read_labels,
    write_embeddings,
)
from .neural import Adam, DenseLayer, DivergenceError, NetworkSpec, SgdMomentum
from .pipeline import PipelineConfig, run_pipeline, run_sweep
from .sca import finetune_sca, kl_loss, soft_assign, target_distribution

__version__ = "0.1.0"

__all__ = [
    "Adam",
    "AutoencoderModel",
    "ClusterResult",
    "Corpus",
    "DenseLayer",
    "DivergenceError",
    "EmbeddingMatrix",
    "EvaluationReport",
    "GaeModel",
    "GcnLayer",
    "LabelVector",
    "NetworkSpec",
    "NormalizedAdjacency",
    "PipelineConfig",
    "SgdMomentum",
    "TextGraph",
    "WordVectorTable",
    "average_word_vectors",
    "bow_features",
    "build_autoencoder",
    "build_knn_graph",
    "clustering_accuracy",
    "cosine_similarity_matrix",
    "encode",
    "evaluate_pipeline",
    "finetune_sca",
    "gae_loss",
    "gcn_forward",
    "kl_loss",
    "kmeans",
    "knn_graph_from_embeddings",
    "nmi",
    "normalize_adjacency",
    "read_embeddings",
    "read_labels",
    "run_pipeline",
    "run_sweep",
    "soft_assign",
    "target_distribution",
    "train_autoencoder",
    "train_stn_gae",
    "write_embeddings",
]
