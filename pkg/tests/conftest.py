import numpy as np
import pytest

from stclust.io import EmbeddingMatrix, LabelVector, write_embeddings, write_labels


TOPIC_A = ["stock market rally", "bank interest rates", "market shares fall",
           "economy growth slows", "trade deficit widens", "inflation hits banks",
           "currency market jitters", "bond yields climb", "investors buy stocks",
           "profits beat forecast"]
TOPIC_B = ["team wins final", "player scores goal", "coach praises squad",
           "league title race", "match ends level", "striker signs contract",
           "fans cheer victory", "season opener tonight", "referee halts game",
           "club appoints manager"]


@pytest.fixture
def text_fixture(tmp_path):
    """20 synthetic texts in two topics, with labels."""
    texts = TOPIC_A + TOPIC_B
    labels = [0] * len(TOPIC_A) + [1] * len(TOPIC_B)
    corpus_path = tmp_path / "texts.txt"
    corpus_path.write_text("\n".join(texts) + "\n")
    labels_path = tmp_path / "text_labels.txt"
    write_labels(LabelVector.from_raw(labels), labels_path)
    return corpus_path, labels_path


def make_blob_fixture(tmp_path, seed=0, n=120, d=32, k=3, sep=4.0):
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((k, d)) * sep
    labels = np.repeat(np.arange(k), (n + k - 1) // k)[:n]
    X = (centers[labels] + rng.standard_normal((n, d))).astype(np.float32)
    emb_path = tmp_path / "blobs.stce"
    labels_path = tmp_path / "blob_labels.txt"
    write_embeddings(EmbeddingMatrix(data=X), emb_path)
    write_labels(LabelVector.from_raw(labels), labels_path)
    return emb_path, labels_path


@pytest.fixture
def blob_fixture(tmp_path):
    return make_blob_fixture(tmp_path)
