"""Store and inspect embedding matrices in the STCE binary container.

The container round-trips bit-exactly, so downstream clustering results are
reproducible across machines.
"""

import tempfile
from pathlib import Path

import numpy as np

from stclust import EmbeddingMatrix, read_embeddings, write_embeddings

rng = np.random.default_rng(0)
out = Path(tempfile.mkdtemp()) / "demo.stce"

m = EmbeddingMatrix(
    data=rng.standard_normal((4, 6)).astype(np.float32),
    ids=["news-1", "news-2", "tweet-1", "tweet-2"],
)
write_embeddings(m, out)
print(f"wrote {out} ({out.stat().st_size} bytes)")

loaded = read_embeddings(out)
print(f"read back n={loaded.n}, d={loaded.d}, ids={loaded.ids}")
print("bitwise identical payload:", loaded.data.tobytes() == m.data.tobytes())

# the reader refuses malformed files instead of guessing
bad = out.with_name("bad.stce")
bad.write_bytes(b"XXXX" + bytes(16))
try:
    read_embeddings(bad)
except Exception as exc:
    print(f"malformed file rejected: {type(exc).__name__}: {exc}")
