"""Writer for the STCE embedding container (little-endian).

Layout: magic "STCE", version u32 = 1, n u64, d u64, n*d float32 row-major,
u8 id flag, then (if set) n length-prefixed UTF-8 strings.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"STCE"
VERSION = 1


def write_stce(data: np.ndarray, path, ids: list[str] | None = None) -> None:
    data = np.ascontiguousarray(data, dtype="<f4")
    if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {data.shape}")
    if not np.all(np.isfinite(data)):
        raise ValueError("refusing to write non-finite values")
    n, d = data.shape
    if ids is not None and len(ids) != n:
        raise ValueError(f"{len(ids)} ids for {n} rows")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<QQ", n, d))
        f.write(data.tobytes())
        if ids is None:
            f.write(struct.pack("<B", 0))
        else:
            f.write(struct.pack("<B", 1))
            for s in ids:
                raw = s.encode("utf-8")
                f.write(struct.pack("<I", len(raw)))
                f.write(raw)
