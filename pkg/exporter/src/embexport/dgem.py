"""Writer for the binary embedding-store format the training toolkit reads.

The format is the consumer's contract, reproduced here independently:
``<path>.emb`` is little-endian magic ``DGEM``, version u16 = 1, kind u8
(0 text, 1 image), reserved u8 = 0, dim u32, count u64, then count * dim
float32 values row-major; ``<path>.ids`` is UTF-8 with one id per line,
line i naming row i.

Rows are validated the way the consumer validates them (finite, no
zero-norm rows, unique non-empty ids) so exports always load cleanly.
"""

from __future__ import annotations

import os
import struct

import numpy as np

MAGIC = b"DGEM"
VERSION = 1
_HEADER = struct.Struct("<4sHBBIQ")
_KIND_CODES = {"text": 0, "image": 1}
ZERO_NORM_EPS = 1e-12


class DgemWriteError(Exception):
    """Raised when rows or ids would not pass the consumer's validation."""


def write_dgem(rows: np.ndarray, ids: list[str], kind: str, path: str | os.PathLike) -> None:
    """Write ``<path>.emb`` and ``<path>.ids``; byte-identical per input."""
    if kind not in _KIND_CODES:
        raise DgemWriteError(f"unknown kind {kind!r}")
    rows = np.asarray(rows, dtype=np.float32)
    if rows.ndim != 2 or rows.shape[1] < 1:
        raise DgemWriteError(f"rows must be 2-D with positive dim, got {rows.shape}")
    if len(ids) != rows.shape[0]:
        raise DgemWriteError(f"{len(ids)} ids for {rows.shape[0]} rows")
    seen: set[str] = set()
    for i, id_ in enumerate(ids):
        if not id_ or "\n" in id_:
            raise DgemWriteError(f"invalid id at row {i}: {id_!r}")
        if id_ in seen:
            raise DgemWriteError(f"duplicate id {id_!r}")
        seen.add(id_)
    if not np.all(np.isfinite(rows)):
        bad = int(np.argwhere(~np.isfinite(rows).all(axis=1))[0, 0])
        raise DgemWriteError(f"non-finite embedding in row {bad} ({ids[bad]!r})")
    if rows.shape[0]:
        norms = np.linalg.norm(rows.astype(np.float64), axis=1)
        if np.any(norms <= ZERO_NORM_EPS):
            bad = int(np.argmin(norms))
            raise DgemWriteError(f"zero-norm embedding in row {bad} ({ids[bad]!r})")

    path = os.fspath(path)
    header = _HEADER.pack(MAGIC, VERSION, _KIND_CODES[kind], 0,
                          rows.shape[1], rows.shape[0])
    with open(path + ".emb", "wb") as f:
        f.write(header)
        f.write(rows.astype("<f4").tobytes(order="C"))
    with open(path + ".ids", "w", encoding="utf-8") as f:
        for id_ in ids:
            f.write(id_ + "\n")
