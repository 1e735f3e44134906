"""Embedding stores: bit-exact binary persistence and the shared cosine kernel.

Embeddings come from frozen encoders and are stored as float32 on disk
(the precision encoders natively export) but widened to float64 for all
computation so that gradient checks stay tight.

On-disk layout (little-endian) for ``<path>.emb``:

    magic    4 bytes  b"DGEM"
    version  u16      1
    kind     u8       0 = text, 1 = image
    reserved u8       0
    dim      u32
    count    u64
    rows     count * dim float32, row-major

``<path>.ids`` is UTF-8 text, one id per line; line i names row i.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"DGEM"
VERSION = 1
_HEADER = struct.Struct("<4sHBBIQ")

KIND_TEXT = "text"
KIND_IMAGE = "image"
_KIND_CODES = {KIND_TEXT: 0, KIND_IMAGE: 1}
_KIND_NAMES = {0: KIND_TEXT, 1: KIND_IMAGE}

# Rows with a norm at or below this are considered zero vectors and rejected.
ZERO_NORM_EPS = 1e-12


class StoreError(Exception):
    """Raised for malformed store files or invariant violations."""


class StoreFormatError(StoreError):
    """Raised when on-disk bytes do not match the expected layout."""


def cosine_similarity(a, b) -> float:
    """Cosine similarity of two nonzero vectors, clamped to [-1, 1].

    The clamp guards against rounding pushing |cos| over 1, which would
    leak outside the guaranteed [0, 2] range of the cosine-distance losses.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na <= ZERO_NORM_EPS or nb <= ZERO_NORM_EPS:
        raise ValueError("cosine similarity undefined for zero-norm input")
    return float(np.clip(float(a @ b) / (na * nb), -1.0, 1.0))


def _validate_rows(rows: np.ndarray, context: str) -> None:
    if not np.all(np.isfinite(rows)):
        bad = int(np.argwhere(~np.isfinite(rows).all(axis=1))[0, 0])
        raise StoreError(f"{context}: non-finite entry in row {bad}")
    if rows.shape[0]:
        norms = np.linalg.norm(rows, axis=1)
        if np.any(norms <= ZERO_NORM_EPS):
            bad = int(np.argmin(norms))
            raise StoreError(f"{context}: zero-norm row {bad}")


@dataclass(frozen=True)
class EmbeddingMatrix:
    """A count x dim block of embeddings of one kind (text or image).

    ``rows`` is always float64 in memory; writing narrows to float32.
    """

    rows: np.ndarray
    kind: str = KIND_TEXT

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        if rows.ndim != 2:
            raise StoreError(f"rows must be 2-D, got shape {rows.shape}")
        if rows.shape[1] < 1:
            raise StoreError("dim must be positive")
        if self.kind not in _KIND_CODES:
            raise StoreError(f"unknown kind {self.kind!r}")
        rows = np.ascontiguousarray(rows)
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        _validate_rows(rows, "embedding matrix")

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    @property
    def count(self) -> int:
        return self.rows.shape[0]


@dataclass(frozen=True)
class EmbeddingStore:
    """An EmbeddingMatrix plus the unique ids naming its rows."""

    matrix: EmbeddingMatrix
    ids: tuple[str, ...]

    def __post_init__(self):
        ids = tuple(self.ids)
        object.__setattr__(self, "ids", ids)
        if len(ids) != self.matrix.count:
            raise StoreError(
                f"id count {len(ids)} != row count {self.matrix.count}"
            )
        seen = set()
        for i in ids:
            if "\n" in i or not i:
                raise StoreError(f"invalid id {i!r}")
            if i in seen:
                raise StoreError(f"duplicate id {i!r}")
            seen.add(i)
        object.__setattr__(self, "_index", {v: k for k, v in enumerate(ids)})

    @property
    def dim(self) -> int:
        return self.matrix.dim

    @property
    def count(self) -> int:
        return self.matrix.count

    def row(self, id_: str) -> np.ndarray:
        idx = self._index.get(id_)
        if idx is None:
            raise KeyError(id_)
        return self.matrix.rows[idx]

    def __contains__(self, id_: str) -> bool:
        return id_ in self._index


@dataclass(frozen=True)
class AnchorSet:
    """Reference caption embeddings, optionally paired with image embeddings.

    When images are present they must align row-for-row with the captions:
    same count, same dim, same ids in the same order.
    """

    captions: EmbeddingStore
    images: EmbeddingStore | None = None

    def __post_init__(self):
        if self.captions.matrix.kind != KIND_TEXT:
            raise StoreError("anchor captions must be a text store")
        if self.images is not None:
            if self.images.matrix.kind != KIND_IMAGE:
                raise StoreError("anchor images must be an image store")
            if self.images.count != self.captions.count:
                raise StoreError(
                    f"anchor image count {self.images.count} != "
                    f"caption count {self.captions.count}"
                )
            if self.images.dim != self.captions.dim:
                raise StoreError("anchor image dim != caption dim")
            if self.images.ids != self.captions.ids:
                raise StoreError("anchor image ids do not align with captions")

    @property
    def m(self) -> int:
        return self.captions.count

    @property
    def dim(self) -> int:
        return self.captions.dim

    def anchor_rows(self, use_images: bool) -> np.ndarray:
        """The matrix the surrogate logits are computed against."""
        if use_images:
            if self.images is None:
                raise StoreError("image anchors requested but none present")
            return self.images.matrix.rows
        return self.captions.matrix.rows


def write_store(store: EmbeddingStore, path: str | os.PathLike) -> None:
    """Write ``<path>.emb`` and ``<path>.ids``.

    Byte-identical output for equal inputs: rows are narrowed to float32
    and dumped row-major after the fixed header.
    """
    path = os.fspath(path)
    rows32 = store.matrix.rows.astype("<f4")
    header = _HEADER.pack(
        MAGIC,
        VERSION,
        _KIND_CODES[store.matrix.kind],
        0,
        store.dim,
        store.count,
    )
    with open(path + ".emb", "wb") as f:
        f.write(header)
        f.write(rows32.tobytes(order="C"))
    with open(path + ".ids", "w", encoding="utf-8") as f:
        for id_ in store.ids:
            f.write(id_ + "\n")


def read_store(path: str | os.PathLike) -> EmbeddingStore:
    """Read and validate a store written by :func:`write_store`."""
    path = os.fspath(path)
    with open(path + ".emb", "rb") as f:
        blob = f.read()
    if len(blob) < _HEADER.size:
        raise StoreFormatError(f"{path}.emb: truncated header")
    magic, version, kind_code, reserved, dim, count = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise StoreFormatError(f"{path}.emb: unrecognized format")
    if version != VERSION:
        raise StoreFormatError(f"{path}.emb: unsupported version {version}")
    if kind_code not in _KIND_NAMES:
        raise StoreFormatError(f"{path}.emb: unknown kind code {kind_code}")
    if reserved != 0:
        raise StoreFormatError(f"{path}.emb: nonzero reserved byte")
    if dim < 1:
        raise StoreFormatError(f"{path}.emb: non-positive dim")
    expected = _HEADER.size + 4 * dim * count
    if len(blob) != expected:
        raise StoreFormatError(
            f"{path}.emb: truncated payload ({len(blob)} bytes, expected {expected})"
        )
    rows = np.frombuffer(blob, dtype="<f4", offset=_HEADER.size)
    rows = rows.reshape(count, dim).astype(np.float64)

    with open(path + ".ids", "r", encoding="utf-8") as f:
        ids = [line.rstrip("\n") for line in f]
    if len(ids) != count:
        raise StoreFormatError(
            f"{path}.ids: {len(ids)} ids for {count} rows"
        )
    return EmbeddingStore(EmbeddingMatrix(rows, _KIND_NAMES[kind_code]), tuple(ids))
