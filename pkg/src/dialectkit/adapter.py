"""The trainable target encoder: a linear map over frozen-encoder outputs.

The target encoder is realized as pi(x) = W @ pi0(x) + b with W identity-
initialized and b zero, so pi coincides with the frozen encoder before the
first optimizer step.  Every training loss consumes only encoder outputs,
so this transform preserves the loss formulas exactly while keeping
gradients closed-form; a full encoder can replace it behind the same
boundary (a trainable embedding transform).

Checkpoint layout (little-endian): magic b"DGAD", version u16 = 1, dim u32,
then dim*dim float64 (W row-major), then dim float64 (b).
"""

from __future__ import annotations

import os
import struct

import numpy as np

CKPT_MAGIC = b"DGAD"
CKPT_VERSION = 1
_CKPT_HEADER = struct.Struct("<4sHI")


class CheckpointError(Exception):
    """Raised for malformed checkpoint files."""


class LinearAdapter:
    """A dim x dim weight matrix and bias vector applied to embeddings."""

    def __init__(self, dim: int, w: np.ndarray | None = None, b: np.ndarray | None = None):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = int(dim)
        self.w = np.eye(dim, dtype=np.float64) if w is None else np.array(w, dtype=np.float64)
        self.b = np.zeros(dim, dtype=np.float64) if b is None else np.array(b, dtype=np.float64)
        if self.w.shape != (dim, dim) or self.b.shape != (dim,):
            raise ValueError(
                f"parameter shapes {self.w.shape}/{self.b.shape} do not match dim {dim}"
            )
        if not (np.all(np.isfinite(self.w)) and np.all(np.isfinite(self.b))):
            raise ValueError("adapter parameters must be finite")

    def copy(self) -> "LinearAdapter":
        return LinearAdapter(self.dim, self.w.copy(), self.b.copy())

    def forward(self, frozen_emb) -> np.ndarray:
        """Apply W x + b to one embedding or a batch of row embeddings."""
        x = np.asarray(frozen_emb, dtype=np.float64)
        if x.shape[-1] != self.dim:
            raise ValueError(f"dimension mismatch: input {x.shape[-1]}, adapter {self.dim}")
        return x @ self.w.T + self.b

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, LinearAdapter)
            and self.dim == other.dim
            and np.array_equal(self.w, other.w)
            and np.array_equal(self.b, other.b)
        )


def adapter_forward(adapter: LinearAdapter, frozen_emb) -> np.ndarray:
    """Function form of :meth:`LinearAdapter.forward`."""
    return adapter.forward(frozen_emb)


def save_checkpoint(adapter: LinearAdapter, path: str | os.PathLike) -> None:
    """Write the adapter bit-exactly at float64 precision."""
    with open(os.fspath(path), "wb") as f:
        f.write(_CKPT_HEADER.pack(CKPT_MAGIC, CKPT_VERSION, adapter.dim))
        f.write(adapter.w.astype("<f8").tobytes(order="C"))
        f.write(adapter.b.astype("<f8").tobytes(order="C"))


def load_checkpoint(path: str | os.PathLike, expect_dim: int | None = None) -> LinearAdapter:
    """Read an adapter; round-trips :func:`save_checkpoint` bit-exactly."""
    with open(os.fspath(path), "rb") as f:
        blob = f.read()
    if len(blob) < _CKPT_HEADER.size:
        raise CheckpointError("truncated checkpoint")
    magic, version, dim = _CKPT_HEADER.unpack_from(blob)
    if magic != CKPT_MAGIC:
        raise CheckpointError("bad magic: not an adapter checkpoint")
    if version != CKPT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    if expect_dim is not None and dim != expect_dim:
        raise CheckpointError(f"dimension mismatch: checkpoint {dim}, expected {expect_dim}")
    expected = _CKPT_HEADER.size + 8 * dim * (dim + 1)
    if len(blob) != expected:
        raise CheckpointError("truncated checkpoint")
    w = np.frombuffer(blob, dtype="<f8", count=dim * dim, offset=_CKPT_HEADER.size)
    b = np.frombuffer(blob, dtype="<f8", count=dim, offset=_CKPT_HEADER.size + 8 * dim * dim)
    return LinearAdapter(dim, w.reshape(dim, dim).copy(), b.copy())
