"""Export jobs: run an encoder over manifests and write embedding stores.

Manifest validation happens before any model is loaded, so a malformed
job fails fast.  Row order always matches manifest order, and equal
inputs against a fixed checkpoint produce byte-identical stores.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dgem import DgemWriteError, write_dgem
from .encoders import load_encoder
from .manifest import (
    ManifestEntry,
    ManifestError,
    check_aligned,
    read_image_manifest,
    read_text_manifest,
)


class ExportError(Exception):
    """Raised for invalid export jobs."""


@dataclass(frozen=True)
class ExportJob:
    model: str
    manifest: tuple[ManifestEntry, ...]
    kind: str  # "text" or "image"
    out_path: str
    batch_size: int = 32

    def __post_init__(self):
        object.__setattr__(self, "manifest", tuple(self.manifest))
        if self.kind not in ("text", "image"):
            raise ExportError(f"unknown kind {self.kind!r}")
        if self.batch_size < 1:
            raise ExportError("batch_size must be >= 1")
        if not self.manifest:
            raise ExportError("manifest is empty")
        seen: set[str] = set()
        for entry in self.manifest:
            if entry.id in seen:
                raise ExportError(f"duplicate id {entry.id!r} in manifest")
            seen.add(entry.id)


def _run(job: ExportJob) -> None:
    encoder = load_encoder(job.model)
    encode = encoder.encode_texts if job.kind == "text" else encoder.encode_images
    chunks = []
    for start in range(0, len(job.manifest), job.batch_size):
        batch = job.manifest[start : start + job.batch_size]
        chunks.append(encode([e.value for e in batch]))
    rows = np.concatenate(chunks, axis=0)
    write_dgem(rows, [e.id for e in job.manifest], job.kind, job.out_path)


def export_text_embeddings(job: ExportJob) -> None:
    """Encode the manifest texts and write ``<out>.emb``/``<out>.ids``."""
    if job.kind != "text":
        raise ExportError(f"text export got a {job.kind!r} job")
    _run(job)


def export_image_embeddings(job: ExportJob) -> None:
    """Encode the manifest images and write ``<out>.emb``/``<out>.ids``."""
    if job.kind != "image":
        raise ExportError(f"image export got a {job.kind!r} job")
    _run(job)


def export_anchor_pairs(
    caption_manifest_path,
    image_manifest_path,
    model: str,
    out_dir,
    batch_size: int = 32,
) -> tuple[str, str]:
    """Export an aligned caption/image anchor set to ``out_dir``.

    The two manifests must pair up row-for-row by id; misalignment reports
    the first offending index.  Writes ``captions.emb/.ids`` and
    ``images.emb/.ids``.
    """
    import os

    captions = read_text_manifest(caption_manifest_path)
    images = read_image_manifest(image_manifest_path)
    check_aligned(captions, images)
    os.makedirs(out_dir, exist_ok=True)
    cap_out = os.path.join(out_dir, "captions")
    img_out = os.path.join(out_dir, "images")
    export_text_embeddings(ExportJob(model, tuple(captions), "text", cap_out, batch_size))
    export_image_embeddings(ExportJob(model, tuple(images), "image", img_out, batch_size))
    return cap_out, img_out
