"""Input manifests: CSV files listing what to encode.

Text manifests have header ``id,text``; image manifests ``id,image_path``
(paths resolved relative to the manifest file).  Ids must be unique and
order is meaningful: exported row i corresponds to manifest entry i.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass


class ManifestError(Exception):
    """Raised for unreadable or inconsistent manifests."""


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    value: str  # the text, or the resolved image path


def _read(path, value_column: str) -> list[ManifestEntry]:
    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    base = os.path.dirname(os.path.abspath(path))
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["id", value_column]:
            raise ManifestError(f"{path}: expected header 'id,{value_column}'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ManifestError(f"{path} line {lineno}: expected 2 columns")
            id_, value = row[0].strip(), row[1]
            if not id_:
                raise ManifestError(f"{path} line {lineno}: empty id")
            if id_ in seen:
                raise ManifestError(f"{path} line {lineno}: duplicate id {id_!r}")
            seen.add(id_)
            if value_column == "image_path":
                value = value if os.path.isabs(value) else os.path.join(base, value)
            entries.append(ManifestEntry(id_, value))
    if not entries:
        raise ManifestError(f"{path}: manifest is empty")
    return entries


def read_text_manifest(path) -> list[ManifestEntry]:
    return _read(path, "text")


def read_image_manifest(path) -> list[ManifestEntry]:
    return _read(path, "image_path")


def check_aligned(captions: list[ManifestEntry], images: list[ManifestEntry]) -> None:
    """Anchor manifests must pair up row-for-row by id."""
    n = min(len(captions), len(images))
    for i in range(n):
        if captions[i].id != images[i].id:
            raise ManifestError(
                f"manifests misaligned at index {i}: "
                f"{captions[i].id!r} vs {images[i].id!r}"
            )
    if len(captions) != len(images):
        raise ManifestError(
            f"manifests misaligned at index {n}: one manifest has surplus entries"
        )
