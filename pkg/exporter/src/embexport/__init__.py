"""Offline producer of binary embedding stores from a dual-encoder checkpoint."""

__version__ = "0.1.0"

from .dgem import DgemWriteError, write_dgem
from .encoders import ModelLoadError, TinyDualEncoder, load_encoder
from .export import (
    ExportError,
    ExportJob,
    export_anchor_pairs,
    export_image_embeddings,
    export_text_embeddings,
)
from .manifest import (
    ManifestEntry,
    ManifestError,
    check_aligned,
    read_image_manifest,
    read_text_manifest,
)
from .pretrain import pretrain_tiny, render_scene, scene_caption, write_sample_dataset
