"""Dual-encoder backends.

A model identifier is a local checkpoint directory.  Directories holding a
``config.json`` with ``"arch": "tiny-dual-encoder"`` load the bundled
miniature CLIP-style model (see :mod:`embexport.pretrain`); anything else
is handed to the optional transformers CLIP backend, which needs that
library and a locally available checkpoint.

Backends expose ``encode_texts(list[str])`` and ``encode_images(list[path])``
returning float32 arrays, one row per input, in input order, exactly as the
model produced them (no post-hoc normalization).
"""

from __future__ import annotations

import json
import os
import zlib

import numpy as np
import torch
from PIL import Image
from torch import nn

TINY_ARCH = "tiny-dual-encoder"


class ModelLoadError(Exception):
    """Raised when a checkpoint directory cannot be loaded."""


def _trigram_buckets(text: str, vocab: int) -> list[int]:
    padded = f"  {text.lower().strip()}  "
    grams = [padded[i : i + 3] for i in range(len(padded) - 2)]
    return [zlib.crc32(g.encode("utf-8")) % vocab for g in grams]


class TinyTextEncoder(nn.Module):
    """Bag of hashed character trigrams -> MLP."""

    def __init__(self, vocab: int, hidden: int, dim: int):
        super().__init__()
        self.vocab = vocab
        self.bag = nn.EmbeddingBag(vocab, hidden, mode="mean")
        self.mlp = nn.Sequential(nn.ReLU(), nn.Linear(hidden, hidden),
                                 nn.ReLU(), nn.Linear(hidden, dim))

    def forward(self, texts: list[str]) -> torch.Tensor:
        flat: list[int] = []
        offsets: list[int] = []
        for text in texts:
            offsets.append(len(flat))
            flat.extend(_trigram_buckets(text, self.vocab))
        indices = torch.tensor(flat, dtype=torch.long)
        offs = torch.tensor(offsets, dtype=torch.long)
        return self.mlp(self.bag(indices, offs))


class TinyImageEncoder(nn.Module):
    """Small conv stack over 32x32 RGB."""

    def __init__(self, hidden: int, dim: int):
        super().__init__()
        self.net = nn.Sequential(
            nn.Conv2d(3, 16, 3, stride=2, padding=1), nn.ReLU(),
            nn.Conv2d(16, 32, 3, stride=2, padding=1), nn.ReLU(),
            nn.AdaptiveAvgPool2d(1), nn.Flatten(),
            nn.Linear(32, hidden), nn.ReLU(), nn.Linear(hidden, dim),
        )

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        return self.net(images)


class TinyDualEncoder(nn.Module):
    IMAGE_SIZE = 32

    def __init__(self, vocab: int = 2048, hidden: int = 64, dim: int = 32):
        super().__init__()
        self.config = {"arch": TINY_ARCH, "vocab": vocab, "hidden": hidden,
                       "dim": dim, "image_size": self.IMAGE_SIZE}
        self.text = TinyTextEncoder(vocab, hidden, dim)
        self.image = TinyImageEncoder(hidden, dim)

    @staticmethod
    def load_image(path) -> torch.Tensor:
        with Image.open(path) as img:
            img = img.convert("RGB").resize(
                (TinyDualEncoder.IMAGE_SIZE, TinyDualEncoder.IMAGE_SIZE)
            )
            array = np.asarray(img, dtype=np.float32) / 255.0
        return torch.from_numpy(array).permute(2, 0, 1)

    def save(self, directory, revision: str = "dev") -> None:
        os.makedirs(directory, exist_ok=True)
        config = dict(self.config, revision=revision)
        with open(os.path.join(directory, "config.json"), "w") as f:
            json.dump(config, f, indent=2, sort_keys=True)
        torch.save(self.state_dict(), os.path.join(directory, "weights.pt"))

    @classmethod
    def from_checkpoint(cls, directory) -> "TinyDualEncoder":
        config_path = os.path.join(directory, "config.json")
        with open(config_path) as f:
            config = json.load(f)
        model = cls(config["vocab"], config["hidden"], config["dim"])
        state = torch.load(os.path.join(directory, "weights.pt"),
                           map_location="cpu", weights_only=True)
        model.load_state_dict(state)
        model.eval()
        return model


class TinyBackend:
    def __init__(self, model: TinyDualEncoder):
        self.model = model

    @torch.no_grad()
    def encode_texts(self, texts: list[str]) -> np.ndarray:
        return self.model.text(list(texts)).numpy().astype(np.float32)

    @torch.no_grad()
    def encode_images(self, paths: list[str]) -> np.ndarray:
        batch = torch.stack([TinyDualEncoder.load_image(p) for p in paths])
        return self.model.image(batch).numpy().astype(np.float32)


class HFClipBackend:
    """CLIP via transformers, for real checkpoints available locally."""

    def __init__(self, model_id: str):
        try:
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as e:  # pragma: no cover - env dependent
            raise ModelLoadError("transformers is not installed") from e
        try:
            self.model = CLIPModel.from_pretrained(model_id)
            self.processor = CLIPProcessor.from_pretrained(model_id)
        except Exception as e:
            raise ModelLoadError(f"cannot load CLIP checkpoint {model_id!r}: {e}") from e
        self.model.eval()

    @torch.no_grad()
    def encode_texts(self, texts: list[str]) -> np.ndarray:
        inputs = self.processor(text=list(texts), return_tensors="pt", padding=True)
        return self.model.get_text_features(**inputs).numpy().astype(np.float32)

    @torch.no_grad()
    def encode_images(self, paths: list[str]) -> np.ndarray:
        images = [Image.open(p).convert("RGB") for p in paths]
        inputs = self.processor(images=images, return_tensors="pt")
        return self.model.get_image_features(**inputs).numpy().astype(np.float32)


def load_encoder(model_id: str):
    """Resolve a model identifier to a backend."""
    config_path = os.path.join(model_id, "config.json")
    if os.path.isfile(config_path):
        with open(config_path) as f:
            config = json.load(f)
        if config.get("arch") == TINY_ARCH:
            try:
                return TinyBackend(TinyDualEncoder.from_checkpoint(model_id))
            except (OSError, KeyError, RuntimeError) as e:
                raise ModelLoadError(f"cannot load checkpoint {model_id!r}: {e}") from e
    return HFClipBackend(model_id)
