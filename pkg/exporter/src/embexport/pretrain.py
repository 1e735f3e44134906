"""Pretrain the miniature dual encoder on procedurally rendered scenes.

The sandbox this ships in has no network access, so instead of downloading
a published CLIP checkpoint the test fixtures contrastively pretrain a tiny
text/image encoder pair on rendered shape scenes ("a red circle on black"),
save it as a checkpoint directory, and export from that.  Swapping in a
real CLIP checkpoint is just a different model identifier.

Training is seeded and single-threaded, finishing in seconds on CPU.
"""

from __future__ import annotations

import csv
import itertools
import os

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image, ImageDraw

from .encoders import TinyDualEncoder

COLORS = {
    "red": (220, 50, 40), "green": (60, 180, 80), "blue": (50, 90, 220),
    "yellow": (230, 210, 60), "white": (240, 240, 240), "purple": (150, 60, 190),
    "orange": (240, 140, 40), "cyan": (70, 210, 210),
}
BACKGROUNDS = {
    "black": (10, 10, 10), "gray": (120, 120, 120),
    "navy": (20, 30, 80), "maroon": (90, 20, 30),
}
SHAPES = ("circle", "square", "triangle", "cross")


def scene_caption(color: str, shape: str, background: str) -> str:
    return f"a {color} {shape} on a {background} background"


def render_scene(color: str, shape: str, background: str, size: int = 32) -> Image.Image:
    img = Image.new("RGB", (size, size), BACKGROUNDS[background])
    draw = ImageDraw.Draw(img)
    rgb = COLORS[color]
    lo, hi = size // 4, size - size // 4
    if shape == "circle":
        draw.ellipse([lo, lo, hi, hi], fill=rgb)
    elif shape == "square":
        draw.rectangle([lo, lo, hi, hi], fill=rgb)
    elif shape == "triangle":
        draw.polygon([(size // 2, lo), (lo, hi), (hi, hi)], fill=rgb)
    elif shape == "cross":
        third = size // 3
        draw.rectangle([third, lo, 2 * third, hi], fill=rgb)
        draw.rectangle([lo, third, hi, 2 * third], fill=rgb)
    else:
        raise ValueError(f"unknown shape {shape!r}")
    return img


def all_scenes() -> list[tuple[str, str, str]]:
    return list(itertools.product(COLORS, SHAPES, BACKGROUNDS))


def write_sample_dataset(directory, count: int | None = None) -> tuple[str, str]:
    """Render scenes plus caption/image manifests; returns the manifest paths.

    Scenes are enumerated deterministically; ``count`` limits how many
    (spread over the full combination grid).
    """
    os.makedirs(os.path.join(directory, "images"), exist_ok=True)
    scenes = all_scenes()
    if count is not None:
        step = max(1, len(scenes) // count)
        scenes = scenes[::step][:count]
    captions_path = os.path.join(directory, "captions.csv")
    images_path = os.path.join(directory, "images.csv")
    with open(captions_path, "w", newline="") as cf, \
            open(images_path, "w", newline="") as imf:
        cw, iw = csv.writer(cf), csv.writer(imf)
        cw.writerow(["id", "text"])
        iw.writerow(["id", "image_path"])
        for i, (color, shape, background) in enumerate(scenes):
            scene_id = f"scene-{i:04d}"
            rel = os.path.join("images", f"{scene_id}.png")
            render_scene(color, shape, background).save(os.path.join(directory, rel))
            cw.writerow([scene_id, scene_caption(color, shape, background)])
            iw.writerow([scene_id, rel])
    return captions_path, images_path


def pretrain_tiny(
    out_dir,
    dim: int = 32,
    hidden: int = 64,
    steps: int = 300,
    batch_size: int = 32,
    lr: float = 3e-3,
    temperature: float = 0.07,
    seed: int = 0,
) -> str:
    """Contrastive (symmetric InfoNCE) pretraining; saves a checkpoint dir."""
    torch.manual_seed(seed)
    torch.set_num_threads(1)
    model = TinyDualEncoder(hidden=hidden, dim=dim)
    model.train()
    optimizer = torch.optim.Adam(model.parameters(), lr=lr)

    scenes = all_scenes()
    captions = [scene_caption(*s) for s in scenes]
    images = torch.stack([
        torch.from_numpy(np.asarray(render_scene(*s), dtype=np.float32) / 255.0)
        .permute(2, 0, 1)
        for s in scenes
    ])

    generator = torch.Generator().manual_seed(seed)
    for step in range(steps):
        idx = torch.randperm(len(scenes), generator=generator)[:batch_size]
        text_emb = F.normalize(model.text([captions[i] for i in idx]), dim=1)
        image_emb = F.normalize(model.image(images[idx]), dim=1)
        logits = text_emb @ image_emb.T / temperature
        labels = torch.arange(len(idx))
        loss = 0.5 * (F.cross_entropy(logits, labels)
                      + F.cross_entropy(logits.T, labels))
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()

    model.eval()
    model.save(out_dir, revision=f"tiny-seed{seed}-steps{steps}")
    return os.fspath(out_dir)
