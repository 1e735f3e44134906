#!/usr/bin/env python3
"""Drive the command-line interface end to end on a miniature setup:
validate -> split -> train -> eval, all inside a temporary directory.

Run from the repository root:  python demos/06_cli_end_to_end.py
"""

import json
import os
import tempfile

import numpy as np

from dialectkit import tables, write_score_csv
from dialectkit.cli import main
from dialectkit.dataset import load_dataset
from dialectkit.store import EmbeddingMatrix, EmbeddingStore, write_store


def run(argv):
    print(f"\n$ dialectkit {' '.join(argv)}")
    code = main(argv)
    print(f"(exit {code})")
    return code


with tempfile.TemporaryDirectory() as tmp:
    # a 40-pair corpus reusing the first pairs of the shipped fixture
    root = os.path.join(os.path.dirname(__file__), "..")
    with open(os.path.join(root, "data", "corpus.jsonl")) as f:
        lines = [next(f) for _ in range(40)]
    corpus = os.path.join(tmp, "mini.jsonl")
    with open(corpus, "w") as f:
        f.writelines(lines)

    run(["validate", corpus])

    split = os.path.join(tmp, "split.tsv")
    run(["split", corpus, "--out", split, "--ratios", "0.6,0.2,0.2", "--seed", "7"])

    # synthetic frozen embeddings for every prompt of every pair
    rng = np.random.default_rng(7)
    pairs = load_dataset(corpus)
    ids, rows = [], []
    for p in pairs:
        base = rng.standard_normal(16)
        base /= np.linalg.norm(base)
        parts = ("sae", "dialect") + (("polysemy",) if p.has_polysemy else ())
        for part in parts:
            vec = base + 0.15 * rng.standard_normal(16)
            ids.append(f"{p.id}#{part}")
            rows.append(vec / np.linalg.norm(vec))
    emb_dir = os.path.join(tmp, "emb")
    os.makedirs(emb_dir)
    write_store(EmbeddingStore(EmbeddingMatrix(np.array(rows), "text"), tuple(ids)),
                os.path.join(emb_dir, "prompts"))

    anchor_dir = os.path.join(tmp, "anchors")
    os.makedirs(anchor_dir)
    caps = rng.standard_normal((8, 16))
    caps /= np.linalg.norm(caps, axis=1, keepdims=True)
    write_store(EmbeddingStore(EmbeddingMatrix(caps, "text"),
                               tuple(f"c{i}" for i in range(8))),
                os.path.join(anchor_dir, "captions"))

    out = os.path.join(tmp, "run")
    run(["train", "--dataset", corpus, "--split", split,
         "--embeddings", emb_dir, "--anchors", anchor_dir, "--out", out,
         "--epochs", "5", "--batch-size", "8", "--anchor-count", "8",
         "--seed", "42"])
    manifest = json.load(open(os.path.join(out, "manifest.json")))
    print(f"run manifest: best epoch {manifest['best_epoch']}, "
          f"seed {manifest['config']['seed']}, "
          f"{len(manifest['inputs'])} input digests")

    # evaluation on the bundled benchmark tables
    bench = os.path.join(tmp, "bench.jsonl")
    with open(bench, "w") as f:
        for p in tables.benchmark_pairset():
            f.write(json.dumps({
                "id": p.id, "dialect": p.dialect, "lexeme_sae": p.lexeme_sae,
                "lexeme_dialect": p.lexeme_dialect, "sae_prompt": p.sae_prompt,
                "dialect_prompt": p.dialect_prompt, "style": p.style,
            }) + "\n")
    scores = os.path.join(tmp, "stable-diffusion-1.5.csv")
    write_score_csv(tables.benchmark_scores("stable-diffusion-1.5"), scores)
    run(["eval", scores, "--dataset", bench, "--metric", "vqascore",
         "--style", "concise"])

    run(["gradcheck", "--dim", "8", "--pairs", "4", "--anchors", "6", "--seed", "7"])
