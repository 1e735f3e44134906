#!/usr/bin/env python3
"""Embedding stores: the binary on-disk format, validation, and the cosine
kernel shared by every loss.

Run from the repository root:  python demos/02_embedding_stores.py
"""

import tempfile

import numpy as np

from dialectkit import (
    AnchorSet,
    EmbeddingMatrix,
    EmbeddingStore,
    StoreFormatError,
    cosine_similarity,
    read_store,
    write_store,
)

rng = np.random.default_rng(0)

# --- build and round-trip a store --------------------------------------------
rows = rng.standard_normal((4, 8))
store = EmbeddingStore(EmbeddingMatrix(rows, "text"),
                       ("cap-a", "cap-b", "cap-c", "cap-d"))

with tempfile.TemporaryDirectory() as tmp:
    write_store(store, f"{tmp}/captions")
    back = read_store(f"{tmp}/captions")
    same32 = np.array_equal(back.matrix.rows.astype(np.float32),
                            store.matrix.rows.astype(np.float32))
    print(f"round-trip: {back.count} rows x {back.dim} dims, "
          f"float32-exact = {same32}")

    # repeated writes are byte-identical
    write_store(store, f"{tmp}/again")
    a = open(f"{tmp}/captions.emb", "rb").read()
    b = open(f"{tmp}/again.emb", "rb").read()
    print(f"byte-deterministic writes: {a == b} ({len(a)} bytes)")

    # corrupting the magic is caught immediately
    blob = bytearray(a)
    blob[:4] = b"????"
    open(f"{tmp}/broken.emb", "wb").write(bytes(blob))
    open(f"{tmp}/broken.ids", "w").write("x\ny\nz\nw\n")
    try:
        read_store(f"{tmp}/broken")
    except StoreFormatError as e:
        print(f"corrupted header rejected: {e}")

# --- the cosine kernel ---------------------------------------------------------
print()
print("cos(v, v)        =", cosine_similarity([0.3, -2.0, 5.5], [0.3, -2.0, 5.5]))
print("cos(e1, e2)      =", cosine_similarity([1, 0], [0, 1]))
print("cos((1,2,2),(2,1,2)) =", cosine_similarity([1, 2, 2], [2, 1, 2]), "(= 8/9)")

# --- anchor sets -----------------------------------------------------------------
captions = EmbeddingStore(EmbeddingMatrix(rng.standard_normal((3, 8)), "text"),
                          ("a0", "a1", "a2"))
images = EmbeddingStore(EmbeddingMatrix(rng.standard_normal((3, 8)), "image"),
                        ("a0", "a1", "a2"))
anchors = AnchorSet(captions, images)
print(f"\nanchor set: {anchors.m} caption/image pairs, dim {anchors.dim}")
print("caption rows power the text-anchor KL variant; image rows the image variant")
