#!/usr/bin/env python3
"""Tour of the prompt-pair corpus: loading, the two-question speaker filter,
style checks, and deterministic splitting.

Run from the repository root:  python demos/01_corpus_and_splits.py
"""

import os
import tempfile

from dialectkit import (
    AnnotationRecord,
    apply_annotation_filter,
    load_dataset,
    split_dataset,
    validate_prompt_style,
    write_split,
)

ROOT = os.path.join(os.path.dirname(__file__), "..")

# --- load the shipped corpus ------------------------------------------------
pairs = load_dataset(os.path.join(ROOT, "data", "corpus.jsonl"))
print(f"corpus: {len(pairs)} pairs, {pairs.polysemy_count} with a polysemy "
      f"prompt, {pairs.prompt_count} prompt strings total")
for dialect, members in sorted(pairs.by_dialect().items()):
    print(f"  {dialect}: {len(members)} pairs")

example = pairs.get("bre-0000")
print(f"\nexample pair {example.id}:")
print(f"  standard: {example.sae_prompt!r}")
print(f"  dialect:  {example.dialect_prompt!r}  ({example.lexeme_sae} -> "
      f"{example.lexeme_dialect}, {example.style})")

# --- style bounds are checked but non-fatal ---------------------------------
print("\nstyle check on a 7-token 'concise' prompt:")
for violation in validate_prompt_style("one two three four five six seven", "concise"):
    print(f"  warning: {violation}")

# --- the two-question filter -------------------------------------------------
# Keep a pair only when both speakers say the dialect prompt means exactly the
# standard prompt (q1 = yes) and is not ambiguous in a standard reading
# (q2 = no).
subset = [p.id for p in list(pairs)[:4]]
annotations = []
for i, pid in enumerate(subset):
    q2 = "yes" if i == 0 else "no"          # first pair flagged ambiguous
    q1 = "dontknow" if i == 1 else "yes"    # second pair uncertain
    annotations.append(AnnotationRecord(pid, "speaker-1", q1, q2))
    annotations.append(AnnotationRecord(pid, "speaker-2", "yes", "no"))

from dialectkit.dataset import PairSet  # noqa: E402

four = PairSet(tuple(pairs.get(pid) for pid in subset))
retained, rejections = apply_annotation_filter(four, annotations)
print(f"\nannotation filter on {len(four)} pairs: retained {len(retained)}")
for reason, ids in sorted(rejections.items()):
    print(f"  rejected ({reason}): {', '.join(ids)}")

# --- deterministic splitting --------------------------------------------------
assignment = split_dataset(pairs, ratios=(0.8, 0.1, 0.1), seed=1234)
print(f"\nsplit sizes (train/val/test): {assignment.sizes()}")
again = split_dataset(pairs, ratios=(0.8, 0.1, 0.1), seed=1234)
print(f"same seed reproduces the assignment: {assignment.mapping == again.mapping}")

grouped = split_dataset(pairs, seed=1234, group_by_lexeme=True)
print(f"lexeme-grouped sizes (no lexical leakage): {grouped.sizes()}")

with tempfile.TemporaryDirectory() as tmp:
    path = os.path.join(tmp, "split.tsv")
    write_split(assignment, path)
    with open(path) as f:
        head = [next(f).rstrip() for _ in range(3)]
    print("split file head:", head)
