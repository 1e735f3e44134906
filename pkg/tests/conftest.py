import json
import os

import numpy as np
import pytest

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CORPUS_PATH = os.path.join(REPO_ROOT, "data", "corpus.jsonl")


@pytest.fixture(scope="session")
def corpus_path():
    return CORPUS_PATH


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec) + "\n")
    return path


def make_record(idx=0, dialect="BrE", lexeme_sae="bathroom", lexeme_dialect="loo",
                template="a spacious {}", style="concise", polysemy=None):
    rec = {
        "id": f"pair-{idx:03d}",
        "dialect": dialect,
        "lexeme_sae": lexeme_sae,
        "lexeme_dialect": lexeme_dialect,
        "sae_prompt": template.format(lexeme_sae),
        "dialect_prompt": template.format(lexeme_dialect),
        "style": style,
    }
    if polysemy is not None:
        rec["polysemy_prompt"] = polysemy
    return rec


@pytest.fixture
def tiny_corpus(tmp_path):
    """Three valid records across two dialects, one with a polysemy prompt."""
    records = [
        make_record(0),
        make_record(1, dialect="SgE", lexeme_sae="squid", lexeme_dialect="sotong",
                    template="a {} on a counter"),
        make_record(2, dialect="AAE", lexeme_sae="car", lexeme_dialect="whip",
                    template="a man driving his {}",
                    polysemy="a long leather whip on a wooden table"),
    ]
    return write_jsonl(tmp_path / "tiny.jsonl", records)


def random_store(rng, count=None, dim=None, kind="text"):
    from dialectkit.store import EmbeddingMatrix, EmbeddingStore

    count = int(rng.integers(0, 12)) if count is None else count
    dim = int(rng.integers(1, 9)) if dim is None else dim
    rows = rng.standard_normal((count, dim))
    # keep rows clear of the zero-norm threshold
    if count:
        rows += np.sign(rows.sum(axis=1, keepdims=True) + 0.5)
    ids = tuple(f"id-{i:04d}" for i in range(count))
    return EmbeddingStore(EmbeddingMatrix(rows, kind), ids)
