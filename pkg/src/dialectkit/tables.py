"""Bundled reference benchmark tables, used as golden evaluation fixtures.

The package ships the published dialect-robustness benchmark results for 17
widely used text-to-image and text-to-video generative models (18 table rows;
one model appears twice, with and without prompt rewriting), in two prompt
styles:

* per-dialect mean alignment scores (VQAScore and CLIPScore) of generations
  from standard-English prompts and from dialect prompts, and
* the published drop table those means aggregate into (per-dialect drops are
  VQAScore-based; overall drops exist for human, VQAScore and CLIPScore).

Three cells of the published drop table are provably self-inconsistent
(see ``load_errata``): two dialect cells of one row duplicate the adjacent
row while contradicting their own row's overall column, and one overall
cell contradicts the mean of its own row's dialect cells.  The errata table
records the published value, the value consistent with the rest of the
data, and the evidence.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources

from .dataset import PairSet, PromptPair
from .evaluation import (
    RATIO_OF_AVERAGES,
    GenerationScores,
    VARIANT_DIALECT,
    VARIANT_SAE,
    dialect_drop,
    overall_drop,
)

DIALECTS = ("AAE", "BrE", "ChE", "InE", "SgE")
STYLES = ("concise", "detailed")
METRICS = ("vqascore", "clipscore")


def _read_data_csv(name: str) -> list[dict[str, str]]:
    ref = resources.files("dialectkit").joinpath("data", name)
    with ref.open("r", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def load_score_means(metric: str = "vqascore") -> dict[tuple[str, str, str], tuple[float, float]]:
    """(model, style, dialect) -> (sae_mean, dialect_mean) for one metric."""
    if metric not in METRICS:
        raise ValueError(f"no bundled means for metric {metric!r}")
    out = {}
    for row in _read_data_csv(f"benchmark_{metric}_means.csv"):
        out[(row["model"], row["style"], row["dialect"])] = (
            float(row["sae_mean"]), float(row["dialect_mean"])
        )
    return out


@dataclass(frozen=True)
class PublishedDrops:
    """One row of the published drop table."""

    model: str
    style: str
    overall: dict[str, float]        # metric -> overall drop (percent)
    per_dialect: dict[str, float]    # dialect -> VQAScore drop (percent)


def load_published_drops() -> dict[tuple[str, str], PublishedDrops]:
    out = {}
    for row in _read_data_csv("benchmark_drops.csv"):
        key = (row["model"], row["style"])
        out[key] = PublishedDrops(
            model=row["model"],
            style=row["style"],
            overall={
                "human": float(row["overall_human"]),
                "vqascore": float(row["overall_vqascore"]),
                "clipscore": float(row["overall_clipscore"]),
            },
            per_dialect={d: float(row[d]) for d in DIALECTS},
        )
    return out


@dataclass(frozen=True)
class Erratum:
    model: str
    style: str
    field: str
    published: float
    corrected: float
    evidence: str


def load_errata() -> list[Erratum]:
    """Cells of the published drop table inconsistent with the table's own data."""
    return [
        Erratum(
            row["model"], row["style"], row["field"],
            float(row["published"]), float(row["corrected"]), row["evidence"],
        )
        for row in _read_data_csv("benchmark_errata.csv")
    ]


def expected_drops(apply_errata: bool = True) -> dict[tuple[str, str], PublishedDrops]:
    """Published drops with (by default) the errata corrections applied."""
    drops = load_published_drops()
    if not apply_errata:
        return drops
    for e in load_errata():
        rec = drops[(e.model, e.style)]
        if e.field in DIALECTS:
            rec.per_dialect[e.field] = e.corrected
        elif e.field.startswith("overall_"):
            rec.overall[e.field.removeprefix("overall_")] = e.corrected
        else:
            raise ValueError(f"unknown erratum field {e.field!r}")
    return drops


def benchmark_models() -> list[str]:
    return sorted({model for model, _ in load_published_drops()})


def score_pairs_for(
    metric: str, model: str, style: str
) -> dict[str, tuple[GenerationScores, GenerationScores]]:
    """Bundled means as (sae, dialect) score objects, one pair per dialect."""
    means = load_score_means(metric)
    out = {}
    for dialect in DIALECTS:
        sae_mean, dialect_mean = means[(model, style, dialect)]
        pid = f"bm-{dialect.lower()}-{style}"
        out[dialect] = (
            GenerationScores(pid, VARIANT_SAE, metric, (sae_mean,)),
            GenerationScores(pid, VARIANT_DIALECT, metric, (dialect_mean,)),
        )
    return out


def computed_drops(metric: str, model: str, style: str) -> tuple[dict[str, float], float]:
    """Per-dialect and overall drops recomputed from the bundled means."""
    pairs = score_pairs_for(metric, model, style)
    per_dialect = {
        dialect: dialect_drop([pairs[dialect]], RATIO_OF_AVERAGES)
        for dialect in DIALECTS
    }
    return per_dialect, overall_drop(per_dialect)


# ---------------------------------------------------------------------------
# Mini corpus + score files mirroring the bundled tables, for end-to-end runs

_BENCH_LEXEMES = {
    # dialect -> (standard lexeme, dialect lexeme)
    "AAE": ("sneakers", "kicks"),
    "BrE": ("bathroom", "loo"),
    "ChE": ("brother", "carnal"),
    "InE": ("eggplant", "brinjal"),
    "SgE": ("squid", "sotong"),
}

_BENCH_TEMPLATES = {
    "concise": "a photo of one {}",
    "detailed": "a bright well lit studio photo of one {} on a table",
}


def benchmark_pairset() -> PairSet:
    """A ten-pair corpus (5 dialects x 2 styles) keyed like the bundled scores."""
    pairs = []
    for style in STYLES:
        template = _BENCH_TEMPLATES[style]
        for dialect in DIALECTS:
            sae_lex, dia_lex = _BENCH_LEXEMES[dialect]
            pairs.append(PromptPair(
                id=f"bm-{dialect.lower()}-{style}",
                dialect=dialect,
                lexeme_sae=sae_lex,
                lexeme_dialect=dia_lex,
                sae_prompt=template.format(sae_lex),
                dialect_prompt=template.format(dia_lex),
                style=style,
            ))
    return PairSet(tuple(pairs))


def benchmark_scores(model: str, metrics=METRICS) -> list[GenerationScores]:
    """Score objects for one model over both styles and the given metrics."""
    out = []
    for metric in metrics:
        for style in STYLES:
            for sae, dialect in score_pairs_for(metric, model, style).values():
                out.extend([sae, dialect])
    return out
