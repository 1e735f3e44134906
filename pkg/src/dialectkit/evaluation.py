"""Benchmark evaluation math over precomputed alignment scores.

Generations are scored against the *standard* prompt of each pair, for both
the standard-prompt and dialect-prompt generations; the dialect-induced
performance drop is the relative shortfall of the dialect side.  Two
aggregations are provided:

* ``ratio_of_averages`` (default): (mean standard perf - mean dialect perf)
  / mean standard perf, over all pairs of a dialect.  This is the
  aggregation that reproduces the published benchmark tables.
* ``mean_of_pair_drops``: the unweighted mean of per-pair drops.

Both are reported as percentages.  Pairs whose standard-side performance is
zero have no defined drop; they are excluded with a logged warning.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

VARIANT_SAE = "sae"
VARIANT_DIALECT = "dialect"
_VARIANTS = (VARIANT_SAE, VARIANT_DIALECT)

METRIC_VQASCORE = "vqascore"
METRIC_CLIPSCORE = "clipscore"
METRIC_HUMAN = "human"

RATIO_OF_AVERAGES = "ratio_of_averages"
MEAN_OF_PAIR_DROPS = "mean_of_pair_drops"
_MODES = (RATIO_OF_AVERAGES, MEAN_OF_PAIR_DROPS)

HUMAN_RAW_MAX = 10.0
HUMAN_SCALE = 0.1

SCORE_CSV_HEADER = ["pair_id", "variant", "metric", "sample_index", "score"]
REPORT_CSV_HEADER = ["model", "style", "metric", "dialect", "drop_pct"]
OVERALL_KEY = "overall"


class EvaluationError(Exception):
    """Raised for malformed scores or undefined aggregations."""


class ScoreFormatError(EvaluationError):
    """Raised when a score CSV cannot be parsed."""


@dataclass(frozen=True)
class GenerationScores:
    """Alignment scores of the n generations for one prompt variant of one pair."""

    pair_id: str
    variant: str
    metric: str
    samples: tuple[float, ...]

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise EvaluationError(f"unknown variant {self.variant!r}")
        samples = tuple(float(s) for s in self.samples)
        if len(samples) < 1:
            raise EvaluationError(f"pair {self.pair_id}: empty samples")
        if not all(np.isfinite(samples)):
            raise EvaluationError(f"pair {self.pair_id}: non-finite score")
        if self.metric == METRIC_HUMAN and (
            min(samples) < 0.0 or max(samples) > HUMAN_RAW_MAX
        ):
            raise EvaluationError(
                f"pair {self.pair_id}: human scores must lie in [0, {HUMAN_RAW_MAX}]"
            )
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "metric", self.metric.lower())


def pair_performance(scores: GenerationScores) -> float:
    """Arithmetic mean of the per-generation scores."""
    return float(np.mean(scores.samples))


def _check_pairing(sae: GenerationScores, dialect: GenerationScores) -> None:
    if sae.variant != VARIANT_SAE or dialect.variant != VARIANT_DIALECT:
        raise EvaluationError("pair_drop expects (sae, dialect) variants in order")
    if sae.pair_id != dialect.pair_id:
        raise EvaluationError(
            f"mismatched pair ids {sae.pair_id!r} vs {dialect.pair_id!r}"
        )
    if sae.metric != dialect.metric:
        raise EvaluationError(
            f"mixed metrics {sae.metric!r} vs {dialect.metric!r} for {sae.pair_id!r}"
        )


def pair_drop(sae: GenerationScores, dialect: GenerationScores) -> float:
    """Relative drop (fraction) of one pair: (perf_s - perf_d) / perf_s."""
    _check_pairing(sae, dialect)
    perf_s = pair_performance(sae)
    if perf_s <= 0.0:
        raise EvaluationError(
            f"pair {sae.pair_id!r}: zero standard-side performance, drop undefined"
        )
    return (perf_s - pair_performance(dialect)) / perf_s


def _usable_pairs(pairs):
    usable, excluded = [], []
    for sae, dialect in pairs:
        _check_pairing(sae, dialect)
        if pair_performance(sae) <= 0.0:
            excluded.append(sae.pair_id)
        else:
            usable.append((sae, dialect))
    if excluded:
        logger.warning(
            "excluded %d pair(s) with zero standard-side performance: %s",
            len(excluded), ", ".join(excluded),
        )
    return usable, excluded


def dialect_drop(pairs, mode: str = RATIO_OF_AVERAGES) -> float:
    """Aggregate drop (percent) over the (sae, dialect) score pairs of one dialect."""
    if mode not in _MODES:
        raise EvaluationError(f"unknown aggregation mode {mode!r}")
    pairs = list(pairs)
    if not pairs:
        raise EvaluationError("dialect_drop needs at least one pair")
    metrics = {s.metric for s, _ in pairs}
    if len(metrics) > 1:
        raise EvaluationError(f"mixed metrics in one aggregation: {sorted(metrics)}")
    usable, _ = _usable_pairs(pairs)
    if not usable:
        raise EvaluationError("all pairs excluded (zero standard-side performance)")
    if mode == RATIO_OF_AVERAGES:
        mean_s = float(np.mean([pair_performance(s) for s, _ in usable]))
        mean_d = float(np.mean([pair_performance(d) for _, d in usable]))
        return (mean_s - mean_d) / mean_s * 100.0
    return float(np.mean([pair_drop(s, d) for s, d in usable])) * 100.0


def overall_drop(per_dialect: dict[str, float]) -> float:
    """Unweighted mean of per-dialect drop percentages."""
    if not per_dialect:
        raise EvaluationError("overall_drop needs at least one dialect")
    return float(np.mean([per_dialect[k] for k in sorted(per_dialect)]))


def scale_human_scores(raw: GenerationScores) -> GenerationScores:
    """Scale raw 0-10 human ratings by 0.1 onto the automatic metrics' range."""
    if raw.metric != METRIC_HUMAN:
        raise EvaluationError(f"expected human metric, got {raw.metric!r}")
    return GenerationScores(
        raw.pair_id, raw.variant, raw.metric,
        tuple(s * HUMAN_SCALE for s in raw.samples),
    )


def pearson_r(x, y) -> float:
    """Sample Pearson correlation, clamped to [-1, 1]."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise EvaluationError(f"length mismatch: {x.shape} vs {y.shape}")
    if x.size < 2:
        raise EvaluationError("need at least two points")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float(np.sqrt(dx @ dx))
    sy = float(np.sqrt(dy @ dy))
    if sx == 0.0 or sy == 0.0:
        raise EvaluationError("zero variance input")
    return float(np.clip(float(dx @ dy) / (sx * sy), -1.0, 1.0))


# ---------------------------------------------------------------------------
# Score file io

def read_score_csv(path) -> list[GenerationScores]:
    """Read a score CSV (pair_id, variant, metric, sample_index, score).

    Rows of one (pair, variant, metric) group into a single GenerationScores
    with samples ordered by sample_index.
    """
    groups: dict[tuple[str, str, str], list[tuple[int, float]]] = {}
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != SCORE_CSV_HEADER:
            raise ScoreFormatError(
                f"line 1: expected header {','.join(SCORE_CSV_HEADER)}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise ScoreFormatError(f"line {lineno}: expected 5 columns")
            pid, variant, metric, idx_s, score_s = (c.strip() for c in row)
            if variant not in _VARIANTS:
                raise ScoreFormatError(f"line {lineno}: unknown variant {variant!r}")
            try:
                idx = int(idx_s)
                score = float(score_s)
            except ValueError:
                raise ScoreFormatError(
                    f"line {lineno}: sample_index/score must be numeric"
                ) from None
            key = (pid, variant, metric.lower())
            bucket = groups.setdefault(key, [])
            if any(i == idx for i, _ in bucket):
                raise ScoreFormatError(
                    f"line {lineno}: duplicate sample_index {idx} for {key}"
                )
            bucket.append((idx, score))

    out = []
    for (pid, variant, metric), bucket in sorted(groups.items()):
        samples = tuple(s for _, s in sorted(bucket))
        out.append(GenerationScores(pid, variant, metric, samples))
    return out


def write_score_csv(scores, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f)
        w.writerow(SCORE_CSV_HEADER)
        for s in scores:
            for i, v in enumerate(s.samples):
                w.writerow([s.pair_id, s.variant, s.metric, i, repr(float(v))])


# ---------------------------------------------------------------------------
# Reports


@dataclass(frozen=True)
class DialectReport:
    """Aggregated drops for one (model, metric, style) slice.

    ``metric_correlations`` holds pairwise Pearson r between the per-dialect
    drop vectors of every metric present in the score set (the only
    multi-point axis inside a single report).
    """

    model: str
    metric: str
    style: str
    mode: str
    per_dialect_drop: dict[str, float]
    overall_drop: float
    incomplete_pairs: int
    excluded_pairs: int
    metric_correlations: dict[tuple[str, str], float]

    def csv_rows(self) -> list[list[str]]:
        rows = []
        for dialect in sorted(self.per_dialect_drop):
            rows.append([self.model, self.style, self.metric, dialect,
                         repr(self.per_dialect_drop[dialect])])
        rows.append([self.model, self.style, self.metric, OVERALL_KEY,
                     repr(self.overall_drop)])
        return rows


def _complete_pairs(scores, dataset, metric: str, style: str):
    """Group scores into (sae, dialect) tuples per dialect, tracking gaps."""
    wanted = {}
    for s in scores:
        if s.metric != metric:
            continue
        if s.pair_id not in dataset:
            continue
        pair = dataset.get(s.pair_id)
        if style != "all" and pair.style != style:
            continue
        wanted.setdefault(s.pair_id, {})[s.variant] = s

    by_dialect: dict[str, list] = {}
    incomplete = 0
    for pid in sorted(wanted):
        variants = wanted[pid]
        if set(variants) != set(_VARIANTS):
            incomplete += 1
            logger.warning("pair %s missing a variant for metric %s", pid, metric)
            continue
        dialect = dataset.get(pid).dialect
        by_dialect.setdefault(dialect, []).append(
            (variants[VARIANT_SAE], variants[VARIANT_DIALECT])
        )
    return by_dialect, incomplete


def build_report(
    scores,
    dataset,
    metric: str = METRIC_VQASCORE,
    style: str = "all",
    mode: str = RATIO_OF_AVERAGES,
    model: str = "model",
) -> DialectReport:
    """Aggregate a score set into per-dialect and overall drops.

    Raw human ratings may be passed unscaled: the linear 0.1 scaling cancels
    in the drop ratio, so drops are identical either way.  Pairs missing a
    variant are skipped with a warning count; zero-standard-performance
    pairs are excluded inside the aggregation.
    """
    metric = metric.lower()
    scores = list(scores)
    by_dialect, incomplete = _complete_pairs(scores, dataset, metric, style)
    if not by_dialect:
        raise EvaluationError("no complete pairs")

    per_dialect = {}
    excluded = 0
    for dialect in sorted(by_dialect):
        pairs = by_dialect[dialect]
        usable, exc = _usable_pairs(pairs)
        excluded += len(exc)
        if usable:
            per_dialect[dialect] = dialect_drop(usable, mode)
    if not per_dialect:
        raise EvaluationError("no complete pairs")

    correlations = {}
    available = sorted({s.metric for s in scores})
    if len(available) > 1:
        vectors = {}
        for m in available:
            bd, _ = _complete_pairs(scores, dataset, m, style)
            drops = {
                d: dialect_drop(bd[d], mode)
                for d in sorted(bd)
                if _usable_pairs(bd[d])[0]
            }
            vectors[m] = drops
        for i, m1 in enumerate(available):
            for m2 in available[i + 1:]:
                shared = sorted(set(vectors[m1]) & set(vectors[m2]))
                if len(shared) >= 2:
                    try:
                        correlations[(m1, m2)] = pearson_r(
                            [vectors[m1][d] for d in shared],
                            [vectors[m2][d] for d in shared],
                        )
                    except EvaluationError:
                        pass

    return DialectReport(
        model=model,
        metric=metric,
        style=style,
        mode=mode,
        per_dialect_drop=per_dialect,
        overall_drop=overall_drop(per_dialect),
        incomplete_pairs=incomplete,
        excluded_pairs=excluded,
        metric_correlations=correlations,
    )


def render_markdown(reports) -> str:
    """Render one or more reports as a drop table (two decimals, like the
    published formatting; the CSV keeps full precision)."""
    reports = list(reports)
    dialects = sorted({d for r in reports for d in r.per_dialect_drop})
    lines = [
        "| Model | Style | Metric | " + " | ".join(dialects) + " | Overall |",
        "|" + "---|" * (len(dialects) + 4),
    ]
    for r in reports:
        cells = [
            f"{r.per_dialect_drop[d]:.2f}" if d in r.per_dialect_drop else "-"
            for d in dialects
        ]
        lines.append(
            f"| {r.model} | {r.style} | {r.metric} | "
            + " | ".join(cells)
            + f" | {r.overall_drop:.2f} |"
        )
    return "\n".join(lines) + "\n"


def report_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(REPORT_CSV_HEADER)
    for r in reports:
        w.writerows(r.csv_rows())
    return buf.getvalue()
