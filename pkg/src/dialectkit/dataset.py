"""Prompt-pair corpus: loading, validation, annotation filtering, splitting.

A corpus record pairs one standard-English prompt with a prompt that is
identical except for a single synonymous dialect lexeme, optionally plus a
"polysemy" prompt that uses the dialect lexeme in its standard sense.
Records live one JSON object per line; see ``load_dataset`` for the schema.

Style bounds ("concise" prompts run short, "detailed" ones long) are
validated but non-fatal: the corpus construction only promises them
generally, so violations surface as warnings, not errors.
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass, field

import numpy as np

SAE = "SAE"
DEFAULT_DIALECTS = (SAE, "AAE", "BrE", "ChE", "InE", "SgE")

CONCISE = "concise"
DETAILED = "detailed"
CONCISE_MAX_TOKENS = 6
DETAILED_MIN_TOKENS = 9

_SPLITS = ("train", "val", "test")


class DatasetError(Exception):
    """Raised for structurally invalid corpus or annotation input."""


class DatasetFormatError(DatasetError):
    """Raised when a file cannot be parsed at all (not-JSON lines etc.)."""


@dataclass(frozen=True)
class DialectRegistry:
    """Known dialect codes; exactly one is the standard reference (SAE).

    Open to extension: build a new registry with extra codes to admit
    additional dialects without touching the loader.
    """

    codes: tuple[str, ...] = DEFAULT_DIALECTS

    def __post_init__(self):
        if self.codes.count(SAE) != 1:
            raise DatasetError("registry must contain SAE exactly once")
        if len(set(c.lower() for c in self.codes)) != len(self.codes):
            raise DatasetError("dialect codes must be unique")

    def resolve(self, code: str) -> str | None:
        for c in self.codes:
            if c.lower() == code.lower():
                return c
        return None

    def extended(self, *extra: str) -> "DialectRegistry":
        return DialectRegistry(self.codes + tuple(extra))


DEFAULT_REGISTRY = DialectRegistry()


def style_tokens(text: str) -> list[str]:
    """Whitespace tokens with punctuation-only tokens trimmed away."""
    out = []
    for tok in text.split():
        if tok.strip(string.punctuation):
            out.append(tok)
    return out


def validate_prompt_style(text: str, style: str) -> list[str]:
    """Style-bound violations for one prompt; empty list when within bounds."""
    n = len(style_tokens(text))
    if style == CONCISE and n > CONCISE_MAX_TOKENS:
        return [f"concise prompt has {n} tokens (> {CONCISE_MAX_TOKENS}): {text!r}"]
    if style == DETAILED and n < DETAILED_MIN_TOKENS:
        return [f"detailed prompt has {n} tokens (< {DETAILED_MIN_TOKENS}): {text!r}"]
    if style not in (CONCISE, DETAILED):
        raise DatasetError(f"unknown style {style!r}")
    return []


def _diff_tokens(text: str) -> list[str]:
    return [t.strip(string.punctuation).lower() for t in text.split()
            if t.strip(string.punctuation)]


def lexeme_slot_diff(sae_prompt: str, dialect_prompt: str) -> list[str] | None:
    """The single differing (sae token, dialect token) slot, or None.

    Prompts must tokenize to equal length and differ at exactly one
    position after lowercasing; returns [sae_token, dialect_token].
    """
    a = _diff_tokens(sae_prompt)
    b = _diff_tokens(dialect_prompt)
    if len(a) != len(b):
        return None
    diffs = [(x, y) for x, y in zip(a, b) if x != y]
    if len(diffs) != 1:
        return None
    return list(diffs[0])


@dataclass(frozen=True)
class PromptPair:
    """One validated corpus record."""

    id: str
    dialect: str
    lexeme_sae: str
    lexeme_dialect: str
    sae_prompt: str
    dialect_prompt: str
    style: str
    polysemy_prompt: str | None = None

    @property
    def has_polysemy(self) -> bool:
        return self.polysemy_prompt is not None


@dataclass(frozen=True)
class Violation:
    """A record-level invariant violation (the record is excluded)."""

    line: int
    pair_id: str
    message: str

    def __str__(self):
        return f"line {self.line} [{self.pair_id}]: {self.message}"


@dataclass(frozen=True)
class PairSet:
    """Immutable collection of validated prompt pairs.

    ``violations`` lists excluded records; ``style_warnings`` lists
    non-fatal style-bound violations of retained records.
    """

    pairs: tuple[PromptPair, ...]
    violations: tuple[Violation, ...] = ()
    style_warnings: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(self.pairs))
        object.__setattr__(self, "violations", tuple(self.violations))
        object.__setattr__(self, "style_warnings", tuple(self.style_warnings))
        object.__setattr__(self, "_by_id", {p.id: p for p in self.pairs})

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __contains__(self, pair_id: str) -> bool:
        return pair_id in self._by_id

    def get(self, pair_id: str) -> PromptPair:
        return self._by_id[pair_id]

    @property
    def polysemy_count(self) -> int:
        return sum(1 for p in self.pairs if p.has_polysemy)

    @property
    def prompt_count(self) -> int:
        """Total prompt strings: one standard + one dialect per pair, plus polysemy."""
        return 2 * len(self.pairs) + self.polysemy_count

    def by_dialect(self) -> dict[str, list[PromptPair]]:
        out: dict[str, list[PromptPair]] = {}
        for p in self.pairs:
            out.setdefault(p.dialect, []).append(p)
        return out


_REQUIRED_KEYS = {"id", "dialect", "lexeme_sae", "lexeme_dialect",
                  "sae_prompt", "dialect_prompt", "style"}
_ALLOWED_KEYS = _REQUIRED_KEYS | {"polysemy_prompt"}


def load_dataset(path, registry: DialectRegistry = DEFAULT_REGISTRY) -> PairSet:
    """Load a line-delimited JSON corpus file.

    Structural problems (unparseable line, missing/unknown key, duplicate id,
    unknown dialect code, a pair claiming the standard dialect) raise
    DatasetError naming the line.  Record-level invariant violations (prompts
    not differing in exactly the lexeme slot, polysemy prompt missing the
    dialect lexeme) exclude the record and are reported in
    ``PairSet.violations``; style-bound violations are warnings only.
    """
    pairs: list[PromptPair] = []
    violations: list[Violation] = []
    warnings: list[str] = []
    seen_ids: set[str] = set()

    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as e:
                raise DatasetFormatError(f"line {lineno}: malformed record ({e.msg})") from e
            if not isinstance(rec, dict):
                raise DatasetFormatError(f"line {lineno}: record must be an object")
            missing = _REQUIRED_KEYS - rec.keys()
            if missing:
                raise DatasetError(f"line {lineno}: missing keys {sorted(missing)}")
            unknown = rec.keys() - _ALLOWED_KEYS
            if unknown:
                raise DatasetError(f"line {lineno}: unknown keys {sorted(unknown)}")
            for k, v in rec.items():
                if not isinstance(v, str):
                    raise DatasetError(f"line {lineno}: key {k!r} must be a string")

            pid = rec["id"]
            if pid in seen_ids:
                raise DatasetError(f"line {lineno}: duplicate id {pid!r}")
            seen_ids.add(pid)

            dialect = registry.resolve(rec["dialect"])
            if dialect is None:
                raise DatasetError(
                    f"line {lineno}: unknown dialect code {rec['dialect']!r}"
                )
            if dialect == SAE:
                raise DatasetError(f"line {lineno}: pair dialect must be non-SAE")

            style = rec["style"].lower()
            if style not in (CONCISE, DETAILED):
                raise DatasetError(f"line {lineno}: unknown style {rec['style']!r}")

            pair = PromptPair(
                id=pid,
                dialect=dialect,
                lexeme_sae=rec["lexeme_sae"],
                lexeme_dialect=rec["lexeme_dialect"],
                sae_prompt=rec["sae_prompt"],
                dialect_prompt=rec["dialect_prompt"],
                style=style,
                polysemy_prompt=rec.get("polysemy_prompt"),
            )

            slot = lexeme_slot_diff(pair.sae_prompt, pair.dialect_prompt)
            if slot is None:
                a = _diff_tokens(pair.sae_prompt)
                b = _diff_tokens(pair.dialect_prompt)
                differing = [f"{x}/{y}" for x, y in zip(a, b) if x != y] or ["<none>"]
                violations.append(Violation(
                    lineno, pid,
                    "prompts must differ in exactly one token slot; differing "
                    f"tokens: {', '.join(differing)}",
                ))
                continue
            want = [pair.lexeme_sae.lower(), pair.lexeme_dialect.lower()]
            if slot != want:
                violations.append(Violation(
                    lineno, pid,
                    f"differing tokens {slot[0]}/{slot[1]} do not match the "
                    f"declared lexemes {want[0]}/{want[1]}",
                ))
                continue
            if pair.polysemy_prompt is not None and (
                pair.lexeme_dialect.lower() not in _diff_tokens(pair.polysemy_prompt)
            ):
                violations.append(Violation(
                    lineno, pid,
                    f"polysemy prompt does not contain lexeme {pair.lexeme_dialect!r}",
                ))
                continue

            for text in (pair.sae_prompt, pair.dialect_prompt):
                for w in validate_prompt_style(text, style):
                    warnings.append(f"line {lineno} [{pid}]: {w}")
            pairs.append(pair)

    return PairSet(tuple(pairs), tuple(violations), tuple(warnings))


# ---------------------------------------------------------------------------
# Annotation filtering

YES, NO, DONT_KNOW = "yes", "no", "dontknow"
_ANSWERS = (YES, NO, DONT_KNOW)


@dataclass(frozen=True)
class AnnotationRecord:
    """One speaker's two-question judgment of one pair.

    q1: does the dialect prompt make sense and match the standard prompt?
    q2: is the dialect prompt ambiguous in a standard-English reading?
    """

    pair_id: str
    annotator_id: str
    q1: str
    q2: str

    def __post_init__(self):
        if self.q1 not in _ANSWERS or self.q2 not in _ANSWERS:
            raise DatasetError(
                f"annotation {self.pair_id}/{self.annotator_id}: answers must be "
                f"one of {_ANSWERS}"
            )


def load_annotations(path) -> list[AnnotationRecord]:
    """Load line-delimited JSON annotations (pair_id, annotator_id, q1, q2)."""
    out = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as e:
                raise DatasetFormatError(f"line {lineno}: malformed record ({e.msg})") from e
            try:
                out.append(AnnotationRecord(
                    rec["pair_id"], rec["annotator_id"],
                    rec["q1"].lower(), rec["q2"].lower(),
                ))
            except (KeyError, TypeError, AttributeError) as e:
                raise DatasetError(f"line {lineno}: bad annotation record") from e
    return out


REJECT_AMBIGUOUS = "ambiguous"
REJECT_NOT_SYNONYMOUS = "not_synonymous"
REJECT_UNCERTAIN_MEANING = "uncertain_meaning"
REJECT_UNCERTAIN_AMBIGUITY = "uncertain_ambiguity"


def apply_annotation_filter(
    pairs: PairSet, annotations: list[AnnotationRecord]
) -> tuple[PairSet, dict[str, list[str]]]:
    """Keep a pair only when both speakers answered q1 = yes and q2 = no.

    Every pair needs exactly two annotations from distinct annotators.
    Returns the retained set and a rejection log keyed by reason.
    """
    by_pair: dict[str, list[AnnotationRecord]] = {}
    seen: set[tuple[str, str]] = set()
    for rec in annotations:
        if rec.pair_id not in pairs:
            raise DatasetError(f"annotation references unknown pair {rec.pair_id!r}")
        key = (rec.pair_id, rec.annotator_id)
        if key in seen:
            raise DatasetError(
                f"duplicate annotation for pair {rec.pair_id!r} by {rec.annotator_id!r}"
            )
        seen.add(key)
        by_pair.setdefault(rec.pair_id, []).append(rec)

    retained: list[PromptPair] = []
    rejections: dict[str, list[str]] = {}
    for pair in pairs:
        recs = by_pair.get(pair.id, [])
        if len(recs) != 2:
            raise DatasetError(
                f"pair {pair.id!r} has {len(recs)} annotations, expected 2"
            )
        if all(r.q1 == YES and r.q2 == NO for r in recs):
            retained.append(pair)
            continue
        if any(r.q2 == YES for r in recs):
            reason = REJECT_AMBIGUOUS
        elif any(r.q1 == NO for r in recs):
            reason = REJECT_NOT_SYNONYMOUS
        elif any(r.q1 == DONT_KNOW for r in recs):
            reason = REJECT_UNCERTAIN_MEANING
        else:
            reason = REJECT_UNCERTAIN_AMBIGUITY
        rejections.setdefault(reason, []).append(pair.id)

    return PairSet(tuple(retained)), rejections


# ---------------------------------------------------------------------------
# Splitting


@dataclass(frozen=True)
class SplitAssignment:
    """Deterministic pair-id -> split mapping.

    ``seed``/``ratios`` are None when the assignment was read back from a
    file rather than produced by :func:`split_dataset`.
    """

    mapping: dict[str, str]
    seed: int | None
    ratios: tuple[float, float, float] | None

    def __post_init__(self):
        object.__setattr__(self, "mapping", dict(self.mapping))
        for split in self.mapping.values():
            if split not in _SPLITS:
                raise DatasetError(f"unknown split label {split!r}")

    def ids_for(self, split: str) -> list[str]:
        return sorted(pid for pid, s in self.mapping.items() if s == split)

    def sizes(self) -> tuple[int, int, int]:
        return tuple(sum(1 for s in self.mapping.values() if s == name)
                     for name in _SPLITS)


def floor_targets(n: int, ratios) -> tuple[int, int, int]:
    """Floor-apportioned split sizes; the remainder goes to train."""
    r1, r2, r3 = ratios
    n_val = int(np.floor(n * r2))
    n_test = int(np.floor(n * r3))
    return n - n_val - n_test, n_val, n_test


def split_dataset(
    pairs: PairSet,
    ratios=(0.8, 0.1, 0.1),
    seed: int = 0,
    group_by_lexeme: bool = False,
) -> SplitAssignment:
    """Assign every pair to train/val/test.

    Pairs are ordered by id, shuffled with numpy's seeded PCG64 generator,
    and cut at floor-apportioned boundaries, so the result depends only on
    (pair ids, ratios, seed) and never on input record order.  A pair's
    polysemy prompt travels with the pair, keeping it in the same split.

    ``group_by_lexeme`` keeps all pairs sharing a standard lexeme in one
    split to prevent lexical leakage; realized sizes are then best-effort
    around the same targets.
    """
    if len(pairs) == 0:
        raise DatasetError("cannot split an empty pair set")
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r < 0 for r in ratios):
        raise DatasetError("ratios must be three nonnegative numbers")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise DatasetError(f"ratios must sum to 1, got {sum(ratios)}")

    rng = np.random.default_rng(seed)
    mapping: dict[str, str] = {}

    if not group_by_lexeme:
        ids = sorted(p.id for p in pairs)
        order = rng.permutation(len(ids))
        n_train, n_val, _ = floor_targets(len(ids), ratios)
        for rank, idx in enumerate(order):
            if rank < n_train:
                split = "train"
            elif rank < n_train + n_val:
                split = "val"
            else:
                split = "test"
            mapping[ids[idx]] = split
    else:
        groups: dict[str, list[str]] = {}
        for p in pairs:
            groups.setdefault(p.lexeme_sae.lower(), []).append(p.id)
        keys = sorted(groups)
        order = rng.permutation(len(keys))
        n_train, n_val, _ = floor_targets(len(pairs), ratios)
        placed = 0
        for idx in order:
            ids = groups[keys[idx]]
            if placed < n_train:
                split = "train"
            elif placed < n_train + n_val:
                split = "val"
            else:
                split = "test"
            for pid in sorted(ids):
                mapping[pid] = split
            placed += len(ids)

    return SplitAssignment(mapping, seed, ratios)


def write_split(assignment: SplitAssignment, path) -> None:
    """Write ``pair_id<TAB>split`` lines, sorted by pair id."""
    with open(path, "w", encoding="utf-8") as f:
        for pid in sorted(assignment.mapping):
            f.write(f"{pid}\t{assignment.mapping[pid]}\n")


def read_split(path) -> SplitAssignment:
    """Read a split file written by :func:`write_split`."""
    mapping: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            raw = raw.rstrip("\n")
            if not raw:
                continue
            parts = raw.split("\t")
            if len(parts) != 2 or parts[1] not in _SPLITS:
                raise DatasetError(f"line {lineno}: expected 'pair_id<TAB>train|val|test'")
            if parts[0] in mapping:
                raise DatasetError(f"line {lineno}: duplicate pair id {parts[0]!r}")
            mapping[parts[0]] = parts[1]
    return SplitAssignment(mapping, seed=None, ratios=None)
