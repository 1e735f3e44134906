import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dialectkit.dataset import (
    AnnotationRecord,
    DatasetError,
    DatasetFormatError,
    DialectRegistry,
    PairSet,
    REJECT_AMBIGUOUS,
    REJECT_NOT_SYNONYMOUS,
    REJECT_UNCERTAIN_MEANING,
    SplitAssignment,
    apply_annotation_filter,
    floor_targets,
    lexeme_slot_diff,
    load_annotations,
    load_dataset,
    read_split,
    split_dataset,
    style_tokens,
    validate_prompt_style,
    write_split,
)

from conftest import make_record, write_jsonl


class TestLoadDataset:
    def test_three_valid_records(self, tiny_corpus):
        pairs = load_dataset(tiny_corpus)
        assert len(pairs) == 3
        assert not pairs.violations
        assert pairs.polysemy_count == 1
        assert pairs.prompt_count == 7

    def test_sae_dialect_rejected(self, tmp_path):
        rec = make_record(0)
        rec["dialect"] = "SAE"
        path = write_jsonl(tmp_path / "sae.jsonl", [rec])
        with pytest.raises(DatasetError, match="must be non-SAE"):
            load_dataset(path)

    def test_unknown_dialect_rejected(self, tmp_path):
        rec = make_record(0)
        rec["dialect"] = "XYZ"
        path = write_jsonl(tmp_path / "unk.jsonl", [rec])
        with pytest.raises(DatasetError, match="unknown dialect code 'XYZ'"):
            load_dataset(path)

    def test_registry_extension_admits_new_code(self, tmp_path):
        rec = make_record(0)
        rec["dialect"] = "NgE"
        path = write_jsonl(tmp_path / "nge.jsonl", [rec])
        registry = DialectRegistry().extended("NgE")
        pairs = load_dataset(path, registry=registry)
        assert pairs.pairs[0].dialect == "NgE"

    def test_duplicate_id_rejected(self, tmp_path):
        path = write_jsonl(tmp_path / "dup.jsonl", [make_record(1), make_record(1)])
        with pytest.raises(DatasetError, match="duplicate id 'pair-001'"):
            load_dataset(path)

    def test_malformed_line_reports_line_number(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text(json.dumps(make_record(0)) + "\nnot json at all\n")
        with pytest.raises(DatasetFormatError, match="line 2"):
            load_dataset(path)

    def test_two_token_difference_reported_with_tokens(self, tmp_path):
        rec = make_record(0)
        rec["sae_prompt"] = "a spacious bathroom today"
        rec["dialect_prompt"] = "a cramped loo today"
        path = write_jsonl(tmp_path / "twotok.jsonl", [rec])
        pairs = load_dataset(path)
        assert len(pairs) == 0
        assert len(pairs.violations) == 1
        v = str(pairs.violations[0])
        assert "line 1" in v and "spacious/cramped" in v and "bathroom/loo" in v

    def test_wrong_lexeme_slot_reported(self, tmp_path):
        rec = make_record(0)
        rec["dialect_prompt"] = "a spacious washroom"
        path = write_jsonl(tmp_path / "slot.jsonl", [rec])
        pairs = load_dataset(path)
        assert len(pairs.violations) == 1
        assert "washroom" in pairs.violations[0].message

    def test_polysemy_missing_lexeme_reported(self, tmp_path):
        rec = make_record(0, polysemy="a photo of something else entirely")
        path = write_jsonl(tmp_path / "poly.jsonl", [rec])
        pairs = load_dataset(path)
        assert len(pairs.violations) == 1
        assert "polysemy" in pairs.violations[0].message

    def test_case_insensitive_lexeme_slot(self, tmp_path):
        rec = make_record(0, template="A spacious {}")
        rec["sae_prompt"] = "A spacious Bathroom"
        path = write_jsonl(tmp_path / "case.jsonl", [rec])
        pairs = load_dataset(path)
        assert len(pairs) == 1 and not pairs.violations

    def test_missing_key_rejected(self, tmp_path):
        rec = make_record(0)
        del rec["lexeme_sae"]
        path = write_jsonl(tmp_path / "miss.jsonl", [rec])
        with pytest.raises(DatasetError, match="missing keys"):
            load_dataset(path)

    def test_unknown_key_rejected(self, tmp_path):
        rec = make_record(0)
        rec["extra"] = "x"
        path = write_jsonl(tmp_path / "extra.jsonl", [rec])
        with pytest.raises(DatasetError, match="unknown keys"):
            load_dataset(path)

    def test_style_violation_is_warning_not_error(self, tmp_path):
        rec = make_record(0, template="a very remarkably spacious and enormous {}")
        path = write_jsonl(tmp_path / "style.jsonl", [rec])
        pairs = load_dataset(path)
        assert len(pairs) == 1
        assert len(pairs.style_warnings) == 2  # both prompts run long


class TestPromptStyle:
    def test_concise_ok(self):
        assert validate_prompt_style("a spacious loo", "concise") == []

    def test_detailed_ok(self):
        text = "a clean and tidy loo with shiny blue wall tiles"
        assert validate_prompt_style(text, "detailed") == []

    def test_concise_boundary_violation(self):
        violations = validate_prompt_style("one two three four five six seven", "concise")
        assert len(violations) == 1 and "7" in violations[0]

    def test_detailed_too_short(self):
        violations = validate_prompt_style("much too short", "detailed")
        assert len(violations) == 1

    def test_punctuation_only_tokens_ignored(self):
        assert style_tokens("a - spacious , loo !") == ["a", "spacious", "loo"]

    def test_unknown_style_rejected(self):
        with pytest.raises(DatasetError, match="unknown style"):
            validate_prompt_style("x", "verbose")


class TestLexemeSlotDiff:
    def test_single_slot(self):
        assert lexeme_slot_diff("a spacious bathroom", "a spacious loo") == ["bathroom", "loo"]

    def test_no_difference(self):
        assert lexeme_slot_diff("same text", "same text") is None

    def test_length_mismatch(self):
        assert lexeme_slot_diff("a b c", "a b") is None

    def test_punctuation_tolerated(self):
        assert lexeme_slot_diff("a spacious bathroom.", "a spacious loo.") == ["bathroom", "loo"]


def annotation(pid, annotator, q1="yes", q2="no"):
    return AnnotationRecord(pid, annotator, q1, q2)


class TestAnnotationFilter:
    def make_pairs(self, tmp_path, n=3):
        path = write_jsonl(tmp_path / "p.jsonl", [make_record(i) for i in range(n)])
        return load_dataset(path)

    def test_both_yes_no_retained(self, tmp_path):
        pairs = self.make_pairs(tmp_path, 1)
        retained, rejections = apply_annotation_filter(
            pairs, [annotation("pair-000", "a1"), annotation("pair-000", "a2")]
        )
        assert len(retained) == 1 and not rejections

    def test_dontknow_rejected(self, tmp_path):
        pairs = self.make_pairs(tmp_path, 1)
        retained, rejections = apply_annotation_filter(
            pairs,
            [annotation("pair-000", "a1", q1="dontknow"), annotation("pair-000", "a2")],
        )
        assert len(retained) == 0
        assert rejections == {REJECT_UNCERTAIN_MEANING: ["pair-000"]}

    def test_ambiguous_rejection_reason(self, tmp_path):
        pairs = self.make_pairs(tmp_path, 1)
        retained, rejections = apply_annotation_filter(
            pairs,
            [annotation("pair-000", "a1"), annotation("pair-000", "a2", q2="yes")],
        )
        assert len(retained) == 0
        assert rejections == {REJECT_AMBIGUOUS: ["pair-000"]}

    def test_not_synonymous_reason(self, tmp_path):
        pairs = self.make_pairs(tmp_path, 1)
        _, rejections = apply_annotation_filter(
            pairs,
            [annotation("pair-000", "a1", q1="no"), annotation("pair-000", "a2")],
        )
        assert rejections == {REJECT_NOT_SYNONYMOUS: ["pair-000"]}

    def test_wrong_annotation_count_errors(self, tmp_path):
        pairs = self.make_pairs(tmp_path, 1)
        with pytest.raises(DatasetError, match="pair-000.*1 annotations"):
            apply_annotation_filter(pairs, [annotation("pair-000", "a1")])
        with pytest.raises(DatasetError, match="3 annotations"):
            apply_annotation_filter(pairs, [
                annotation("pair-000", "a1"),
                annotation("pair-000", "a2"),
                annotation("pair-000", "a3"),
            ])

    def test_duplicate_annotator_errors(self, tmp_path):
        pairs = self.make_pairs(tmp_path, 1)
        with pytest.raises(DatasetError, match="duplicate annotation"):
            apply_annotation_filter(pairs, [
                annotation("pair-000", "a1"), annotation("pair-000", "a1"),
            ])

    def test_unknown_pair_errors(self, tmp_path):
        pairs = self.make_pairs(tmp_path, 1)
        with pytest.raises(DatasetError, match="unknown pair"):
            apply_annotation_filter(pairs, [annotation("ghost", "a1")])

    def test_filter_returns_subset(self, tmp_path):
        pairs = self.make_pairs(tmp_path, 3)
        annotations = []
        for i, q in enumerate([("yes", "no"), ("yes", "yes"), ("no", "no")]):
            annotations += [
                annotation(f"pair-{i:03d}", "a1", q1=q[0], q2=q[1]),
                annotation(f"pair-{i:03d}", "a2"),
            ]
        retained, rejections = apply_annotation_filter(pairs, annotations)
        assert {p.id for p in retained} <= {p.id for p in pairs}
        assert len(retained) == 1
        assert set(rejections) == {REJECT_AMBIGUOUS, REJECT_NOT_SYNONYMOUS}

    @given(
        flips=st.lists(st.tuples(st.integers(0, 4), st.sampled_from(["q1", "q2"])),
                       max_size=4),
        seed=st.integers(0, 1000),
    )
    @settings(max_examples=40)
    def test_monotone_under_answer_degradation(self, tmp_path_factory, flips, seed):
        # flipping any q1 to "no" or q2 to "yes" never adds a retained pair
        rng = np.random.default_rng(seed)
        tmp = tmp_path_factory.mktemp("mono")
        path = write_jsonl(tmp / "p.jsonl", [make_record(i) for i in range(5)])
        pairs = load_dataset(path)
        base = []
        for i in range(5):
            q1 = "yes" if rng.random() < 0.8 else "dontknow"
            q2 = "no" if rng.random() < 0.8 else "dontknow"
            base += [annotation(f"pair-{i:03d}", "a1", q1=q1, q2=q2),
                     annotation(f"pair-{i:03d}", "a2")]
        retained_before, _ = apply_annotation_filter(pairs, base)
        degraded = list(base)
        for idx, field in flips:
            rec = degraded[2 * idx]
            degraded[2 * idx] = AnnotationRecord(
                rec.pair_id, rec.annotator_id,
                "no" if field == "q1" else rec.q1,
                "yes" if field == "q2" else rec.q2,
            )
        retained_after, _ = apply_annotation_filter(pairs, degraded)
        assert {p.id for p in retained_after} <= {p.id for p in retained_before}


class TestSplit:
    def make_pairs(self, tmp_path, n):
        path = write_jsonl(tmp_path / "p.jsonl", [make_record(i) for i in range(n)])
        return load_dataset(path)

    def test_exact_apportionment_100(self, tmp_path):
        pairs = self.make_pairs(tmp_path, 100)
        assert split_dataset(pairs, seed=1).sizes() == (80, 10, 10)

    def test_floor_apportionment_10(self, tmp_path):
        pairs = self.make_pairs(tmp_path, 10)
        assert split_dataset(pairs, seed=1).sizes() == (8, 1, 1)

    def test_remainder_goes_to_train(self, tmp_path):
        pairs = self.make_pairs(tmp_path, 7)
        # targets: val floor(0.7) = 0, test floor(0.7) = 0, train 7
        assert split_dataset(pairs, seed=1).sizes() == (7, 0, 0)
        assert floor_targets(7, (0.5, 0.3, 0.2)) == (4, 2, 1)

    def test_deterministic_under_seed(self, tmp_path):
        pairs = self.make_pairs(tmp_path, 50)
        a = split_dataset(pairs, seed=42)
        b = split_dataset(pairs, seed=42)
        assert a.mapping == b.mapping
        c = split_dataset(pairs, seed=43)
        assert a.mapping != c.mapping

    def test_partition_property(self, tmp_path):
        pairs = self.make_pairs(tmp_path, 23)
        assignment = split_dataset(pairs, seed=3)
        assert sorted(assignment.mapping) == sorted(p.id for p in pairs)
        assert sum(assignment.sizes()) == 23

    def test_permutation_invariance(self, tmp_path):
        records = [make_record(i) for i in range(12)]
        p1 = load_dataset(write_jsonl(tmp_path / "fwd.jsonl", records))
        p2 = load_dataset(write_jsonl(tmp_path / "rev.jsonl", records[::-1]))
        assert split_dataset(p1, seed=9).mapping == split_dataset(p2, seed=9).mapping

    def test_empty_rejected(self):
        with pytest.raises(DatasetError, match="empty"):
            split_dataset(PairSet(()), seed=0)

    def test_bad_ratios_rejected(self, tmp_path):
        pairs = self.make_pairs(tmp_path, 5)
        with pytest.raises(DatasetError, match="sum to 1"):
            split_dataset(pairs, ratios=(0.8, 0.1, 0.2), seed=0)
        with pytest.raises(DatasetError, match="nonnegative"):
            split_dataset(pairs, ratios=(1.2, -0.1, -0.1), seed=0)

    def test_lexeme_grouping_prevents_leakage(self, tmp_path):
        records = []
        lexes = [("bathroom", "loo"), ("truck", "lorry"), ("cookie", "biscuit"),
                 ("sweater", "jumper"), ("apartment", "flat")]
        idx = 0
        for sae_lex, dia_lex in lexes:
            for _ in range(6):
                records.append(make_record(idx, lexeme_sae=sae_lex,
                                           lexeme_dialect=dia_lex))
                idx += 1
        pairs = load_dataset(write_jsonl(tmp_path / "g.jsonl", records))
        assignment = split_dataset(pairs, seed=5, group_by_lexeme=True)
        placement = {}
        for p in pairs:
            placement.setdefault(p.lexeme_sae, set()).add(assignment.mapping[p.id])
        assert all(len(s) == 1 for s in placement.values())

    def test_split_file_round_trip(self, tmp_path):
        pairs = self.make_pairs(tmp_path, 10)
        assignment = split_dataset(pairs, seed=0)
        path = tmp_path / "split.tsv"
        write_split(assignment, path)
        text = path.read_text()
        assert "\t" in text.splitlines()[0]
        back = read_split(path)
        assert back.mapping == assignment.mapping

    def test_read_split_rejects_bad_lines(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("pair-000\tnowhere\n")
        with pytest.raises(DatasetError, match="line 1"):
            read_split(path)


class TestShippedCorpus:
    def test_totals_match_published_dataset_counts(self, corpus_path):
        pairs = load_dataset(corpus_path)
        assert not pairs.violations
        assert len(pairs) == 2100
        assert pairs.polysemy_count == 432
        assert pairs.prompt_count == 4632
        by_dialect = pairs.by_dialect()
        assert {d: len(v) for d, v in by_dialect.items()} == {
            "AAE": 420, "BrE": 420, "ChE": 420, "InE": 420, "SgE": 420,
        }

    def test_split_sizes_on_shipped_corpus(self, corpus_path):
        pairs = load_dataset(corpus_path)
        assignment = split_dataset(pairs, seed=0)
        assert assignment.sizes() == (1680, 210, 210)


class TestAnnotationIO:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "ann.jsonl"
        records = [
            {"pair_id": "p1", "annotator_id": "a1", "q1": "yes", "q2": "no"},
            {"pair_id": "p1", "annotator_id": "a2", "q1": "Yes", "q2": "No"},
        ]
        write_jsonl(path, records)
        annotations = load_annotations(path)
        assert len(annotations) == 2
        assert annotations[1].q1 == "yes"  # answers normalized to lowercase

    def test_bad_answer_value(self, tmp_path):
        path = write_jsonl(tmp_path / "bad.jsonl",
                           [{"pair_id": "p", "annotator_id": "a", "q1": "maybe", "q2": "no"}])
        with pytest.raises(DatasetError, match="answers must be"):
            load_annotations(path)
