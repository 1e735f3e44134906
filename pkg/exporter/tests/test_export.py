"""Export conformance: everything written must load through the consumer's
own reader (the downstream training toolkit), in manifest order."""

import json

import numpy as np
import pytest

import embexport.export as export_module
from dialectkit.store import AnchorSet, read_store
from embexport import (
    DgemWriteError,
    ExportError,
    ExportJob,
    ManifestEntry,
    export_anchor_pairs,
    export_text_embeddings,
    read_text_manifest,
    write_dgem,
)


class TestDgemWriter:
    def test_consumer_reads_what_we_write(self, tmp_path):
        rows = np.array([[1.5, -2.0], [0.25, 8.0]], dtype=np.float32)
        write_dgem(rows, ["x", "y"], "image", tmp_path / "s")
        store = read_store(tmp_path / "s")
        assert store.ids == ("x", "y")
        assert store.matrix.kind == "image"
        assert np.array_equal(store.matrix.rows, rows.astype(np.float64))

    def test_duplicate_ids_rejected(self, tmp_path):
        with pytest.raises(DgemWriteError, match="duplicate id"):
            write_dgem(np.ones((2, 2)), ["a", "a"], "text", tmp_path / "d")

    def test_non_finite_rejected_with_row(self, tmp_path):
        rows = np.array([[1.0, 2.0], [np.nan, 1.0]])
        with pytest.raises(DgemWriteError, match="row 1"):
            write_dgem(rows, ["a", "b"], "text", tmp_path / "n")

    def test_zero_row_rejected(self, tmp_path):
        rows = np.array([[1.0, 2.0], [0.0, 0.0]])
        with pytest.raises(DgemWriteError, match="zero-norm"):
            write_dgem(rows, ["a", "b"], "text", tmp_path / "z")

    def test_byte_deterministic(self, tmp_path):
        rng = np.random.default_rng(0)
        rows = rng.standard_normal((5, 3)).astype(np.float32)
        ids = [f"r{i}" for i in range(5)]
        write_dgem(rows, ids, "text", tmp_path / "a")
        write_dgem(rows, ids, "text", tmp_path / "b")
        assert (tmp_path / "a.emb").read_bytes() == (tmp_path / "b.emb").read_bytes()


class TestTextExport:
    def test_round_trip_matches_manifest_and_model(self, tmp_path, checkpoint, sample_16):
        _, captions_path, _ = sample_16
        entries = read_text_manifest(captions_path)
        job = ExportJob(checkpoint, tuple(entries), "text", str(tmp_path / "caps"))
        export_text_embeddings(job)
        store = read_store(tmp_path / "caps")
        config = json.load(open(f"{checkpoint}/config.json"))
        assert store.count == len(entries)
        assert store.dim == config["dim"]
        assert store.ids == tuple(e.id for e in entries)

    def test_order_preserved(self, tmp_path, checkpoint, sample_16):
        _, captions_path, _ = sample_16
        entries = read_text_manifest(captions_path)
        fwd, rev = tmp_path / "fwd", tmp_path / "rev"
        export_text_embeddings(ExportJob(checkpoint, tuple(entries), "text", str(fwd)))
        export_text_embeddings(
            ExportJob(checkpoint, tuple(reversed(entries)), "text", str(rev))
        )
        a = read_store(fwd)
        b = read_store(rev)
        assert a.ids == tuple(reversed(b.ids))
        assert np.array_equal(a.matrix.rows, b.matrix.rows[::-1])

    def test_duplicate_id_refused_before_model_load(self, monkeypatch, tmp_path):
        calls = []
        monkeypatch.setattr(export_module, "load_encoder",
                            lambda model: calls.append(model))
        entries = (ManifestEntry("a", "one"), ManifestEntry("a", "two"))
        with pytest.raises(ExportError, match="duplicate id 'a'"):
            ExportJob("anything", entries, "text", str(tmp_path / "x"))
        assert calls == []  # the model was never touched

    def test_reexport_bit_identical(self, tmp_path, checkpoint, sample_16):
        _, captions_path, _ = sample_16
        entries = tuple(read_text_manifest(captions_path))
        for name in ("one", "two"):
            export_text_embeddings(
                ExportJob(checkpoint, entries, "text", str(tmp_path / name))
            )
        assert (tmp_path / "one.emb").read_bytes() == (tmp_path / "two.emb").read_bytes()
        assert (tmp_path / "one.ids").read_bytes() == (tmp_path / "two.ids").read_bytes()

    def test_batch_size_does_not_change_rows(self, tmp_path, checkpoint, sample_16):
        _, captions_path, _ = sample_16
        entries = tuple(read_text_manifest(captions_path))
        export_text_embeddings(ExportJob(checkpoint, entries, "text",
                                         str(tmp_path / "b4"), batch_size=4))
        export_text_embeddings(ExportJob(checkpoint, entries, "text",
                                         str(tmp_path / "b16"), batch_size=16))
        a, b = read_store(tmp_path / "b4"), read_store(tmp_path / "b16")
        assert np.allclose(a.matrix.rows, b.matrix.rows, atol=1e-6)

    def test_kind_mismatch_rejected(self, checkpoint, tmp_path):
        entries = (ManifestEntry("a", "text"),)
        job = ExportJob(checkpoint, entries, "image", str(tmp_path / "x"))
        with pytest.raises(ExportError, match="text export got"):
            export_text_embeddings(job)


class TestAnchorExport:
    def test_anchor_set_loads_in_consumer(self, tmp_path, checkpoint, sample_16):
        _, captions_path, images_path = sample_16
        export_anchor_pairs(captions_path, images_path, checkpoint, tmp_path / "out")
        captions = read_store(tmp_path / "out" / "captions")
        images = read_store(tmp_path / "out" / "images")
        anchors = AnchorSet(captions, images)
        assert anchors.m == 16
        assert captions.ids == images.ids
        assert captions.matrix.kind == "text" and images.matrix.kind == "image"

    def test_misaligned_manifests_report_index(self, tmp_path, checkpoint, sample_16):
        _, captions_path, images_path = sample_16
        lines = open(images_path).read().splitlines()
        lines[3] = "scene-9999," + lines[3].split(",", 1)[1]
        bad = tmp_path / "bad_images.csv"
        bad.write_text("\n".join(lines) + "\n")
        from embexport import ManifestError

        with pytest.raises(ManifestError, match="index 2"):
            export_anchor_pairs(captions_path, bad, checkpoint, tmp_path / "o")

    def test_surplus_caption_reports_boundary(self, tmp_path, checkpoint, sample_16):
        _, captions_path, images_path = sample_16
        text = open(captions_path).read()
        longer = tmp_path / "longer.csv"
        longer.write_text(text + "extra-id,one more caption\n")
        from embexport import ManifestError

        with pytest.raises(ManifestError, match="index 16"):
            export_anchor_pairs(longer, images_path, checkpoint, tmp_path / "o2")
