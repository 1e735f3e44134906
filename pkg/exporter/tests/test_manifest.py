import pytest

from embexport import (
    ManifestEntry,
    ManifestError,
    check_aligned,
    read_image_manifest,
    read_text_manifest,
)


def write(path, header, rows):
    lines = [header] + rows
    path.write_text("\n".join(lines) + "\n")
    return path


class TestTextManifest:
    def test_reads_in_order(self, tmp_path):
        path = write(tmp_path / "m.csv", "id,text",
                     ["a,first caption", "b,second caption"])
        entries = read_text_manifest(path)
        assert [e.id for e in entries] == ["a", "b"]
        assert entries[0].value == "first caption"

    def test_duplicate_id_rejected(self, tmp_path):
        path = write(tmp_path / "d.csv", "id,text", ["a,x", "a,y"])
        with pytest.raises(ManifestError, match="duplicate id 'a'"):
            read_text_manifest(path)

    def test_wrong_header(self, tmp_path):
        path = write(tmp_path / "h.csv", "name,text", ["a,x"])
        with pytest.raises(ManifestError, match="expected header"):
            read_text_manifest(path)

    def test_empty_rejected(self, tmp_path):
        path = write(tmp_path / "e.csv", "id,text", [])
        with pytest.raises(ManifestError, match="empty"):
            read_text_manifest(path)


class TestImageManifest:
    def test_relative_paths_resolved(self, tmp_path):
        path = write(tmp_path / "m.csv", "id,image_path", ["a,images/a.png"])
        entries = read_image_manifest(path)
        assert entries[0].value == str(tmp_path / "images" / "a.png")


class TestAlignment:
    def test_aligned_ok(self):
        caps = [ManifestEntry("a", "t"), ManifestEntry("b", "t")]
        imgs = [ManifestEntry("a", "p"), ManifestEntry("b", "p")]
        check_aligned(caps, imgs)

    def test_misaligned_reports_first_index(self):
        caps = [ManifestEntry("a", "t"), ManifestEntry("b", "t")]
        imgs = [ManifestEntry("a", "p"), ManifestEntry("c", "p")]
        with pytest.raises(ManifestError, match="index 1"):
            check_aligned(caps, imgs)

    def test_surplus_reports_boundary_index(self):
        caps = [ManifestEntry("a", "t"), ManifestEntry("b", "t")]
        imgs = [ManifestEntry("a", "p")]
        with pytest.raises(ManifestError, match="index 1"):
            check_aligned(caps, imgs)
