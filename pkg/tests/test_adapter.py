import numpy as np
import pytest

from dialectkit.adapter import (
    CheckpointError,
    LinearAdapter,
    adapter_forward,
    load_checkpoint,
    save_checkpoint,
)


class TestForward:
    def test_identity_at_init(self):
        adapter = LinearAdapter(3)
        v = np.array([1.0, -2.0, 0.5])
        assert np.array_equal(adapter.forward(v), v)

    def test_scalar_matrix(self):
        adapter = LinearAdapter(2, 2.0 * np.eye(2), np.zeros(2))
        assert np.array_equal(adapter.forward([1.0, -1.0]), [2.0, -2.0])

    def test_hand_affine(self):
        w = np.array([[0.0, 1.0], [1.0, 0.0]])
        b = np.array([1.0, 0.0])
        adapter = LinearAdapter(2, w, b)
        assert np.array_equal(adapter_forward(adapter, [3.0, 4.0]), [5.0, 3.0])

    def test_batch_forward(self):
        adapter = LinearAdapter(2, np.array([[0.0, 1.0], [1.0, 0.0]]), np.array([1.0, 0.0]))
        out = adapter.forward(np.array([[3.0, 4.0], [0.0, 0.0]]))
        assert np.array_equal(out, [[5.0, 3.0], [1.0, 0.0]])

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            LinearAdapter(3).forward([1.0, 2.0])

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError, match="finite"):
            LinearAdapter(2, np.array([[np.inf, 0.0], [0.0, 1.0]]), np.zeros(2))


class TestCheckpoints:
    def test_identity_round_trip(self, tmp_path):
        path = tmp_path / "a.dgad"
        save_checkpoint(LinearAdapter(4), path)
        back = load_checkpoint(path)
        assert back == LinearAdapter(4)

    def test_random_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(12)
        adapter = LinearAdapter(5, rng.standard_normal((5, 5)), rng.standard_normal(5))
        path = tmp_path / "r.dgad"
        save_checkpoint(adapter, path)
        back = load_checkpoint(path)
        assert np.array_equal(back.w, adapter.w)
        assert np.array_equal(back.b, adapter.b)

    def test_truncated_file(self, tmp_path):
        path = tmp_path / "t.dgad"
        save_checkpoint(LinearAdapter(3), path)
        blob = path.read_bytes()
        path.write_bytes(blob[:-5])
        with pytest.raises(CheckpointError, match="truncated checkpoint"):
            load_checkpoint(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "b.dgad"
        save_checkpoint(LinearAdapter(2), path)
        blob = bytearray(path.read_bytes())
        blob[:4] = b"XXXX"
        path.write_bytes(bytes(blob))
        with pytest.raises(CheckpointError, match="bad magic"):
            load_checkpoint(path)

    def test_dimension_expectation(self, tmp_path):
        path = tmp_path / "d.dgad"
        save_checkpoint(LinearAdapter(3), path)
        with pytest.raises(CheckpointError, match="dimension mismatch"):
            load_checkpoint(path, expect_dim=4)
