"""Tests for fvecs/ivecs reading and writing."""

import numpy as np
import pytest

from nvq.core.errors import DomainError, VectorFileError
from nvq.vecs import format_for, parse_vectors, read_vectors, serialize_vectors, write_vectors


class TestSerialize:
    """Test the on-disk layout."""

    def test_fvecs_bytes(self):
        raw = serialize_vectors(np.array([[1.0, 2.0]], dtype=np.float32))
        assert raw == bytes.fromhex("02000000 0000803F 00000040".replace(" ", ""))

    def test_ivecs_bytes(self):
        raw = serialize_vectors(np.array([[1, -1]]), "ivecs")
        assert raw == bytes.fromhex("02000000 01000000 FFFFFFFF".replace(" ", ""))

    def test_empty(self):
        assert serialize_vectors(np.empty((0, 4))) == b""

    def test_bad_shape(self):
        with pytest.raises(DomainError):
            serialize_vectors(np.zeros(3))

    def test_unknown_format(self):
        with pytest.raises(DomainError):
            serialize_vectors(np.zeros((1, 2)), "bvecs")


class TestParse:
    """Test parsing and validation."""

    def test_parse(self):
        raw = bytes.fromhex("02000000 0000803F 00000040 02000000 00000000 000080BF".replace(" ", ""))
        vectors = parse_vectors(raw)
        assert vectors.dtype == np.float32
        assert vectors.tolist() == [[1.0, 2.0], [0.0, -1.0]]

    def test_empty(self):
        assert parse_vectors(b"").shape == (0, 0)

    def test_short_header(self):
        with pytest.raises(VectorFileError) as exc_info:
            parse_vectors(b"\x02\x00")
        assert exc_info.value.offset == 0

    def test_non_positive_dimension(self):
        with pytest.raises(VectorFileError):
            parse_vectors(np.array([0], dtype="<i4").tobytes())

    def test_dimension_mismatch(self):
        raw = serialize_vectors(np.ones((3, 2), dtype=np.float32))
        bad = raw[:24] + np.array([3], dtype="<i4").tobytes() + raw[28:]
        with pytest.raises(VectorFileError) as exc_info:
            parse_vectors(bad)
        assert exc_info.value.offset == 24
        assert "offset 24" in str(exc_info.value)

    def test_truncated(self):
        raw = serialize_vectors(np.ones((2, 2), dtype=np.float32))
        with pytest.raises(VectorFileError) as exc_info:
            parse_vectors(raw[:-3])
        assert exc_info.value.offset == 12

    def test_truncated_with_wrong_dimension(self):
        raw = serialize_vectors(np.ones((1, 2), dtype=np.float32)) + np.array([5, 0], dtype="<i4").tobytes()
        with pytest.raises(VectorFileError, match="dimension 5"):
            parse_vectors(raw)


class TestFiles:
    """Test file helpers."""

    def test_write_then_read(self, tmp_path, rng):
        data = rng.normal(size=(5, 7)).astype(np.float32)
        path = tmp_path / "data.fvecs"
        assert write_vectors(path, data) == 5 * 4 * 8
        assert np.array_equal(read_vectors(path), data)

    def test_ivecs_file(self, tmp_path):
        ids = np.array([[3, 1, 2], [0, 5, 4]])
        path = tmp_path / "gt.ivecs"
        write_vectors(path, ids, "ivecs")
        assert read_vectors(path, "ivecs").tolist() == ids.tolist()

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.fvecs"
        path.write_bytes(b"")
        assert read_vectors(path).shape == (0, 0)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_vectors(tmp_path / "missing.fvecs")

    @pytest.mark.parametrize("name, fmt", [("a.fvecs", "fvecs"), ("b.IVECS", "ivecs"), ("c.bin", "fvecs")])
    def test_format_for(self, name, fmt):
        assert format_for(name) == fmt
