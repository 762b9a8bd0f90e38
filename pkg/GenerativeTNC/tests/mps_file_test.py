"""
Tests for the binary model container and its sidecar manifests.
"""

import struct
import zlib
from pathlib import Path
from typing import Tuple

import numpy as np
import pytest
import torch

from GenerativeTNC.Errors import (
    ChecksumError,
    FormatError,
    TruncatedFileError,
    VersionMismatchError,
)
from GenerativeTNC.Models.FeatureMap import map_images
from GenerativeTNC.Models.LabeledMps import random_labeled_mps
from GenerativeTNC.Models.Mps import Mps, random_mps
from GenerativeTNC.Models.MpsFile import (
    load_labeled_mps,
    load_mps,
    manifest_path,
    model_path,
    read_manifest,
    save_labeled_mps,
    save_mps,
    write_manifest,
)

SavedModel = Tuple[Mps, str]


@pytest.fixture
def saved_model(tmp_path: Path) -> SavedModel:
    m = random_mps(5, 2, 3, seed=21)
    path = str(tmp_path / "model.mps")
    save_mps(m, path)
    return m, path


def rewrite(path: str, data: bytes) -> None:
    with open(path, "wb") as f:
        f.write(data)


def read_bytes(path: str) -> bytes:
    with open(path, "rb") as f:
        return f.read()


class TestMpsRoundTrip:
    def test_bit_exact(self, saved_model: SavedModel) -> None:
        m, path = saved_model
        loaded = load_mps(path)
        assert loaded.canonical_center == m.canonical_center
        assert loaded.bond_dims == m.bond_dims
        assert all(torch.equal(a, b) for a, b in zip(loaded.tensors, m.tensors))

    def test_without_center(self, tmp_path: Path) -> None:
        m = Mps(random_mps(3, 2, 2, seed=1).tensors)
        path = str(tmp_path / "free.mps")
        save_mps(m, path)
        assert load_mps(path).canonical_center is None

    def test_identical_bytes_for_identical_models(self, tmp_path: Path) -> None:
        save_mps(random_mps(4, 2, 2, seed=3), str(tmp_path / "a.mps"))
        save_mps(random_mps(4, 2, 2, seed=3), str(tmp_path / "b.mps"))
        assert read_bytes(str(tmp_path / "a.mps")) == read_bytes(str(tmp_path / "b.mps"))

    def test_labeled_round_trip(self, tmp_path: Path) -> None:
        m = random_labeled_mps(4, 2, 3, 2, seed=4)
        path = str(tmp_path / "disc.mps")
        save_labeled_mps(m, path)
        loaded = load_labeled_mps(path)
        assert loaded.label_site == m.label_site
        batch = map_images(np.random.default_rng(0).random((3, 4)))
        assert torch.equal(loaded.predict(batch), m.predict(batch))

    def test_kind_mismatch(
        self, tmp_path: Path, saved_model: SavedModel
    ) -> None:
        _, path = saved_model
        with pytest.raises(FormatError):
            load_labeled_mps(path)
        labeled = str(tmp_path / "disc.mps")
        save_labeled_mps(random_labeled_mps(3, 2, 2, 2, seed=0), labeled)
        with pytest.raises(FormatError):
            load_mps(labeled)

    def test_naming(self) -> None:
        assert model_path("out", 3).endswith("model_class3.mps")
        assert manifest_path("out", 3).endswith("model_class3.manifest")


class TestMpsCorruption:
    """Every damaged file is rejected with a specific error."""

    def test_bad_magic(self, saved_model: SavedModel) -> None:
        _, path = saved_model
        rewrite(path, b"X" + read_bytes(path)[1:])
        with pytest.raises(FormatError):
            load_mps(path)

    def test_flipped_payload_byte(self, saved_model: SavedModel) -> None:
        _, path = saved_model
        data = bytearray(read_bytes(path))
        data[-10] ^= 0xFF
        rewrite(path, bytes(data))
        with pytest.raises(ChecksumError):
            load_mps(path)

    def test_flipped_shape_byte(self, tmp_path: Path) -> None:
        path = str(tmp_path / "small.mps")
        save_mps(random_mps(4, 2, 2, seed=0), path)
        data = bytearray(read_bytes(path))
        # magic 8, header 24, bond list 5 x 4, then site 0: ndim at 52, shape at 56
        data[60] ^= 0x01
        rewrite(path, bytes(data))
        with pytest.raises(ChecksumError):
            load_mps(path)

    def test_header_disagrees_with_tensors(self, saved_model: SavedModel) -> None:
        _, path = saved_model
        body = bytearray(read_bytes(path)[:-4])
        # local dimension stored in the header: 2 -> 3, checksum rewritten to match
        struct.pack_into("<I", body, 16, 3)
        rewrite(path, bytes(body) + struct.pack("<I", zlib.crc32(bytes(body))))
        with pytest.raises(FormatError):
            load_mps(path)

    def test_shorter_than_header(self, saved_model: SavedModel) -> None:
        _, path = saved_model
        rewrite(path, read_bytes(path)[:12])
        with pytest.raises(TruncatedFileError):
            load_mps(path)

    def test_unknown_version(self, saved_model: SavedModel) -> None:
        _, path = saved_model
        data = read_bytes(path)
        rewrite(path, data[:8] + struct.pack("<I", 99) + data[12:])
        with pytest.raises(VersionMismatchError):
            load_mps(path)

    def test_truncated(self, saved_model: SavedModel) -> None:
        _, path = saved_model
        rewrite(path, read_bytes(path)[:-6])
        with pytest.raises(TruncatedFileError):
            load_mps(path)

    def test_trailing_bytes(self, saved_model: SavedModel) -> None:
        _, path = saved_model
        rewrite(path, read_bytes(path) + b"\x00")
        with pytest.raises(FormatError):
            load_mps(path)

    def test_missing_file(self, tmp_path: Path) -> None:
        with pytest.raises(OSError):
            load_mps(str(tmp_path / "absent.mps"))


class TestManifest:
    def test_round_trip(self, tmp_path: Path) -> None:
        path = str(tmp_path / "m.manifest")
        write_manifest(path, {"norm": 0.1 + 0.2, "class": 3, "trainer": "generative"})
        entries = read_manifest(path)
        assert float(entries["norm"]) == 0.1 + 0.2
        assert entries["class"] == "3"
        assert entries["trainer"] == "generative"
        with open(path, encoding="utf-8") as f:
            keys = [line.split("=", 1)[0] for line in f]
        assert keys == sorted(keys)

    def test_comments_and_blank_lines(self, tmp_path: Path) -> None:
        path = tmp_path / "c.manifest"
        path.write_text("# comment\n\nchi = 4\n", encoding="utf-8")
        assert read_manifest(str(path)) == {"chi": "4"}

    def test_bad_line(self, tmp_path: Path) -> None:
        path = tmp_path / "bad.manifest"
        path.write_text("no separator\n", encoding="utf-8")
        with pytest.raises(FormatError):
            read_manifest(str(path))

    def test_unwritable_value(self, tmp_path: Path) -> None:
        with pytest.raises(FormatError):
            write_manifest(str(tmp_path / "x.manifest"), {"note": "two\nlines"})


if __name__ == "__main__":
    pytest.main()
