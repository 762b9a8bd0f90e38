"""
Tests for IDX loading and the dataset reductions.
"""

import os
import struct
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pytest

from GenerativeTNC.Data.IdxDataset import (
    Dataset,
    downsample,
    load_idx,
    save_idx,
    split_by_class,
    subsample,
)
from GenerativeTNC.Errors import (
    ArgumentError,
    ConsistencyError,
    FormatError,
    PixelDomainError,
    TruncatedFileError,
)
from GenerativeTNC.tests.oracle_helpers import write_idx_pair


def make_dataset(
    labels: Sequence[int],
    height: int = 2,
    width: int = 2,
    seed: int = 0,
    num_classes: Optional[int] = None,
) -> Dataset:
    rng = np.random.default_rng(seed)
    labels = np.asarray(labels, dtype=np.int64)
    return Dataset(
        images=rng.integers(0, 256, size=(len(labels), height * width)) / 255.0,
        labels=labels,
        height=height,
        width=width,
        num_classes=num_classes if num_classes is not None else int(labels.max()) + 1,
    )


class TestLoadIdx:
    """Parsing the IDX container."""

    def test_single_image(self, tmp_path: Path) -> None:
        images = np.array([[[0, 255], [0, 255]]], dtype=np.uint8)
        paths = write_idx_pair(str(tmp_path), images, [9])
        d = load_idx(*paths)
        assert d.images.tolist() == [[0.0, 1.0, 0.0, 1.0]]
        assert d.labels.tolist() == [9]
        assert (d.height, d.width) == (2, 2)
        assert d.num_classes == 10

    def test_round_trip_is_bit_exact(self, tmp_path: Path) -> None:
        rng = np.random.default_rng(3)
        images = rng.integers(0, 256, size=(5, 3, 4)).astype(np.uint8)
        d = load_idx(*write_idx_pair(str(tmp_path), images, [0, 1, 2, 1, 0]))
        out = str(tmp_path / "out")
        os.makedirs(out)
        save_idx(d, os.path.join(out, "i.idx"), os.path.join(out, "l.idx"))
        again = load_idx(os.path.join(out, "i.idx"), os.path.join(out, "l.idx"))
        assert np.array_equal(again.images, d.images)
        assert np.array_equal(again.labels, d.labels)
        with open(os.path.join(out, "i.idx"), "rb") as f:
            written = f.read()
        with open(str(tmp_path / "data-images.idx"), "rb") as f:
            assert written == f.read()

    def test_bad_magic(self, tmp_path: Path) -> None:
        images_path, labels_path = write_idx_pair(
            str(tmp_path), np.zeros((1, 2, 2), dtype=np.uint8), [0]
        )
        with open(images_path, "r+b") as f:
            f.write(struct.pack(">I", 0x801))
        with pytest.raises(FormatError):
            load_idx(images_path, labels_path)

    def test_count_mismatch(self, tmp_path: Path) -> None:
        images_path, _ = write_idx_pair(
            str(tmp_path), np.zeros((2, 2, 2), dtype=np.uint8), [0, 1], prefix="a"
        )
        _, labels_path = write_idx_pair(
            str(tmp_path), np.zeros((1, 2, 2), dtype=np.uint8), [0], prefix="b"
        )
        with pytest.raises(ConsistencyError):
            load_idx(images_path, labels_path)

    def test_truncated_file(self, tmp_path: Path) -> None:
        images_path, labels_path = write_idx_pair(
            str(tmp_path), np.zeros((2, 2, 2), dtype=np.uint8), [0, 1]
        )
        with open(images_path, "rb") as f:
            data = f.read()
        with open(images_path, "wb") as f:
            f.write(data[:-1])
        with pytest.raises(TruncatedFileError):
            load_idx(images_path, labels_path)
        with pytest.raises(OSError):
            load_idx(images_path, labels_path)

    def test_truncated_header(self, tmp_path: Path) -> None:
        path = tmp_path / "short.idx"
        path.write_bytes(b"\x00\x00\x08")
        with pytest.raises(TruncatedFileError):
            load_idx(str(path), str(path))


class TestDataset:
    def test_rejects_out_of_range_pixels(self) -> None:
        with pytest.raises(PixelDomainError):
            Dataset(
                images=np.array([[0.0, 1.5]]),
                labels=np.array([0]),
                height=1,
                width=2,
                num_classes=1,
            )

    def test_rejects_nan_pixels(self) -> None:
        with pytest.raises(PixelDomainError):
            Dataset(
                images=np.array([[0.5, np.nan]]),
                labels=np.array([0]),
                height=1,
                width=2,
                num_classes=1,
            )

    def test_rejects_length_mismatch(self) -> None:
        with pytest.raises(ConsistencyError):
            Dataset(
                images=np.zeros((2, 4)),
                labels=np.array([0]),
                height=2,
                width=2,
                num_classes=1,
            )


class TestDownsample:
    """Average pooling."""

    def test_factor_one_is_identity(self) -> None:
        d = make_dataset([0, 1])
        assert downsample(d, 1) is d

    def test_two_by_two_mean(self) -> None:
        d = Dataset(
            images=np.array([[0.0, 1.0, 0.0, 1.0]]),
            labels=np.array([0]),
            height=2,
            width=2,
            num_classes=1,
        )
        pooled = downsample(d, 2)
        assert pooled.images.tolist() == [[0.5]]
        assert (pooled.height, pooled.width) == (1, 1)
        assert pooled.provenance.downsample_factor == 2

    def test_matches_loop_oracle(self) -> None:
        d = make_dataset([0, 1, 2], height=4, width=6, seed=5)
        pooled = downsample(d, 2)
        for n in range(3):
            image = d.images[n].reshape(4, 6)
            for r in range(2):
                for c in range(3):
                    block = [image[2 * r + i, 2 * c + j] for i in range(2) for j in range(2)]
                    assert pooled.images[n, r * 3 + c] == pytest.approx(
                        sum(block) / 4.0, abs=1e-12
                    )

    def test_composition_on_constant_images(self) -> None:
        d = Dataset(
            images=np.full((2, 16), 0.25),
            labels=np.array([0, 0]),
            height=4,
            width=4,
            num_classes=1,
        )
        twice = downsample(downsample(d, 2), 2)
        once = downsample(d, 4)
        assert np.allclose(twice.images, once.images)

    def test_non_divisible_factor(self) -> None:
        with pytest.raises(ArgumentError):
            downsample(make_dataset([0], height=3, width=3), 2)


class TestSubsample:
    """Seeded per-class subsampling."""

    def test_small_classes_unchanged(self) -> None:
        d = make_dataset([0, 1, 1, 0, 1])
        reduced = subsample(d, 5, seed=1)
        assert np.array_equal(reduced.labels, d.labels)
        assert np.array_equal(reduced.images, d.images)

    def test_deterministic(self) -> None:
        d = make_dataset([k % 3 for k in range(60)])
        a = subsample(d, 4, seed=11)
        b = subsample(d, 4, seed=11)
        assert np.array_equal(a.images, b.images)
        assert a.class_counts() == (4, 4, 4)
        assert a.provenance.subsample_seed == 11

    def test_keeps_original_order(self) -> None:
        d = make_dataset([k % 2 for k in range(40)])
        reduced = subsample(d, 3, seed=2)
        positions = [
            int(np.flatnonzero((d.images == row).all(axis=1))[0]) for row in reduced.images
        ]
        assert positions == sorted(positions)


class TestSplitByClass:
    def test_partition(self) -> None:
        d = make_dataset([0, 1, 0], num_classes=3)
        parts = split_by_class(d)
        assert [len(p) for p in parts] == [2, 1, 0]
        assert sum(len(p) for p in parts) == len(d)


if __name__ == "__main__":
    pytest.main()
