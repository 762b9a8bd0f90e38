"""
IDX Dataset Module

Reads MNIST-style IDX image/label files into normalized pixel datasets and
produces the deterministic down-sampled and sub-sampled variants used for
desk-scale experiments.
"""

import os
import struct
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np
import numpy.typing as npt

from GenerativeTNC.Errors import (
    ArgumentError,
    ConsistencyError,
    FormatError,
    PixelDomainError,
    TruncatedFileError,
)

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801
PIXEL_SCALE = 255.0

FloatArray = npt.NDArray[np.float64]
IntArray = npt.NDArray[np.int64]


@dataclass(frozen=True)
class DatasetProvenance:
    """Where a dataset came from and how it was reduced."""

    images_path: str = ""
    labels_path: str = ""
    downsample_factor: int = 1
    subsample_seed: Optional[int] = None
    per_class: Optional[int] = None
    class_counts: Tuple[int, ...] = ()

    def describe(self) -> Dict[str, str]:
        return {
            "images": self.images_path,
            "labels": self.labels_path,
            "downsample": str(self.downsample_factor),
            "subsample_seed": (
                "none" if self.subsample_seed is None else str(self.subsample_seed)
            ),
            "per_class": "all" if self.per_class is None else str(self.per_class),
            "class_counts": ",".join(str(c) for c in self.class_counts),
        }


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    Labeled grayscale images with pixels normalized to [0, 1].

    ``images`` has shape ``(N, height * width)`` in row-major pixel order and
    ``labels`` holds class indices in ``[0, num_classes)``.
    """

    images: FloatArray
    labels: IntArray
    height: int
    width: int
    num_classes: int
    provenance: DatasetProvenance = field(default_factory=DatasetProvenance)

    def __post_init__(self) -> None:
        if self.images.ndim != 2:
            raise ArgumentError(
                f"images must be 2-D (N, L), got shape {self.images.shape}"
            )
        if self.images.shape[0] != self.labels.shape[0]:
            raise ConsistencyError(
                f"{self.images.shape[0]} images but {self.labels.shape[0]} labels"
            )
        if self.images.shape[1] != self.height * self.width:
            raise ArgumentError(
                f"Pixel count {self.images.shape[1]} != {self.height}x{self.width}"
            )
        if not np.isfinite(self.images).all():
            raise PixelDomainError("Pixels must be finite")
        if self.images.size and (self.images.min() < 0.0 or self.images.max() > 1.0):
            raise PixelDomainError("Pixels must lie in [0, 1]")
        if self.labels.size and (
            self.labels.min() < 0 or self.labels.max() >= self.num_classes
        ):
            raise ArgumentError(
                f"Labels must lie in [0, {self.num_classes}), got "
                f"[{self.labels.min()}, {self.labels.max()}]"
            )

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @property
    def num_pixels(self) -> int:
        return self.height * self.width

    def class_counts(self) -> Tuple[int, ...]:
        counts = np.bincount(self.labels, minlength=self.num_classes)
        return tuple(int(c) for c in counts)

    def present_classes(self) -> List[int]:
        return [c for c, n in enumerate(self.class_counts()) if n > 0]

    def select(self, indices: npt.NDArray[np.int64]) -> "Dataset":
        return replace(
            self,
            images=self.images[indices],
            labels=self.labels[indices],
        )


def _read_be32(data: bytes, offset: int, path: str) -> int:
    if len(data) < offset + 4:
        raise TruncatedFileError(f"{path}: header truncated at byte {offset}")
    value: int = struct.unpack(">I", data[offset : offset + 4])[0]
    return value


def _read_idx_images(path: str) -> Tuple[npt.NDArray[np.uint8], int, int]:
    with open(path, "rb") as f:
        data = f.read()
    magic = _read_be32(data, 0, path)
    if magic != IDX_IMAGE_MAGIC:
        raise FormatError(f"{path}: bad image magic 0x{magic:08x}")
    count = _read_be32(data, 4, path)
    rows = _read_be32(data, 8, path)
    cols = _read_be32(data, 12, path)
    expected = count * rows * cols
    payload = data[16:]
    if len(payload) < expected:
        raise TruncatedFileError(
            f"{path}: expected {expected} pixel bytes, found {len(payload)}"
        )
    if len(payload) > expected:
        raise FormatError(f"{path}: {len(payload) - expected} trailing bytes")
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(count, rows * cols)
    return pixels, rows, cols


def _read_idx_labels(path: str) -> npt.NDArray[np.uint8]:
    with open(path, "rb") as f:
        data = f.read()
    magic = _read_be32(data, 0, path)
    if magic != IDX_LABEL_MAGIC:
        raise FormatError(f"{path}: bad label magic 0x{magic:08x}")
    count = _read_be32(data, 4, path)
    payload = data[8:]
    if len(payload) < count:
        raise TruncatedFileError(
            f"{path}: expected {count} labels, found {len(payload)}"
        )
    if len(payload) > count:
        raise FormatError(f"{path}: {len(payload) - count} trailing bytes")
    return np.frombuffer(payload, dtype=np.uint8)


def load_idx(
    images_path: str, labels_path: str, num_classes: Optional[int] = None
) -> Dataset:
    """
    Load an IDX image file and its label file.

    Args:
        images_path: IDX file with magic 0x00000803.
        labels_path: IDX file with magic 0x00000801.
        num_classes: Class count K; defaults to ``max(label) + 1``.

    Returns:
        Dataset with pixels divided by 255.

    Raises:
        FormatError: On a bad magic number or trailing bytes.
        ConsistencyError: If the two files disagree on the sample count.
        TruncatedFileError: If either file ends early.
    """
    raw_pixels, rows, cols = _read_idx_images(images_path)
    raw_labels = _read_idx_labels(labels_path)
    if raw_pixels.shape[0] != raw_labels.shape[0]:
        raise ConsistencyError(
            f"{images_path} holds {raw_pixels.shape[0]} images but "
            f"{labels_path} holds {raw_labels.shape[0]} labels"
        )
    labels = raw_labels.astype(np.int64)
    if num_classes is None:
        num_classes = int(labels.max()) + 1 if labels.size else 0
    images = raw_pixels.astype(np.float64) / PIXEL_SCALE
    counts = np.bincount(labels, minlength=num_classes)
    return Dataset(
        images=images,
        labels=labels,
        height=rows,
        width=cols,
        num_classes=num_classes,
        provenance=DatasetProvenance(
            images_path=images_path,
            labels_path=labels_path,
            class_counts=tuple(int(c) for c in counts),
        ),
    )


def save_idx(d: Dataset, images_path: str, labels_path: str) -> None:
    """
    Write ``d`` as an IDX image/label pair.

    Pixels are quantized back to bytes with ``round(x * 255)``, which is exact
    for datasets produced by ``load_idx``.
    """
    for path in (images_path, labels_path):
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
    raw = np.rint(d.images * PIXEL_SCALE).astype(np.uint8)
    with open(images_path, "wb") as f:
        f.write(struct.pack(">IIII", IDX_IMAGE_MAGIC, len(d), d.height, d.width))
        f.write(raw.tobytes())
    with open(labels_path, "wb") as f:
        f.write(struct.pack(">II", IDX_LABEL_MAGIC, len(d)))
        f.write(d.labels.astype(np.uint8).tobytes())


def downsample(d: Dataset, factor: int) -> Dataset:
    """Average-pool every image over non-overlapping ``factor`` x ``factor`` blocks."""
    if factor < 1:
        raise ArgumentError(f"Downsample factor must be positive, got {factor}")
    if d.height % factor or d.width % factor:
        raise ArgumentError(
            f"Downsample factor {factor} does not divide {d.height}x{d.width}"
        )
    if factor == 1:
        return d
    h, w = d.height // factor, d.width // factor
    blocks = d.images.reshape(len(d), h, factor, w, factor)
    pooled = np.clip(blocks.mean(axis=(2, 4)), 0.0, 1.0).reshape(len(d), h * w)
    return replace(
        d,
        images=pooled,
        height=h,
        width=w,
        provenance=replace(
            d.provenance,
            downsample_factor=d.provenance.downsample_factor * factor,
        ),
    )


def subsample(d: Dataset, per_class: int, seed: int) -> Dataset:
    """
    Keep at most ``per_class`` samples of every class.

    Each class draws its own seeded permutation, so the result depends only on
    ``seed`` and the class contents. Retained samples keep their original order.
    """
    if per_class < 1:
        raise ArgumentError(f"per_class must be positive, got {per_class}")
    keep: List[npt.NDArray[np.int64]] = []
    for label in range(d.num_classes):
        members = np.flatnonzero(d.labels == label).astype(np.int64)
        if members.shape[0] > per_class:
            rng = np.random.default_rng([seed, label])
            chosen = rng.permutation(members.shape[0])[:per_class]
            members = np.sort(members[chosen])
        keep.append(members)
    indices = np.sort(np.concatenate(keep)) if keep else np.zeros(0, dtype=np.int64)
    reduced = d.select(indices)
    return replace(
        reduced,
        provenance=replace(
            d.provenance,
            subsample_seed=seed,
            per_class=per_class,
            class_counts=reduced.class_counts(),
        ),
    )


def split_by_class(d: Dataset) -> List[Dataset]:
    """Partition ``d`` by label into ``num_classes`` datasets (some may be empty)."""
    return [
        d.select(np.flatnonzero(d.labels == label).astype(np.int64))
        for label in range(d.num_classes)
    ]
