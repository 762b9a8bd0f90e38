"""
Class Distances Module

How far apart the classes of a dataset are, in pixel space and in the
feature-mapped Hilbert space:

- raw:      D_ab = mean over (x in a, y in b) of |x - y|_2
- fidelity: F_ab = sum over (u in a, v in b) of u.v / sqrt(N_a N_b)
- hilbert:  D_ab = F_aa + F_bb - 2 F_ab, the squared distance of the lazy
            class states

and a summary of whether same-class entries dominate.
"""

import math
import sys
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Tuple

import numpy as np
import torch
from torch import Tensor

from GenerativeTNC.Data.IdxDataset import Dataset, split_by_class
from GenerativeTNC.Errors import ArgumentError, DimensionError
from GenerativeTNC.Models.FeatureMap import map_images, pairwise_product_overlaps
from GenerativeTNC.Tensors.TensorKernel import DTYPE

DISTANCE_CHUNK = 512
# Reported in place of an infinite clustering ratio
RATIO_SENTINEL = sys.float_info.max
SAME_ORDER_FACTOR = 10.0


class MatrixKind(Enum):
    EUCLIDEAN_RAW = "euclidean_raw"
    FIDELITY_HILBERT = "fidelity_hilbert"
    DISTANCE_HILBERT = "distance_hilbert"


@dataclass(frozen=True, eq=False)
class ClassPairMatrix:
    values: Tensor  # (K, K)
    kind: MatrixKind
    class_labels: List[int]
    class_counts: List[int]

    def __post_init__(self) -> None:
        k = len(self.class_labels)
        if self.values.shape != (k, k) or len(self.class_counts) != k:
            raise DimensionError(
                f"{tuple(self.values.shape)} matrix for {k} classes "
                f"with {len(self.class_counts)} counts"
            )

    @property
    def size(self) -> int:
        return len(self.class_labels)

    def diagonal(self) -> Tensor:
        return torch.diagonal(self.values)

    def off_diagonal(self) -> Tensor:
        mask = ~torch.eye(self.size, dtype=torch.bool)
        return self.values[mask]

    def asymmetry(self) -> float:
        return float(torch.max(torch.abs(self.values - self.values.T)))


PairFunction = Callable[[Tensor, Tensor], float]


def _pair_matrix(parts: List[Tensor], pair: PairFunction) -> Tensor:
    """Upper triangle by ``pair``, mirrored so the result is exactly symmetric."""
    k = len(parts)
    values = torch.zeros(k, k, dtype=DTYPE)
    for i in range(k):
        for j in range(i, k):
            values[i, j] = pair(parts[i], parts[j])
            values[j, i] = values[i, j]
    return values


def _class_parts(dataset: Dataset) -> List[Dataset]:
    parts = [part for part in split_by_class(dataset) if len(part) > 0]
    if not parts:
        raise ArgumentError("Dataset has no samples")
    return parts


def _mean_distance(a: Tensor, b: Tensor) -> float:
    total = 0.0
    for start in range(0, a.shape[0], DISTANCE_CHUNK):
        block = a[start : start + DISTANCE_CHUNK]
        distances = torch.cdist(
            block, b, p=2.0, compute_mode="donot_use_mm_for_euclid_dist"
        )
        total += float(torch.sum(distances))
    return total / (a.shape[0] * b.shape[0])


def raw_distance_matrix(dataset: Dataset) -> ClassPairMatrix:
    """Mean pairwise Euclidean pixel distance; diagonals include zero self pairs."""
    parts = _class_parts(dataset)
    pixels = [torch.from_numpy(np.ascontiguousarray(p.images)).to(DTYPE) for p in parts]
    return ClassPairMatrix(
        values=_pair_matrix(pixels, _mean_distance),
        kind=MatrixKind.EUCLIDEAN_RAW,
        class_labels=[int(p.labels[0]) for p in parts],
        class_counts=[len(p) for p in parts],
    )


def _scaled_overlap_sum(a: Tensor, b: Tensor) -> float:
    total = float(torch.sum(pairwise_product_overlaps(a, b)))
    return total / math.sqrt(a.shape[0] * b.shape[0])


def fidelity_matrix(dataset: Dataset, local_dim: int = 2) -> ClassPairMatrix:
    """
    Overlaps of the lazy class states. Diagonal entries use the same double sum,
    so F_cc is the squared norm of class c's state.
    """
    parts = _class_parts(dataset)
    features = [map_images(p.images, local_dim) for p in parts]
    return ClassPairMatrix(
        values=_pair_matrix(features, _scaled_overlap_sum),
        kind=MatrixKind.FIDELITY_HILBERT,
        class_labels=[int(p.labels[0]) for p in parts],
        class_counts=[len(p) for p in parts],
    )


def _require_fidelity(f: ClassPairMatrix) -> None:
    if f.kind is not MatrixKind.FIDELITY_HILBERT:
        raise ArgumentError(f"Expected a fidelity matrix, got {f.kind.value}")


def _with_values(f: ClassPairMatrix, values: Tensor) -> ClassPairMatrix:
    return ClassPairMatrix(
        values=values,
        kind=MatrixKind.DISTANCE_HILBERT,
        class_labels=list(f.class_labels),
        class_counts=list(f.class_counts),
    )


def hilbert_distance_matrix(f: ClassPairMatrix) -> ClassPairMatrix:
    """D_ab = F_aa + F_bb - 2 F_ab; zero on the diagonal."""
    _require_fidelity(f)
    diag = f.diagonal()
    values = diag.unsqueeze(1) + diag.unsqueeze(0) - 2.0 * f.values
    values.fill_diagonal_(0.0)
    return _with_values(f, values)


def squared_diagonal_distance_matrix(f: ClassPairMatrix) -> ClassPairMatrix:
    """
    D_ab = F_aa^2 + F_bb^2 - 2 F_ab, the form that reads F_cc as a norm rather
    than a squared norm. Emitted next to ``hilbert_distance_matrix`` for
    comparison; its diagonal is generally not zero.
    """
    _require_fidelity(f)
    diag_sq = f.diagonal() ** 2
    return _with_values(f, diag_sq.unsqueeze(1) + diag_sq.unsqueeze(0) - 2.0 * f.values)


def approximate_distance_matrix(f: ClassPairMatrix) -> ClassPairMatrix:
    """D_ab ~ 2 - 2 F_ab, exact when every class state has unit norm."""
    _require_fidelity(f)
    values = 2.0 - 2.0 * f.values
    values.fill_diagonal_(0.0)
    return _with_values(f, values)


def approximation_residual(f: ClassPairMatrix) -> float:
    """Largest |D - (2 - 2F)| over all class pairs."""
    exact = hilbert_distance_matrix(f).values
    approx = approximate_distance_matrix(f).values
    return float(torch.max(torch.abs(exact - approx)))


@dataclass(frozen=True)
class ClusteringReport:
    fidelity_min_diagonal: float
    fidelity_max_diagonal: float
    fidelity_max_off_diagonal: float
    # min diagonal / max off-diagonal, RATIO_SENTINEL when the latter is <= 0
    fidelity_ratio: float
    # every diagonal F exceeds every off-diagonal F
    clustered: bool
    raw_min_diagonal: float
    raw_max_diagonal: float
    raw_min_off_diagonal: float
    raw_max_off_diagonal: float
    # min off-diagonal / max diagonal distance
    raw_ratio: float
    # all raw entries lie within SAME_ORDER_FACTOR of each other
    raw_same_order: bool
    approximation_residual: float


def _off_diagonal_extremes(m: ClassPairMatrix) -> Tuple[float, float]:
    off = m.off_diagonal()
    if off.numel() == 0:
        return 0.0, 0.0
    return float(torch.min(off)), float(torch.max(off))


def _ratio(numerator: float, denominator: float) -> float:
    if denominator <= 0.0:
        return RATIO_SENTINEL
    return numerator / denominator


def clustering_report(raw: ClassPairMatrix, f: ClassPairMatrix) -> ClusteringReport:
    """
    Raises:
        ArgumentError: If the matrices are of the wrong kind or cover
            different classes.
    """
    if raw.kind is not MatrixKind.EUCLIDEAN_RAW:
        raise ArgumentError(f"Expected a raw distance matrix, got {raw.kind.value}")
    _require_fidelity(f)
    if raw.class_labels != f.class_labels:
        raise ArgumentError(
            f"Matrices cover different classes: {raw.class_labels} vs {f.class_labels}"
        )
    f_diag = f.diagonal()
    _, f_max_off = _off_diagonal_extremes(f)
    f_min_diag = float(torch.min(f_diag))
    raw_diag = raw.diagonal()
    raw_min_off, raw_max_off = _off_diagonal_extremes(raw)
    raw_max_diag = float(torch.max(raw_diag))
    lowest = float(torch.min(raw.values))
    highest = float(torch.max(raw.values))
    return ClusteringReport(
        fidelity_min_diagonal=f_min_diag,
        fidelity_max_diagonal=float(torch.max(f_diag)),
        fidelity_max_off_diagonal=f_max_off,
        fidelity_ratio=_ratio(f_min_diag, f_max_off),
        clustered=f.size == 1 or f_min_diag > f_max_off,
        raw_min_diagonal=float(torch.min(raw_diag)),
        raw_max_diagonal=raw_max_diag,
        raw_min_off_diagonal=raw_min_off,
        raw_max_off_diagonal=raw_max_off,
        raw_ratio=_ratio(raw_min_off, raw_max_diag),
        raw_same_order=lowest > 0.0 and highest <= SAME_ORDER_FACTOR * lowest,
        approximation_residual=approximation_residual(f),
    )
