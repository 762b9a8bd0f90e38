"""
Tests for the class-pair distance and fidelity matrices.
"""

import numpy as np
import numpy.typing as npt
import pytest
import torch

from GenerativeTNC.Analysis.ClassDistances import (
    RATIO_SENTINEL,
    ClassPairMatrix,
    MatrixKind,
    approximate_distance_matrix,
    approximation_residual,
    clustering_report,
    fidelity_matrix,
    hilbert_distance_matrix,
    raw_distance_matrix,
    squared_diagonal_distance_matrix,
)
from GenerativeTNC.Data.IdxDataset import Dataset
from GenerativeTNC.Errors import ArgumentError, DimensionError
from GenerativeTNC.Models.FeatureMap import map_images
from GenerativeTNC.Tensors.TensorKernel import DTYPE
from GenerativeTNC.tests.oracle_helpers import lazy_state


def dataset_of(images: npt.ArrayLike, labels: npt.ArrayLike) -> Dataset:
    images = np.asarray(images, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    return Dataset(
        images=images,
        labels=labels,
        height=1,
        width=images.shape[1],
        num_classes=int(labels.max()) + 1,
    )


def random_dataset(seed: int) -> Dataset:
    rng = np.random.default_rng(seed)
    labels = np.array([0, 0, 0, 1, 1, 2, 2, 2, 2])
    return dataset_of(rng.random((len(labels), 4)), labels)


class TestRawDistances:
    def test_single_sample_classes(self) -> None:
        m = raw_distance_matrix(dataset_of([[0.0, 0.0], [1.0, 0.0]], [0, 1]))
        assert m.values.tolist() == [[0.0, 1.0], [1.0, 0.0]]
        assert m.kind is MatrixKind.EUCLIDEAN_RAW
        assert m.class_counts == [1, 1]

    def test_matches_naive_loop(self) -> None:
        d = random_dataset(1)
        m = raw_distance_matrix(d)
        for a in range(3):
            for b in range(3):
                xs = d.images[d.labels == a]
                ys = d.images[d.labels == b]
                expected = np.mean([np.linalg.norm(x - y) for x in xs for y in ys])
                assert float(m.values[a, b]) == pytest.approx(expected, abs=1e-12)
        assert m.asymmetry() == 0.0

    def test_skips_empty_classes(self) -> None:
        m = raw_distance_matrix(dataset_of([[0.1], [0.9]], [0, 2]))
        assert m.class_labels == [0, 2]
        assert m.size == 2


class TestFidelityMatrix:
    """Overlaps of lazy class states."""

    def test_known_value(self) -> None:
        f = fidelity_matrix(dataset_of([[0.2, 0.7], [0.4, 0.1]], [0, 1]))
        assert float(f.values[0, 1]) == pytest.approx(0.5590169943749476, abs=1e-12)
        assert f.diagonal().tolist() == pytest.approx([1.0, 1.0], abs=1e-15)
        assert f.kind is MatrixKind.FIDELITY_HILBERT

    def test_matches_dense_states(self) -> None:
        d = random_dataset(2)
        f = fidelity_matrix(d)
        states = [lazy_state(map_images(d.images[d.labels == c])) for c in range(3)]
        for a in range(3):
            for b in range(3):
                expected = float(states[a] @ states[b])
                assert float(f.values[a, b]) == pytest.approx(expected, abs=1e-13)


class TestHilbertDistances:
    def test_matches_squared_state_distance(self) -> None:
        d = random_dataset(3)
        hilbert = hilbert_distance_matrix(fidelity_matrix(d))
        states = [lazy_state(map_images(d.images[d.labels == c])) for c in range(3)]
        for a in range(3):
            for b in range(3):
                gap = states[a] - states[b]
                assert float(hilbert.values[a, b]) == pytest.approx(
                    float(gap @ gap), abs=1e-12
                )
        assert hilbert.diagonal().tolist() == [0.0, 0.0, 0.0]
        assert hilbert.kind is MatrixKind.DISTANCE_HILBERT

    def test_unit_norm_classes_agree_with_approximation(self) -> None:
        f = fidelity_matrix(dataset_of([[0.2, 0.7], [0.4, 0.1], [0.9, 0.5]], [0, 1, 2]))
        assert approximation_residual(f) < 1e-12
        exact = hilbert_distance_matrix(f).values
        assert torch.allclose(approximate_distance_matrix(f).values, exact, atol=1e-12)
        squared = squared_diagonal_distance_matrix(f).values
        off = ~torch.eye(3, dtype=torch.bool)
        assert torch.allclose(squared[off], exact[off], atol=1e-12)

    def test_requires_fidelity_input(self) -> None:
        raw = raw_distance_matrix(dataset_of([[0.0], [1.0]], [0, 1]))
        with pytest.raises(ArgumentError):
            hilbert_distance_matrix(raw)


class TestClusteringReport:
    """Same-class dominance summary."""

    def test_separated_classes(self) -> None:
        d = dataset_of([[0.0, 0.1], [0.05, 0.0], [1.0, 0.9], [0.95, 1.0]], [0, 0, 1, 1])
        report = clustering_report(raw_distance_matrix(d), fidelity_matrix(d))
        assert report.clustered
        assert report.fidelity_ratio > 1.0
        assert report.raw_ratio > 1.0
        assert report.fidelity_min_diagonal <= report.fidelity_max_diagonal

    def test_single_class_uses_sentinel(self) -> None:
        d = dataset_of([[0.1, 0.2], [0.3, 0.4]], [0, 0])
        report = clustering_report(raw_distance_matrix(d), fidelity_matrix(d))
        assert report.clustered
        assert report.fidelity_ratio == RATIO_SENTINEL
        assert report.fidelity_max_off_diagonal == 0.0

    def test_mismatched_inputs(self) -> None:
        d = random_dataset(4)
        raw = raw_distance_matrix(d)
        f = fidelity_matrix(d)
        with pytest.raises(ArgumentError):
            clustering_report(f, f)
        other = fidelity_matrix(dataset_of([[0.1], [0.2]], [0, 1]))
        with pytest.raises(ArgumentError):
            clustering_report(raw, other)

    def test_matrix_shape_validation(self) -> None:
        with pytest.raises(DimensionError):
            ClassPairMatrix(
                values=torch.zeros(2, 3, dtype=DTYPE),
                kind=MatrixKind.EUCLIDEAN_RAW,
                class_labels=[0, 1],
                class_counts=[1, 1],
            )


if __name__ == "__main__":
    pytest.main()
