"""
Tests for the open-boundary MPS and its canonical forms.
"""

import math

import numpy as np
import pytest
import torch

from GenerativeTNC.Errors import ArgumentError, DegenerateStateError, DimensionError
from GenerativeTNC.Models.FeatureMap import map_image, map_images
from GenerativeTNC.Models.Mps import (
    Mps,
    all_entanglement_spectra,
    canonicalize,
    entanglement_spectrum,
    exact_bond_caps,
    mps_product_overlap,
    random_mps,
    renyi2_entropy,
    renyi_entropy,
    spectrum_entropy,
)
from GenerativeTNC.Tensors.TensorKernel import DTYPE
from GenerativeTNC.tests.oracle_helpers import (
    enumerate_mps,
    kron_state,
    product_mps,
    uniform_superposition_mps,
)


def unnormalized_mps(num_sites: int, chi: int, seed: int) -> Mps:
    generator = torch.Generator().manual_seed(seed)
    caps = exact_bond_caps(num_sites, 2, chi)
    return Mps(
        [
            torch.randn(caps[s], 2, caps[s + 1], generator=generator, dtype=DTYPE)
            for s in range(num_sites)
        ]
    )


class TestConstruction:
    def test_bond_mismatch(self) -> None:
        with pytest.raises(DimensionError):
            Mps([torch.ones(1, 2, 2, dtype=DTYPE), torch.ones(3, 2, 1, dtype=DTYPE)])

    def test_open_boundary(self) -> None:
        with pytest.raises(DimensionError):
            Mps([torch.ones(2, 2, 1, dtype=DTYPE), torch.ones(1, 2, 1, dtype=DTYPE)])

    def test_center_out_of_range(self) -> None:
        with pytest.raises(ArgumentError):
            Mps([torch.ones(1, 2, 1, dtype=DTYPE)] * 2, canonical_center=2)

    def test_bond_caps(self) -> None:
        assert exact_bond_caps(4, 2, 8) == [1, 2, 4, 2, 1]
        assert exact_bond_caps(4, 2, 1) == [1, 1, 1, 1, 1]


class TestRandomMps:
    """Seeded initialization."""

    def test_unit_norm_and_canonical(self) -> None:
        m = random_mps(6, 2, 4, seed=1)
        assert m.canonical_center == 5
        assert m.norm() == pytest.approx(1.0, abs=1e-12)
        assert m.canonical_residual() < 1e-12
        assert float(torch.linalg.vector_norm(m.to_dense())) == pytest.approx(
            1.0, abs=1e-12
        )

    def test_bond_dims_respect_caps(self) -> None:
        m = random_mps(5, 2, 16, seed=2)
        assert m.bond_dims == exact_bond_caps(5, 2, 16)
        assert m.max_bond == 4

    def test_deterministic(self) -> None:
        a = random_mps(4, 2, 3, seed=9)
        b = random_mps(4, 2, 3, seed=9)
        c = random_mps(4, 2, 3, seed=10)
        assert all(torch.equal(x, y) for x, y in zip(a.tensors, b.tensors))
        assert not torch.equal(a.to_dense(), c.to_dense())

    def test_rejects_bad_arguments(self) -> None:
        with pytest.raises(ArgumentError):
            random_mps(1, 2, 2, seed=0)
        with pytest.raises(ArgumentError):
            random_mps(3, 2, 0, seed=0)


class TestCanonicalize:
    """Moving the orthogonality center keeps the state."""

    @pytest.mark.parametrize("center", [0, 2, 4])
    def test_state_preserved(self, center: int) -> None:
        m = unnormalized_mps(5, 4, seed=3)
        moved = canonicalize(m, center)
        assert moved.canonical_center == center
        assert moved.canonical_residual() < 1e-12
        assert torch.allclose(moved.to_dense(), m.to_dense(), atol=1e-12)
        assert moved.norm_squared() == pytest.approx(m.norm_squared(), rel=1e-12)

    def test_move_back_and_forth(self) -> None:
        m = canonicalize(unnormalized_mps(6, 3, seed=4), 1)
        there = canonicalize(m, 5)
        back = canonicalize(there, 2)
        assert back.canonical_residual() < 1e-12
        assert torch.allclose(back.to_dense(), m.to_dense(), atol=1e-12)

    def test_out_of_range(self) -> None:
        with pytest.raises(ArgumentError):
            canonicalize(random_mps(3, 2, 2, seed=0), 3)


class TestOverlap:
    def test_matches_dense_contraction(self) -> None:
        m = random_mps(5, 2, 3, seed=5)
        dense = enumerate_mps(m.tensors)
        assert torch.allclose(m.to_dense(), dense, atol=1e-14)
        batch = map_images(np.random.default_rng(6).random((4, 5)))
        amplitudes = m.amplitudes(batch)
        for j in range(4):
            expected = float(kron_state(batch[j]) @ dense)
            assert float(amplitudes[j]) == pytest.approx(expected, abs=1e-13)

    def test_single_product_state(self) -> None:
        v = map_image([0.2, 0.7, 0.4])
        m = product_mps(v.vectors)
        assert mps_product_overlap(m, v) == pytest.approx(1.0, abs=1e-14)

    def test_geometry_mismatch(self) -> None:
        with pytest.raises(DimensionError):
            mps_product_overlap(random_mps(3, 2, 2, seed=0), map_image([0.1, 0.2]))
        with pytest.raises(DimensionError):
            random_mps(3, 2, 2, seed=0).amplitudes(map_images(np.zeros((1, 4))))

    def test_scaling(self) -> None:
        m = random_mps(4, 2, 2, seed=7)
        assert m.scaled(3.0).norm() == pytest.approx(3.0, abs=1e-12)
        assert m.scaled(3.0).normalized().norm() == pytest.approx(1.0, abs=1e-12)

    def test_zero_state_cannot_be_normalized(self) -> None:
        zero = Mps([torch.zeros(1, 2, 1, dtype=DTYPE), torch.zeros(1, 2, 1, dtype=DTYPE)])
        assert zero.norm() == 0.0
        with pytest.raises(DegenerateStateError):
            zero.normalized()


class TestEntropy:
    """Entanglement across a bond."""

    def test_bell_pair(self) -> None:
        m = uniform_superposition_mps(2)
        assert renyi2_entropy(m, 1) == pytest.approx(math.log(2.0), abs=1e-12)
        assert renyi_entropy(m, 1, 1.0) == pytest.approx(math.log(2.0), abs=1e-12)
        spectrum = entanglement_spectrum(m, 1)
        assert torch.allclose(
            spectrum, torch.full((2,), 1.0 / math.sqrt(2.0), dtype=DTYPE), atol=1e-12
        )

    def test_superposition_every_bond(self) -> None:
        m = uniform_superposition_mps(5)
        for bond in range(1, 5):
            assert renyi2_entropy(m, bond) == pytest.approx(math.log(2.0), abs=1e-12)

    def test_product_state_has_none(self) -> None:
        m = product_mps(map_image([0.3, 0.6, 0.9]).vectors)
        for bond in (1, 2):
            assert abs(renyi2_entropy(m, bond)) < 1e-12
            assert abs(renyi_entropy(m, bond, 1.0)) < 1e-12

    def test_bounded_by_bond_dimension(self) -> None:
        m = random_mps(7, 2, 3, seed=8)
        for bond in range(1, 7):
            chi = m.bond_dims[bond]
            assert renyi2_entropy(m, bond) <= math.log(chi) + 1e-10

    def test_bond_out_of_range(self) -> None:
        with pytest.raises(ArgumentError):
            renyi2_entropy(random_mps(3, 2, 2, seed=0), 0)
        with pytest.raises(ArgumentError):
            renyi2_entropy(random_mps(3, 2, 2, seed=0), 3)

    def test_one_pass_matches_per_bond(self) -> None:
        m = random_mps(6, 2, 3, seed=9)
        spectra = all_entanglement_spectra(m)
        assert len(spectra) == 5
        for bond, spectrum in enumerate(spectra, start=1):
            expected = entanglement_spectrum(m, bond)
            assert spectrum.shape == expected.shape
            assert torch.allclose(spectrum, expected, atol=1e-12)
            assert spectrum_entropy(spectrum, 2.0) == pytest.approx(
                renyi2_entropy(m, bond), abs=1e-12
            )

    def test_negative_order(self) -> None:
        with pytest.raises(ArgumentError):
            spectrum_entropy(torch.ones(1, dtype=DTYPE), -1.0)


if __name__ == "__main__":
    pytest.main()
