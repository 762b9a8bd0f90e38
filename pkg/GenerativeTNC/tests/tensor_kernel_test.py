"""
Tests for the tensor kernel primitives.
"""

import pytest
import torch

from GenerativeTNC.Errors import ArgumentError, DimensionError
from GenerativeTNC.Tensors.TensorKernel import (
    DTYPE,
    contract,
    frobenius_norm,
    qr_split,
    svd_split,
)


def random_tensor(*shape: int, seed: int = 0) -> torch.Tensor:
    generator = torch.Generator().manual_seed(seed)
    return torch.rand(*shape, generator=generator, dtype=DTYPE) - 0.5


class TestContract:
    """Pairwise contraction."""

    def test_identity_contraction(self) -> None:
        v = torch.tensor([0.3, -0.7], dtype=DTYPE)
        result = contract(torch.eye(2, dtype=DTYPE), v, [(1, 0)])
        assert torch.equal(result, v)

    def test_vector_inner_product(self) -> None:
        u = torch.tensor([1.0, 0.0], dtype=DTYPE)
        result = contract(u, u.clone(), [(0, 0)])
        assert result.dim() == 0
        assert float(result) == 1.0

    def test_matches_triple_loop(self) -> None:
        a = random_tensor(3, 4, seed=1)
        b = random_tensor(4, 2, seed=2)
        result = contract(a, b, [(1, 0)])
        for i in range(3):
            for j in range(2):
                expected = sum(float(a[i, k] * b[k, j]) for k in range(4))
                assert abs(float(result[i, j]) - expected) < 1e-14

    def test_index_order(self) -> None:
        """a's free indices come first, then b's."""
        a = random_tensor(2, 3, 5, seed=3)
        b = random_tensor(7, 3, seed=4)
        assert contract(a, b, [(1, 1)]).shape == (2, 5, 7)

    def test_outer_product_without_pairs(self) -> None:
        a = random_tensor(2, seed=5)
        b = random_tensor(3, seed=6)
        assert torch.allclose(contract(a, b, []), torch.outer(a, b))

    def test_bilinear(self) -> None:
        a = random_tensor(3, 4, seed=7)
        b = random_tensor(4, 5, seed=8)
        scaled = contract(2.5 * a, b, [(1, 0)])
        assert torch.allclose(scaled, 2.5 * contract(a, b, [(1, 0)]), atol=1e-14)

    def test_extent_mismatch(self) -> None:
        with pytest.raises(DimensionError):
            contract(random_tensor(2, 3), random_tensor(4, 2), [(1, 0)])

    def test_repeated_index(self) -> None:
        with pytest.raises(ArgumentError):
            contract(random_tensor(2, 2), random_tensor(2, 2), [(0, 0), (0, 1)])


class TestQrSplit:
    """QR across an index bipartition."""

    def test_orthonormal_columns(self) -> None:
        q, r = qr_split(random_tensor(6, 4, seed=11), [0])
        assert torch.allclose(q.T @ q, torch.eye(4, dtype=DTYPE), atol=1e-12)
        assert torch.all(torch.diagonal(r) >= 0)

    def test_reconstruction_of_three_index_tensor(self) -> None:
        t = random_tensor(2, 2, 3, seed=12)
        q, r = qr_split(t, [0, 1])
        assert q.shape == (2, 2, 3)
        assert r.shape == (3, 3)
        rebuilt = contract(q, r, [(2, 0)])
        assert frobenius_norm(rebuilt - t) / frobenius_norm(t) < 1e-12

    def test_non_contiguous_left_group(self) -> None:
        t = random_tensor(3, 4, 2, seed=13)
        q, r = qr_split(t, [0, 2])
        assert q.shape == (3, 2, 4)
        rebuilt = contract(q, r, [(2, 0)]).permute(0, 2, 1)
        assert frobenius_norm(rebuilt - t) / frobenius_norm(t) < 1e-12

    def test_orthonormal_input_gives_unit_r(self) -> None:
        q0, _ = torch.linalg.qr(random_tensor(5, 3, seed=14))
        q, r = qr_split(q0, [0])
        assert torch.allclose(torch.abs(r), torch.eye(3, dtype=DTYPE), atol=1e-12)
        assert torch.allclose(torch.abs(q), torch.abs(q0), atol=1e-12)

    def test_rejects_full_left_group(self) -> None:
        with pytest.raises(ArgumentError):
            qr_split(random_tensor(2, 3), [0, 1])


class TestSvdSplit:
    """Truncated SVD."""

    def test_truncates_diagonal(self) -> None:
        split = svd_split(torch.diag(torch.tensor([3.0, 2.0, 1.0], dtype=DTYPE)), [0], 2)
        assert torch.allclose(split.s, torch.tensor([3.0, 2.0], dtype=DTYPE))
        assert split.discarded_weight == pytest.approx(1.0, abs=1e-12)
        assert split.rank == 2

    def test_rank_one(self) -> None:
        outer = torch.outer(random_tensor(4, seed=21), random_tensor(3, seed=22))
        split = svd_split(outer, [0], 5)
        assert split.rank == 3
        assert torch.all(split.s[1:] < 1e-12)

    def test_full_rank_reconstruction(self) -> None:
        t = random_tensor(8, 8, seed=23)
        split = svd_split(t, [0], 8)
        rebuilt = split.u @ torch.diag(split.s) @ split.vh
        assert frobenius_norm(rebuilt - t) / frobenius_norm(t) < 1e-10
        assert split.discarded_weight == 0.0

    def test_factor_orthonormality(self) -> None:
        split = svd_split(random_tensor(3, 2, 4, seed=24), [0, 1], 3)
        u = split.u.reshape(-1, split.rank)
        vh = split.vh.reshape(split.rank, -1)
        assert torch.allclose(u.T @ u, torch.eye(split.rank, dtype=DTYPE), atol=1e-12)
        assert torch.allclose(vh @ vh.T, torch.eye(split.rank, dtype=DTYPE), atol=1e-12)
        assert torch.all(split.s[:-1] >= split.s[1:])

    def test_rejects_zero_rank(self) -> None:
        with pytest.raises(ArgumentError):
            svd_split(random_tensor(2, 2), [0], 0)


class TestFrobeniusNorm:
    def test_values(self) -> None:
        assert frobenius_norm(torch.zeros(3, 2, dtype=DTYPE)) == 0.0
        assert frobenius_norm(torch.tensor([0.0, 1.0, 0.0], dtype=DTYPE)) == 1.0
        assert frobenius_norm(torch.tensor([3.0, 4.0], dtype=DTYPE)) == pytest.approx(5.0)


if __name__ == "__main__":
    pytest.main()
