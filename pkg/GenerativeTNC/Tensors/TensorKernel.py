"""
Tensor Kernel Module

Dense real tensors and the handful of linear-algebra primitives every other
module builds on: pairwise contraction, QR and truncated SVD splits across an
index bipartition, and the Frobenius norm.

Tensors are plain ``torch.Tensor`` objects in float64. The functions here never
mutate their inputs.
"""

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import torch
from torch import Tensor

from GenerativeTNC.Errors import ArgumentError, DimensionError, NonFiniteError

DTYPE = torch.float64


def as_tensor(data: object) -> Tensor:
    """Convert nested sequences, numpy arrays or tensors to a float64 tensor."""
    if isinstance(data, Tensor):
        return data.to(dtype=DTYPE)
    return torch.as_tensor(data, dtype=DTYPE)


def check_finite(t: Tensor, what: str = "tensor") -> Tensor:
    if not bool(torch.isfinite(t).all()):
        raise NonFiniteError(f"{what} contains NaN or Inf entries")
    return t


def contract(a: Tensor, b: Tensor, pairs: Sequence[Tuple[int, int]]) -> Tensor:
    """
    Contract ``a`` and ``b`` over the given index pairs.

    Args:
        a: First tensor.
        b: Second tensor.
        pairs: ``(index of a, index of b)`` pairs to sum over.

    Returns:
        Tensor carrying a's unpaired indices (in order) followed by b's.

    Raises:
        ArgumentError: If an index is out of range or used twice.
        DimensionError: If paired extents differ.
    """
    a_axes = [p[0] for p in pairs]
    b_axes = [p[1] for p in pairs]
    for axes, t, name in ((a_axes, a, "a"), (b_axes, b, "b")):
        if len(set(axes)) != len(axes):
            raise ArgumentError(f"Repeated index of {name} in pairs {list(pairs)}")
        for axis in axes:
            if axis < 0 or axis >= t.dim():
                raise ArgumentError(
                    f"Index {axis} out of range for {name} of rank {t.dim()}"
                )
    for ia, ib in pairs:
        if a.shape[ia] != b.shape[ib]:
            raise DimensionError(
                f"Cannot contract index {ia} (extent {a.shape[ia]}) "
                f"with index {ib} (extent {b.shape[ib]})"
            )
    if not pairs:
        result = torch.tensordot(a, b, dims=0)
    else:
        result = torch.tensordot(a, b, dims=(a_axes, b_axes))
    return check_finite(result, "contraction result")


def _group(
    t: Tensor, left_indices: Sequence[int]
) -> Tuple[Tensor, List[int], List[int]]:
    left = list(left_indices)
    if not left:
        raise ArgumentError("left_indices must not be empty")
    if len(set(left)) != len(left):
        raise ArgumentError(f"Repeated index in left_indices {left}")
    if any(i < 0 or i >= t.dim() for i in left):
        raise ArgumentError(f"left_indices {left} out of range for rank {t.dim()}")
    right = [i for i in range(t.dim()) if i not in left]
    if not right:
        raise ArgumentError("left_indices must be a proper subset of the indices")
    left_shape = [t.shape[i] for i in left]
    right_shape = [t.shape[i] for i in right]
    rows = 1
    for extent in left_shape:
        rows *= extent
    matrix = t.permute(*left, *right).reshape(rows, -1)
    return matrix, left_shape, right_shape


def qr_split(t: Tensor, left_indices: Sequence[int]) -> Tuple[Tensor, Tensor]:
    """
    QR-factor ``t`` across the bipartition (left_indices | rest).

    R has a non-negative diagonal, which makes the factorization unique for full
    column rank input.

    Returns:
        ``(q, r)`` with q of shape ``left extents + [k]`` (orthonormal columns)
        and r of shape ``[k] + right extents``, ``k = min(rows, cols)``.
    """
    matrix, left_shape, right_shape = _group(t, left_indices)
    q, r = torch.linalg.qr(matrix, mode="reduced")
    signs = torch.sign(torch.diagonal(r))
    signs = torch.where(signs == 0, torch.ones_like(signs), signs)
    q = q * signs.unsqueeze(0)
    r = r * signs.unsqueeze(1)
    k = q.shape[1]
    q_t = check_finite(q.reshape(*left_shape, k), "QR factor Q")
    r_t = check_finite(r.reshape(k, *right_shape), "QR factor R")
    return q_t, r_t


@dataclass
class SvdSplit:
    """Truncated SVD across an index bipartition."""

    u: Tensor  # left extents + [k], orthonormal columns
    s: Tensor  # [k], descending
    vh: Tensor  # [k] + right extents, orthonormal rows
    discarded_weight: float  # sum of squared dropped singular values

    @property
    def rank(self) -> int:
        return int(self.s.shape[0])


def svd_split(t: Tensor, left_indices: Sequence[int], max_rank: int) -> SvdSplit:
    """
    SVD ``t`` across (left_indices | rest), keeping at most ``max_rank`` values.

    Args:
        t: Tensor to split.
        left_indices: Indices grouped into the row space, in this order.
        max_rank: Maximum number of singular values to keep (>= 1).

    Returns:
        SvdSplit with the kept factors and the discarded weight.
    """
    if max_rank < 1:
        raise ArgumentError(f"max_rank must be >= 1, got {max_rank}")
    matrix, left_shape, right_shape = _group(t, left_indices)
    u, s, vh = torch.linalg.svd(matrix, full_matrices=False)
    k = min(max_rank, int(s.shape[0]))
    discarded = float(torch.sum(s[k:] ** 2))
    return SvdSplit(
        u=check_finite(u[:, :k].reshape(*left_shape, k), "SVD factor U"),
        s=check_finite(s[:k].clone(), "singular values"),
        vh=check_finite(vh[:k, :].reshape(k, *right_shape), "SVD factor V"),
        discarded_weight=discarded,
    )


def frobenius_norm(t: Tensor) -> float:
    return float(torch.linalg.vector_norm(t.reshape(-1)))
