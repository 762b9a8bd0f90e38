"""
Feature Map Module

Maps pixel vectors to product states of the many-body feature space and
computes overlaps between product states without ever forming the d^L vector.

Only the two-component map x -> [cos(pi x / 2), sin(pi x / 2)] is implemented.
Other local dimensions can be plugged in with ``register_local_map``.
"""

import math
from dataclasses import dataclass
from typing import Callable, Dict, Sequence, Union

import numpy as np
import numpy.typing as npt
import torch
from torch import Tensor

from GenerativeTNC.Errors import ArgumentError, DimensionError, PixelDomainError
from GenerativeTNC.Tensors.TensorKernel import DTYPE, as_tensor

UNIT_NORM_TOLERANCE = 1e-12
OVERLAP_CHUNK = 64

# Maps a tensor of pixels (any shape) to local vectors with a trailing axis of size d
LocalMap = Callable[[Tensor], Tensor]


def _cos_sin_map(pixels: Tensor) -> Tensor:
    angle = pixels * (math.pi / 2.0)
    return torch.stack([torch.cos(angle), torch.sin(angle)], dim=-1)


_LOCAL_MAPS: Dict[int, LocalMap] = {2: _cos_sin_map}


def register_local_map(d: int, local_map: LocalMap) -> None:
    """Register a ``d``-component local map; it must return unit vectors."""
    if d < 2:
        raise ArgumentError(f"Local dimension must be >= 2, got {d}")
    _LOCAL_MAPS[d] = local_map


def _local_map(d: int) -> LocalMap:
    if d not in _LOCAL_MAPS:
        raise ArgumentError(f"No feature map registered for d={d}")
    return _LOCAL_MAPS[d]


@dataclass(frozen=True, eq=False)
class ProductState:
    """An image in feature space: ``vectors[i]`` is the unit vector of pixel i."""

    vectors: Tensor  # (L, d)

    def __post_init__(self) -> None:
        if self.vectors.dim() != 2:
            raise DimensionError(
                f"ProductState vectors must be (L, d), got {tuple(self.vectors.shape)}"
            )
        norms = torch.linalg.vector_norm(self.vectors, dim=1)
        if not bool((torch.abs(norms - 1.0) <= UNIT_NORM_TOLERANCE).all()):
            raise ArgumentError("ProductState local vectors must have unit norm")

    @property
    def num_sites(self) -> int:
        return int(self.vectors.shape[0])

    @property
    def local_dim(self) -> int:
        return int(self.vectors.shape[1])


def _check_pixels(pixels: Tensor) -> None:
    if not bool(((pixels >= 0.0) & (pixels <= 1.0)).all()):
        raise PixelDomainError("Pixels must lie in [0, 1]")


def map_pixel(x: float, d: int = 2) -> Tensor:
    if not 0.0 <= x <= 1.0:
        raise PixelDomainError(f"Pixel {x} outside [0, 1]")
    return _local_map(d)(torch.tensor(x, dtype=DTYPE))


def map_image(
    pixels: Union[Sequence[float], npt.NDArray[np.float64], Tensor], d: int = 2
) -> ProductState:
    values = as_tensor(pixels).reshape(-1)
    _check_pixels(values)
    return ProductState(_local_map(d)(values))


def map_images(pixels: Union[npt.NDArray[np.float64], Tensor], d: int = 2) -> Tensor:
    """
    Map a batch of images at once.

    Args:
        pixels: ``(N, L)`` array of pixels in [0, 1].
        d: Local dimension.

    Returns:
        ``(N, L, d)`` feature batch.
    """
    values = as_tensor(pixels)
    if values.dim() != 2:
        raise DimensionError(f"Expected (N, L) pixels, got {tuple(values.shape)}")
    _check_pixels(values)
    return _local_map(d)(values)


FeatureInput = Union[Tensor, Sequence[ProductState]]


def as_feature_batch(samples: FeatureInput) -> Tensor:
    """Stack product states into a ``(J, L, d)`` tensor; tensors pass through."""
    if isinstance(samples, Tensor):
        if samples.dim() != 3:
            raise DimensionError(
                f"Feature batch must be (J, L, d), got {tuple(samples.shape)}"
            )
        return samples.to(dtype=DTYPE)
    if not samples:
        raise ArgumentError("Empty sample sequence")
    shapes = {tuple(s.vectors.shape) for s in samples}
    if len(shapes) != 1:
        raise DimensionError(f"Product states of mixed geometry: {sorted(shapes)}")
    return torch.stack([s.vectors for s in samples])


def product_overlap(u: ProductState, v: ProductState) -> float:
    """Inner product of two product states: the product of local dot products."""
    if u.vectors.shape != v.vectors.shape:
        raise DimensionError(
            f"Product states differ in shape: {tuple(u.vectors.shape)} vs "
            f"{tuple(v.vectors.shape)}"
        )
    return float(torch.prod(torch.sum(u.vectors * v.vectors, dim=1)))


def pairwise_product_overlaps(
    a: Tensor, b: Tensor, chunk: int = OVERLAP_CHUNK
) -> Tensor:
    """
    All inner products between two feature batches.

    Args:
        a: ``(N, L, d)`` feature batch.
        b: ``(M, L, d)`` feature batch.
        chunk: Rows of ``a`` processed at once, bounding memory at chunk*M*L.

    Returns:
        ``(N, M)`` overlap matrix.
    """
    if a.shape[1:] != b.shape[1:]:
        raise DimensionError(
            f"Feature batches differ in geometry: {tuple(a.shape[1:])} vs "
            f"{tuple(b.shape[1:])}"
        )
    out = torch.empty(a.shape[0], b.shape[0], dtype=DTYPE)
    for start in range(0, a.shape[0], chunk):
        block = a[start : start + chunk]
        local = torch.einsum("nld,mld->nml", block, b)
        out[start : start + block.shape[0]] = torch.prod(local, dim=2)
    return out
