"""
Labeled MPS Module

The discriminative MPS: an open-boundary MPS where exactly one site carries an
extra label index of dimension K. Contracting every physical index with a
product state leaves a K-vector of class scores.

The label-carrying tensor has shape (chi_l, d, K, chi_r); all other sites are
(chi_l, d, chi_r). The label site doubles as the canonical center.
"""

from typing import List, Sequence, Tuple

import torch
from torch import Tensor

from GenerativeTNC.Errors import ArgumentError, DimensionError
from GenerativeTNC.Models.Environments import left_environments, right_environments
from GenerativeTNC.Models.FeatureMap import ProductState
from GenerativeTNC.Models.Mps import exact_bond_caps, shift_center_left
from GenerativeTNC.Tensors.TensorKernel import DTYPE, contract, svd_split


class LabeledMps:
    def __init__(self, tensors: Sequence[Tensor], label_site: int) -> None:
        if not 0 <= label_site < len(tensors):
            raise ArgumentError(f"Label site {label_site} out of range")
        self._tensors: Tuple[Tensor, ...] = tuple(t.to(dtype=DTYPE) for t in tensors)
        for site, t in enumerate(self._tensors):
            expected_rank = 4 if site == label_site else 3
            if t.dim() != expected_rank:
                raise DimensionError(
                    f"Site {site} must have rank {expected_rank}, got {tuple(t.shape)}"
                )
            if site > 0 and self._tensors[site - 1].shape[-1] != t.shape[0]:
                raise DimensionError(
                    f"Bond mismatch between sites {site - 1} and {site}"
                )
        if self._tensors[0].shape[0] != 1 or self._tensors[-1].shape[-1] != 1:
            raise DimensionError("Boundary bond dimensions must be 1")
        self.label_site = label_site

    @property
    def tensors(self) -> Tuple[Tensor, ...]:
        return self._tensors

    @property
    def num_sites(self) -> int:
        return len(self._tensors)

    @property
    def local_dim(self) -> int:
        return int(self._tensors[0].shape[1])

    @property
    def num_labels(self) -> int:
        return int(self._tensors[self.label_site].shape[2])

    @property
    def bond_dims(self) -> List[int]:
        return [int(t.shape[0]) for t in self._tensors] + [1]

    def predict(self, batch: Tensor) -> Tensor:
        """
        Class score vectors for a batch.

        Args:
            batch: ``(J, L, d)`` feature batch.

        Returns:
            ``(J, K)`` tensor of unnormalized outputs.
        """
        if batch.dim() != 3 or batch.shape[1:] != (self.num_sites, self.local_dim):
            raise DimensionError(
                f"Feature batch {tuple(batch.shape)} does not match labeled MPS with "
                f"L={self.num_sites}, d={self.local_dim}"
            )
        site = self.label_site
        left = left_environments(self._tensors, batch, site)[site]
        right = right_environments(self._tensors, batch, site + 1)[site + 1]
        return torch.einsum(
            "ja,jd,adkb,jb->jk", left, batch[:, site], self._tensors[site], right
        )

    def __repr__(self) -> str:
        return (
            f"LabeledMps(L={self.num_sites}, d={self.local_dim}, K={self.num_labels}, "
            f"bond_dims={self.bond_dims}, label_site={self.label_site})"
        )


def predict_vector(m: LabeledMps, v: ProductState) -> Tensor:
    if v.num_sites != m.num_sites or v.local_dim != m.local_dim:
        raise DimensionError(
            f"Product state (L={v.num_sites}, d={v.local_dim}) does not match "
            f"labeled MPS (L={m.num_sites}, d={m.local_dim})"
        )
    return m.predict(v.vectors.unsqueeze(0))[0]


def random_labeled_mps(
    num_sites: int, local_dim: int, num_labels: int, chi: int, seed: int
) -> LabeledMps:
    """
    Seeded random labeled MPS with the label on site 0 and every other site
    right-orthonormal. Entries start uniform in (-0.5, 0.5).
    """
    if num_sites < 2 or local_dim < 2 or chi < 1 or num_labels < 1:
        raise ArgumentError(
            f"Need L >= 2, d >= 2, K >= 1, chi >= 1; got L={num_sites}, "
            f"d={local_dim}, K={num_labels}, chi={chi}"
        )
    generator = torch.Generator().manual_seed(seed)
    caps = exact_bond_caps(num_sites, local_dim, chi)
    tensors: List[Tensor] = []
    for site in range(num_sites):
        shape: Tuple[int, ...] = (caps[site], local_dim, caps[site + 1])
        if site == 0:
            shape = (caps[0], local_dim, num_labels, caps[1])
        tensors.append(torch.rand(*shape, generator=generator, dtype=DTYPE) - 0.5)
    for site in range(num_sites - 1, 0, -1):
        tensors[site - 1], tensors[site] = shift_center_left(
            tensors[site - 1], tensors[site]
        )
    return LabeledMps(tensors, label_site=0)


def merge_pair(m: LabeledMps, site: int) -> Tensor:
    """
    Contract sites ``site`` and ``site + 1`` (one of which carries the label)
    into a (chi_l, d, d, K, chi_r) tensor.
    """
    if m.label_site not in (site, site + 1):
        raise ArgumentError(
            f"Label sits on site {m.label_site}, not in pair ({site}, {site + 1})"
        )
    left, right = m.tensors[site], m.tensors[site + 1]
    if m.label_site == site:
        return contract(left, right, [(3, 0)]).permute(0, 1, 3, 2, 4)
    return contract(left, right, [(2, 0)])


def split_pair(
    merged: Tensor, max_rank: int, label_to_right: bool
) -> Tuple[Tensor, Tensor, float]:
    """
    Truncated SVD of a merged pair back into two sites.

    The label index rides on the right factor when ``label_to_right`` (a
    rightward sweep, leaving the left site left-orthonormal) and on the left
    factor otherwise (leaving the right site right-orthonormal).

    Returns:
        ``(left_site, right_site, discarded_weight)``.
    """
    if label_to_right:
        split = svd_split(merged, [0, 1], max_rank)
        right = split.s.reshape(-1, 1, 1, 1) * split.vh
        return split.u, right, split.discarded_weight
    split = svd_split(merged, [0, 1, 3], max_rank)
    left = split.u * split.s
    return left, split.vh, split.discarded_weight


def move_label(
    m: LabeledMps, to_right: bool, max_rank: int
) -> Tuple[LabeledMps, float]:
    """Move the label index one site by merging and re-splitting the pair."""
    site = m.label_site if to_right else m.label_site - 1
    if site < 0 or site + 1 >= m.num_sites:
        direction = "right" if to_right else "left"
        raise ArgumentError(f"Cannot move label {direction} from {m.label_site}")
    left, right, discarded = split_pair(merge_pair(m, site), max_rank, to_right)
    tensors = list(m.tensors)
    tensors[site], tensors[site + 1] = left, right
    return LabeledMps(tensors, site + 1 if to_right else site), discarded
