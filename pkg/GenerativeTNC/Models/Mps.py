"""
Matrix Product State Module

The open-boundary MPS: L site tensors of shape (chi_left, d, chi_right) with
chi_0 = chi_L = 1, an optional canonical center, and the operations built on
it: random initialization, canonicalization, overlaps with product states and
the entanglement spectrum at a bond.
"""

import math
from typing import List, Optional, Sequence, Tuple

import torch
from torch import Tensor

from GenerativeTNC.Errors import ArgumentError, DegenerateStateError, DimensionError
from GenerativeTNC.Models.Environments import absorb_left, boundary
from GenerativeTNC.Models.FeatureMap import ProductState
from GenerativeTNC.Tensors.TensorKernel import (
    DTYPE,
    contract,
    frobenius_norm,
    qr_split,
    svd_split,
)

MAX_DENSE_SITES = 24


class Mps:
    """
    Open-boundary matrix product state.

    If ``canonical_center`` is set, every site left of it is left-orthonormal
    and every site right of it is right-orthonormal, so the squared norm of the
    whole state is the squared Frobenius norm of the center tensor.
    """

    def __init__(
        self, tensors: Sequence[Tensor], canonical_center: Optional[int] = None
    ) -> None:
        if not tensors:
            raise ArgumentError("An MPS needs at least one site")
        self._tensors: Tuple[Tensor, ...] = tuple(t.to(dtype=DTYPE) for t in tensors)
        local_dim = self._tensors[0].shape[1] if self._tensors[0].dim() == 3 else -1
        for site, t in enumerate(self._tensors):
            if t.dim() != 3:
                raise DimensionError(
                    f"Site {site} tensor must be (chi_l, d, chi_r), "
                    f"got {tuple(t.shape)}"
                )
            if t.shape[1] != local_dim:
                raise DimensionError(f"Site {site} has local dimension {t.shape[1]}")
            if site > 0 and self._tensors[site - 1].shape[2] != t.shape[0]:
                raise DimensionError(
                    f"Bond mismatch between sites {site - 1} and {site}"
                )
        if self._tensors[0].shape[0] != 1 or self._tensors[-1].shape[2] != 1:
            raise DimensionError("Boundary bond dimensions must be 1")
        if canonical_center is not None and not 0 <= canonical_center < len(tensors):
            raise ArgumentError(f"Canonical center {canonical_center} out of range")
        self.canonical_center = canonical_center

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
    def bond_dims(self) -> List[int]:
        """Bond dimensions chi_0 .. chi_L (both boundaries are 1)."""
        return [int(t.shape[0]) for t in self._tensors] + [1]

    @property
    def max_bond(self) -> int:
        return max(self.bond_dims)

    def norm_squared(self) -> float:
        if self.canonical_center is not None:
            return frobenius_norm(self._tensors[self.canonical_center]) ** 2
        transfer = torch.ones(1, 1, dtype=DTYPE)
        for t in self._tensors:
            transfer = torch.einsum("ab,asc,bsd->cd", transfer, t, t)
        return float(transfer[0, 0])

    def norm(self) -> float:
        return math.sqrt(max(self.norm_squared(), 0.0))

    def scaled(self, factor: float) -> "Mps":
        site = self.canonical_center if self.canonical_center is not None else 0
        tensors = list(self._tensors)
        tensors[site] = tensors[site] * factor
        return Mps(tensors, self.canonical_center)

    def normalized(self) -> "Mps":
        norm = self.norm()
        if norm == 0.0:
            raise DegenerateStateError("Cannot normalize a zero-norm MPS")
        return self.scaled(1.0 / norm)

    def amplitudes(self, batch: Tensor) -> Tensor:
        """
        Overlaps of the state with a batch of product states.

        Args:
            batch: ``(J, L, d)`` feature batch.

        Returns:
            ``(J,)`` tensor of amplitudes v_j^T Psi.
        """
        if batch.dim() != 3 or batch.shape[1:] != (self.num_sites, self.local_dim):
            raise DimensionError(
                f"Feature batch {tuple(batch.shape)} does not match MPS with "
                f"L={self.num_sites}, d={self.local_dim}"
            )
        env = boundary(batch.shape[0])
        for site, t in enumerate(self._tensors):
            env = absorb_left(env, t, batch[:, site])
        return env[:, 0]

    def to_dense(self) -> Tensor:
        """The full d^L vector; only for small chains."""
        if self.num_sites > MAX_DENSE_SITES:
            raise ArgumentError(f"Refusing to densify {self.num_sites} sites")
        psi = self._tensors[0].reshape(self.local_dim, -1)
        for t in self._tensors[1:]:
            psi = contract(psi, t, [(psi.dim() - 1, 0)])
            psi = psi.reshape(-1, t.shape[2])
        return psi.reshape(-1)

    def left_orthonormality_residual(self, site: int) -> float:
        t = self._tensors[site]
        m = t.reshape(-1, t.shape[2])
        eye = torch.eye(m.shape[1], dtype=DTYPE)
        return float(torch.max(torch.abs(m.T @ m - eye)))

    def right_orthonormality_residual(self, site: int) -> float:
        t = self._tensors[site]
        m = t.reshape(t.shape[0], -1)
        eye = torch.eye(m.shape[0], dtype=DTYPE)
        return float(torch.max(torch.abs(m @ m.T - eye)))

    def canonical_residual(self) -> float:
        """Largest orthonormality violation around the canonical center."""
        if self.canonical_center is None:
            raise ArgumentError("MPS has no canonical center")
        residuals = [0.0]
        residuals += [
            self.left_orthonormality_residual(s) for s in range(self.canonical_center)
        ]
        residuals += [
            self.right_orthonormality_residual(s)
            for s in range(self.canonical_center + 1, self.num_sites)
        ]
        return max(residuals)

    def __repr__(self) -> str:
        return (
            f"Mps(L={self.num_sites}, d={self.local_dim}, bond_dims={self.bond_dims}, "
            f"center={self.canonical_center})"
        )


def exact_bond_caps(num_sites: int, local_dim: int, chi: int) -> List[int]:
    """Bond dimensions min(chi, d^l, d^(L-l)) for l = 0 .. L."""
    caps = []
    for bond in range(num_sites + 1):
        cap = chi
        for exponent in (bond, num_sites - bond):
            cap = min(cap, local_dim**exponent)
        caps.append(cap)
    return caps


def random_mps(num_sites: int, local_dim: int, chi: int, seed: int) -> Mps:
    """
    Seeded random MPS, canonical at the last site with unit norm.

    Entries are drawn uniformly from (-0.5, 0.5) before canonicalization.
    """
    if num_sites < 2 or local_dim < 2 or chi < 1:
        raise ArgumentError(
            f"Need L >= 2, d >= 2, chi >= 1; got L={num_sites}, "
            f"d={local_dim}, chi={chi}"
        )
    generator = torch.Generator().manual_seed(seed)
    caps = exact_bond_caps(num_sites, local_dim, chi)
    tensors = [
        torch.rand(
            caps[site], local_dim, caps[site + 1], generator=generator, dtype=DTYPE
        )
        - 0.5
        for site in range(num_sites)
    ]
    return canonicalize(Mps(tensors), num_sites - 1).normalized()


def shift_center_right(left: Tensor, right: Tensor) -> Tuple[Tensor, Tensor]:
    """QR the left site into a left-orthonormal tensor; R moves into the right site."""
    q, r = qr_split(left, [0, 1])
    return q, contract(r, right, [(1, 0)])


def shift_center_left(left: Tensor, right: Tensor) -> Tuple[Tensor, Tensor]:
    """
    Mirror of ``shift_center_right``: the right site becomes right-orthonormal.

    ``left`` may carry extra indices; its last index is the shared bond.
    """
    q, r = qr_split(right, [1, 2])
    new_right = q.permute(2, 0, 1)
    return contract(left, r, [(left.dim() - 1, 1)]), new_right


def canonicalize(m: Mps, center: int) -> Mps:
    """Move the canonical center to ``center`` without changing the state."""
    if not 0 <= center < m.num_sites:
        raise ArgumentError(f"Center {center} out of range for L={m.num_sites}")
    tensors = list(m.tensors)
    if m.canonical_center is None:
        left_start, right_start = 0, m.num_sites - 1
    else:
        left_start = right_start = m.canonical_center
    for site in range(left_start, center):
        tensors[site], tensors[site + 1] = shift_center_right(
            tensors[site], tensors[site + 1]
        )
    for site in range(right_start, center, -1):
        tensors[site - 1], tensors[site] = shift_center_left(
            tensors[site - 1], tensors[site]
        )
    return Mps(tensors, center)


def mps_product_overlap(m: Mps, v: ProductState) -> float:
    if v.num_sites != m.num_sites or v.local_dim != m.local_dim:
        raise DimensionError(
            f"Product state (L={v.num_sites}, d={v.local_dim}) does not match "
            f"MPS (L={m.num_sites}, d={m.local_dim})"
        )
    return float(m.amplitudes(v.vectors.unsqueeze(0))[0])


def _center_spectrum(center: Tensor) -> Tensor:
    full_rank = max(center.shape[0] * center.shape[1], 1)
    split = svd_split(center, [0, 1], max_rank=full_rank)
    total = float(torch.sqrt(torch.sum(split.s**2)))
    if total == 0.0:
        raise DegenerateStateError("Zero-norm MPS has no entanglement spectrum")
    return split.s / total


def entanglement_spectrum(m: Mps, bond: int) -> Tensor:
    """
    Normalized Schmidt values across ``bond`` (between sites bond-1 and bond).

    Raises:
        DegenerateStateError: If the state has zero norm.
    """
    if not 1 <= bond <= m.num_sites - 1:
        raise ArgumentError(f"Bond {bond} out of range 1..{m.num_sites - 1}")
    return _center_spectrum(canonicalize(m, bond - 1).tensors[bond - 1])


def all_entanglement_spectra(m: Mps) -> List[Tensor]:
    """Spectra of bonds 1..L-1 from a single left-to-right pass of the center."""
    tensors = list(canonicalize(m, 0).tensors)
    spectra: List[Tensor] = []
    for bond in range(1, m.num_sites):
        spectra.append(_center_spectrum(tensors[bond - 1]))
        if bond < m.num_sites - 1:
            tensors[bond - 1], tensors[bond] = shift_center_right(
                tensors[bond - 1], tensors[bond]
            )
    return spectra


def spectrum_entropy(spectrum: Tensor, alpha: float) -> float:
    """Renyi-alpha entropy of normalized Schmidt values; alpha = 1 is von Neumann."""
    if alpha < 0:
        raise ArgumentError(f"Renyi order must be non-negative, got {alpha}")
    probabilities = spectrum**2
    probabilities = probabilities[probabilities > 0]
    if alpha == 1.0:
        return float(-torch.sum(probabilities * torch.log(probabilities)))
    return float(torch.log(torch.sum(probabilities**alpha)) / (1.0 - alpha))


def renyi_entropy(m: Mps, bond: int, alpha: float) -> float:
    """
    Renyi-alpha entropy of the bipartition at ``bond``; alpha = 1 is the von
    Neumann limit.
    """
    return spectrum_entropy(entanglement_spectrum(m, bond), alpha)


def renyi2_entropy(m: Mps, bond: int) -> float:
    return renyi_entropy(m, bond, 2.0)
