"""
Environment contractions of a chain of site tensors with a batch of product
states. A left environment of site l is the (J, chi) contraction of every site
before l with the samples; a right environment covers every site after l.
"""

from typing import List, Sequence

import torch
from torch import Tensor

from GenerativeTNC.Tensors.TensorKernel import DTYPE


def boundary(num_samples: int) -> Tensor:
    return torch.ones(num_samples, 1, dtype=DTYPE)


def absorb_left(env: Tensor, site: Tensor, v: Tensor) -> Tensor:
    """Extend a (J, a) left environment by a (a, d, b) site against (J, d) vectors."""
    return torch.einsum("ja,jd,adb->jb", env, v, site)


def absorb_right(site: Tensor, v: Tensor, env: Tensor) -> Tensor:
    """Extend a (J, b) right environment by a (a, d, b) site against (J, d) vectors."""
    return torch.einsum("adb,jd,jb->ja", site, v, env)


def left_environments(
    tensors: Sequence[Tensor], batch: Tensor, upto: int
) -> List[Tensor]:
    """Left environments of sites ``0 .. upto`` (entry l excludes site l)."""
    envs = [boundary(batch.shape[0])]
    for site in range(upto):
        envs.append(absorb_left(envs[-1], tensors[site], batch[:, site]))
    return envs


def right_environments(
    tensors: Sequence[Tensor], batch: Tensor, downto: int
) -> List[Tensor]:
    """
    Right environments indexed by site: entry l covers sites ``l .. L-1``.

    Entries below ``downto`` are left as empty placeholders, entry L is the
    boundary.
    """
    num_sites = len(tensors)
    envs: List[Tensor] = [torch.empty(0, dtype=DTYPE)] * (num_sites + 1)
    envs[num_sites] = boundary(batch.shape[0])
    for site in range(num_sites - 1, downto - 1, -1):
        envs[site] = absorb_right(tensors[site], batch[:, site], envs[site + 1])
    return envs
