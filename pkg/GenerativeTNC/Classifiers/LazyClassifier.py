"""
Lazy classifier: the class state is the plain sum of its feature-mapped
samples divided by sqrt(N_c). It is never formed; its overlap with a product
state is a sum of product-state overlaps.
"""

import math
from typing import Dict, List, Mapping

import torch
from torch import Tensor

from GenerativeTNC.Classifiers.Classifier import LOG_FLOOR, Classifier
from GenerativeTNC.Classifiers.GenerativeClassifier import Classification
from GenerativeTNC.Data.IdxDataset import Dataset, split_by_class
from GenerativeTNC.Errors import ArgumentError, DimensionError
from GenerativeTNC.Models.FeatureMap import (
    ProductState,
    map_images,
    pairwise_product_overlaps,
)


class LazyBundle(Classifier):
    def __init__(self, samples: Mapping[int, Tensor]) -> None:
        """
        Args:
            samples: Class label to ``(N_c, L, d)`` feature batch, N_c >= 1.
        """
        if not samples:
            raise ArgumentError("A lazy bundle needs at least one class")
        self.samples: Dict[int, Tensor] = {k: samples[k] for k in sorted(samples)}
        geometries = {tuple(b.shape[1:]) for b in self.samples.values()}
        if len(geometries) != 1:
            raise DimensionError(f"Classes differ in geometry: {sorted(geometries)}")
        for label, batch in self.samples.items():
            if batch.dim() != 3 or batch.shape[0] < 1:
                raise ArgumentError(f"Class {label} needs a non-empty (N, L, d) batch")

    @classmethod
    def from_dataset(cls, dataset: Dataset, local_dim: int = 2) -> "LazyBundle":
        parts = split_by_class(dataset)
        return cls(
            {
                label: map_images(part.images, local_dim)
                for label, part in enumerate(parts)
                if len(part) > 0
            }
        )

    @property
    def class_labels(self) -> List[int]:
        return list(self.samples)

    @property
    def counts(self) -> Dict[int, int]:
        return {label: int(batch.shape[0]) for label, batch in self.samples.items()}

    def scores(self, batch: Tensor) -> Tensor:
        columns = [
            torch.abs(torch.sum(pairwise_product_overlaps(batch, members), dim=1))
            / math.sqrt(members.shape[0])
            for members in self.samples.values()
        ]
        return torch.stack(columns, dim=1)

    def __len__(self) -> int:
        return len(self.samples)


def lazy_fidelity(lz: LazyBundle, v: ProductState) -> Tensor:
    return lz.scores(v.vectors.unsqueeze(0))[0]


def classify_lazy(lz: LazyBundle, v: ProductState) -> Classification:
    decisions = lz.decide(v.vectors.unsqueeze(0))
    return Classification(
        class_label=int(decisions.labels[0]),
        log_fidelities=torch.log(decisions.scores[0] + LOG_FLOOR),
        undecidable=bool(decisions.undecidable[0]),
    )
