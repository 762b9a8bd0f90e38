from typing import List

from torch import Tensor

from GenerativeTNC.Classifiers.Classifier import Classifier
from GenerativeTNC.Models.LabeledMps import LabeledMps


class DiscriminativeClassifier(Classifier):
    """Scores are the raw label-index outputs of a trained labeled MPS."""

    def __init__(self, model: LabeledMps) -> None:
        self.model = model

    @property
    def class_labels(self) -> List[int]:
        return list(range(self.model.num_labels))

    def scores(self, batch: Tensor) -> Tensor:
        return self.model.predict(batch)
