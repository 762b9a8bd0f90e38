import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import List

import numpy as np
import numpy.typing as npt
import torch
from torch import Tensor

logger = logging.getLogger(__name__)

# Added before taking logs so zero scores stay representable in tables
LOG_FLOOR = 1e-300


@dataclass(frozen=True, eq=False)
class Decisions:
    """Per-sample outcome of a classifier on a feature batch."""

    labels: npt.NDArray[np.int64]
    scores: Tensor  # (J, K), columns in class_labels order
    undecidable: npt.NDArray[np.bool_]

    @property
    def log_scores(self) -> Tensor:
        return torch.log(torch.abs(self.scores) + LOG_FLOOR)


class Classifier(ABC):
    @property
    @abstractmethod
    def class_labels(self) -> List[int]:
        pass

    @abstractmethod
    def scores(self, batch: Tensor) -> Tensor:
        pass

    def decide(self, batch: Tensor) -> Decisions:
        """
        Argmax decision per sample; ties go to the lowest class index. A sample
        that scores zero for every class is flagged undecidable and gets the
        first class.
        """
        scores = self.scores(batch)
        positions = torch.argmax(scores, dim=1).tolist()
        labels = np.asarray([self.class_labels[p] for p in positions], dtype=np.int64)
        undecidable = torch.all(scores == 0.0, dim=1).numpy()
        if undecidable.any():
            logger.warning(
                "%d samples score zero for every class; assigned class %d",
                int(undecidable.sum()),
                self.class_labels[0],
            )
        return Decisions(labels, scores, undecidable)
