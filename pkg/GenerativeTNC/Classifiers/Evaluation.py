"""
Accuracy, confusion matrix and per-sample log-score table of a classifier on a
labeled test set.
"""

import logging
from dataclasses import dataclass
from typing import List

import numpy as np
import numpy.typing as npt

from GenerativeTNC.Classifiers.Classifier import Classifier
from GenerativeTNC.Data.IdxDataset import Dataset
from GenerativeTNC.Errors import ArgumentError
from GenerativeTNC.Models.FeatureMap import map_images

logger = logging.getLogger(__name__)

EVAL_CHUNK = 256


@dataclass(frozen=True, eq=False)
class EvaluationReport:
    accuracy: float
    # confusion[true, predicted] over labels 0 .. num_classes - 1
    confusion: npt.NDArray[np.int64]
    precision: npt.NDArray[np.float64]
    recall: npt.NDArray[np.float64]
    true_labels: npt.NDArray[np.int64]
    predicted_labels: npt.NDArray[np.int64]
    undecidable: npt.NDArray[np.bool_]
    # (N, K) ln(|score| + 1e-300), columns in score_labels order
    log_scores: npt.NDArray[np.float64]
    score_labels: List[int]

    @property
    def num_samples(self) -> int:
        return int(self.true_labels.shape[0])

    @property
    def num_classes(self) -> int:
        return int(self.confusion.shape[0])


def _safe_ratio(
    numerator: npt.NDArray[np.int64], denominator: npt.NDArray[np.int64]
) -> npt.NDArray[np.float64]:
    out = np.zeros(numerator.shape, dtype=np.float64)
    nonzero = denominator > 0
    out[nonzero] = numerator[nonzero] / denominator[nonzero]
    return out


def evaluate(
    classifier: Classifier,
    dataset: Dataset,
    local_dim: int = 2,
    chunk: int = EVAL_CHUNK,
) -> EvaluationReport:
    """
    Classify every sample of ``dataset`` and tabulate the outcome.

    Precision and recall of a class with no predictions (or no samples) are 0.

    Raises:
        ArgumentError: If the test set is empty.
    """
    if len(dataset) == 0:
        raise ArgumentError("Cannot evaluate on an empty test set")
    predicted: List[npt.NDArray[np.int64]] = []
    undecidable: List[npt.NDArray[np.bool_]] = []
    log_scores: List[npt.NDArray[np.float64]] = []
    for start in range(0, len(dataset), chunk):
        batch = map_images(dataset.images[start : start + chunk], local_dim)
        decisions = classifier.decide(batch)
        predicted.append(decisions.labels)
        undecidable.append(decisions.undecidable)
        log_scores.append(decisions.log_scores.numpy())
    predicted_labels = np.concatenate(predicted)
    true_labels = dataset.labels.astype(np.int64)

    size = max(dataset.num_classes, max(classifier.class_labels) + 1)
    confusion = np.zeros((size, size), dtype=np.int64)
    np.add.at(confusion, (true_labels, predicted_labels), 1)
    hits = np.diagonal(confusion).copy()
    accuracy = float(np.mean(predicted_labels == true_labels))
    logger.info("evaluated %d samples: accuracy %.4f", len(dataset), accuracy)
    return EvaluationReport(
        accuracy=accuracy,
        confusion=confusion,
        precision=_safe_ratio(hits, confusion.sum(axis=0)),
        recall=_safe_ratio(hits, confusion.sum(axis=1)),
        true_labels=true_labels,
        predicted_labels=predicted_labels,
        undecidable=np.concatenate(undecidable),
        log_scores=np.concatenate(log_scores, axis=0),
        score_labels=list(classifier.class_labels),
    )


def accuracy_of(classifier: Classifier, dataset: Dataset, local_dim: int = 2) -> float:
    return evaluate(classifier, dataset, local_dim).accuracy
