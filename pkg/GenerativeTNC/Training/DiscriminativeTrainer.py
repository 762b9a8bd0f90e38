"""
Discriminative Trainer Module

A single labeled MPS trained on the quadratic cost sum_j |f(v_j) - onehot(c_j)|^2.
Each sweep updates neighbouring pairs: merge the pair around the label index,
take a norm-scaled gradient step on the merged tensor, split it back with a
truncated SVD and hand the label to the site in the sweep direction.
"""

import logging
import math
import time
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import numpy.typing as npt
import torch
from torch import Tensor

from GenerativeTNC.Data.IdxDataset import Dataset
from GenerativeTNC.Errors import ArgumentError, DimensionError, TrainingFailureError
from GenerativeTNC.Models.Environments import (
    absorb_left,
    absorb_right,
    boundary,
    left_environments,
    right_environments,
)
from GenerativeTNC.Models.FeatureMap import (
    FeatureInput,
    ProductState,
    as_feature_batch,
    map_images,
)
from GenerativeTNC.Models.LabeledMps import (
    LabeledMps,
    merge_pair,
    predict_vector,
    random_labeled_mps,
    split_pair,
)
from GenerativeTNC.Tensors.TensorKernel import DTYPE
from GenerativeTNC.Training.GenerativeTrainer import adaptive_step, relative_change
from GenerativeTNC.Training.TrainConfig import SweepRecord, TrainConfig, TrainReport

logger = logging.getLogger(__name__)

LabelInput = Union[Sequence[int], npt.NDArray[np.int64], Tensor]


def one_hot_targets(labels: LabelInput, num_labels: int) -> Tensor:
    """``(J, K)`` one-hot rows; raises ArgumentError for labels outside [0, K)."""
    values = torch.as_tensor(np.asarray(labels, dtype=np.int64)).reshape(-1)
    if values.numel() and (int(values.min()) < 0 or int(values.max()) >= num_labels):
        raise ArgumentError(
            f"Labels must lie in [0, {num_labels}), got "
            f"[{int(values.min())}, {int(values.max())}]"
        )
    return torch.nn.functional.one_hot(values, num_labels).to(dtype=DTYPE)


def quadratic_cost(m: LabeledMps, samples: FeatureInput, labels: LabelInput) -> float:
    batch = as_feature_batch(samples)
    targets = one_hot_targets(labels, m.num_labels)
    if targets.shape[0] != batch.shape[0]:
        raise DimensionError(f"{batch.shape[0]} samples but {targets.shape[0]} labels")
    return float(torch.sum((m.predict(batch) - targets) ** 2))


def pair_predictions(
    merged: Tensor, left: Tensor, v_left: Tensor, v_right: Tensor, right: Tensor
) -> Tensor:
    return torch.einsum("ja,jd,je,adekb,jb->jk", left, v_left, v_right, merged, right)


def pair_cost(
    merged: Tensor,
    left: Tensor,
    v_left: Tensor,
    v_right: Tensor,
    right: Tensor,
    targets: Tensor,
) -> float:
    residual = pair_predictions(merged, left, v_left, v_right, right) - targets
    return float(torch.sum(residual**2))


def pair_gradient(
    merged: Tensor,
    left: Tensor,
    v_left: Tensor,
    v_right: Tensor,
    right: Tensor,
    targets: Tensor,
) -> Tensor:
    """
    Gradient of the quadratic cost with respect to a merged pair tensor
    ``(chi_l, d, d, K, chi_r)``: 2 sum_j (f_j - y_j) x L_j x v_j x v'_j x R_j.
    """
    residual = pair_predictions(merged, left, v_left, v_right, right) - targets
    return 2.0 * torch.einsum(
        "jk,ja,jd,je,jb->adekb", residual, left, v_left, v_right, right
    )


def _sweep(
    model: LabeledMps,
    batch: Tensor,
    targets: Tensor,
    alpha: float,
    max_rank: int,
    to_right: bool,
) -> Tuple[LabeledMps, float]:
    tensors = list(model.tensors)
    num_sites = len(tensors)
    discarded = 0.0
    if to_right:
        right_envs = right_environments(tensors, batch, 2)
        left = boundary(batch.shape[0])
        for site in range(num_sites - 1):
            merged = merge_pair(LabeledMps(tensors, site), site)
            v_left, v_right = batch[:, site], batch[:, site + 1]
            gradient = pair_gradient(
                merged, left, v_left, v_right, right_envs[site + 2], targets
            )
            merged = adaptive_step(merged, gradient, alpha)
            pair = split_pair(merged, max_rank, True)
            tensors[site], tensors[site + 1], weight = pair
            discarded += weight
            left = absorb_left(left, tensors[site], v_left)
        return LabeledMps(tensors, num_sites - 1), discarded
    left_envs = left_environments(tensors, batch, num_sites - 2)
    right = boundary(batch.shape[0])
    for site in range(num_sites - 2, -1, -1):
        merged = merge_pair(LabeledMps(tensors, site + 1), site)
        v_left, v_right = batch[:, site], batch[:, site + 1]
        gradient = pair_gradient(
            merged, left_envs[site], v_left, v_right, right, targets
        )
        merged = adaptive_step(merged, gradient, alpha)
        tensors[site], tensors[site + 1], weight = split_pair(merged, max_rank, False)
        discarded += weight
        right = absorb_right(tensors[site + 1], v_right, right)
    return LabeledMps(tensors, 0), discarded


def fit_labeled_mps(
    samples: FeatureInput,
    labels: LabelInput,
    num_labels: int,
    config: TrainConfig,
    initial: Optional[LabeledMps] = None,
) -> Tuple[LabeledMps, TrainReport]:
    """
    Two-site sweep training of a labeled MPS on a feature batch.

    The label starts on site 0, so the first sweep runs to the right; a
    rolled-back sweep is repeated in the same direction with alpha / beta.
    """
    batch = as_feature_batch(samples)
    num_samples, num_sites, local_dim = batch.shape
    if num_samples == 0:
        raise ArgumentError("fit_labeled_mps needs at least one sample")
    targets = one_hot_targets(labels, num_labels)
    if targets.shape[0] != num_samples:
        raise DimensionError(f"{num_samples} samples but {targets.shape[0]} labels")
    started = time.perf_counter()
    report = TrainReport()
    model = initial if initial is not None else random_labeled_mps(
        num_sites, local_dim, num_labels, config.chi, config.seed
    )
    if model.label_site not in (0, model.num_sites - 1):
        raise ArgumentError(
            "Sweeps start with the label at an end of the chain, "
            f"not site {model.label_site}"
        )
    alpha = config.alpha
    best_cost = quadratic_cost(model, batch, labels)
    report.initial_cost = best_cost

    for sweep in range(1, config.max_sweeps + 1):
        sweep_started = time.perf_counter()
        to_right = model.label_site == 0
        candidate, discarded = _sweep(
            model, batch, targets, alpha, config.chi, to_right
        )
        cost = quadratic_cost(candidate, batch, labels)
        if not math.isfinite(cost):
            report.wall_time = time.perf_counter() - started
            raise TrainingFailureError(
                f"cost diverged to {cost} in sweep {sweep}", report
            )
        accepted = cost <= best_cost
        change = relative_change(best_cost, cost)
        if accepted:
            model = candidate
            best_cost = cost
        report.sweeps.append(
            SweepRecord(
                sweep=sweep,
                direction="right" if to_right else "left",
                cost=cost,
                best_cost=best_cost,
                alpha=alpha,
                accepted=accepted,
                seconds=time.perf_counter() - sweep_started,
                discarded_weight=discarded,
            )
        )
        logger.debug(
            "sweep %d (%s): cost %.10g, best %.10g, alpha %.3g, discarded %.3g",
            sweep,
            "right" if to_right else "left",
            cost,
            best_cost,
            alpha,
            discarded,
        )
        if not accepted:
            alpha /= config.beta
            if alpha < config.min_alpha:
                break
        elif change < config.convergence_tol:
            report.converged = True
            break

    report.wall_time = time.perf_counter() - started
    logger.info(
        "discriminative training finished: %d sweeps, cost %.10g, %.2fs",
        report.sweeps_run,
        report.final_cost,
        report.wall_time,
    )
    return model, report


def train_discriminative(
    dataset: Dataset, config: TrainConfig, local_dim: int = 2
) -> Tuple[LabeledMps, TrainReport]:
    """
    Train the discriminative baseline on a labeled dataset.

    Raises:
        ArgumentError: If fewer than two classes are present.
        TrainingFailureError: If the cost diverges.
    """
    if len(dataset.present_classes()) < 2:
        raise ArgumentError(
            f"Discriminative training needs at least 2 classes, got "
            f"{dataset.present_classes()}"
        )
    samples = map_images(dataset.images, local_dim)
    return fit_labeled_mps(samples, dataset.labels, dataset.num_classes, config)


def classify_discriminative(m: LabeledMps, v: ProductState) -> int:
    """Largest output component; ties go to the lowest class index."""
    return int(torch.argmax(predict_vector(m, v)))
