"""
Generative Trainer Module

Trains one MPS per class by minimizing the negative log-likelihood of the
class samples under the Born distribution P(v) = (v^T Psi)^2 / Z.

Each sweep visits every site once: a norm-scaled gradient step on the
canonical center, then a QR move of the center towards the sweep direction.
Sweeps alternate direction. A sweep that raises the cost is rolled back and
the step size is divided by beta.
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import TYPE_CHECKING, Dict, Optional, Tuple

import torch
from torch import Tensor

from GenerativeTNC.Data.IdxDataset import Dataset, split_by_class
from GenerativeTNC.Errors import (
    ArgumentError,
    DegenerateStateError,
    GradientSingularityError,
    GtncError,
    TrainingFailureError,
)
from GenerativeTNC.Models.Environments import (
    absorb_left,
    absorb_right,
    boundary,
    left_environments,
    right_environments,
)
from GenerativeTNC.Models.FeatureMap import FeatureInput, as_feature_batch, map_images
from GenerativeTNC.Models.Mps import (
    Mps,
    canonicalize,
    random_mps,
    shift_center_left,
    shift_center_right,
)
from GenerativeTNC.Tensors.TensorKernel import frobenius_norm
from GenerativeTNC.Training.TrainConfig import SweepRecord, TrainConfig, TrainReport

if TYPE_CHECKING:
    from GenerativeTNC.Classifiers.GenerativeClassifier import ClassifierBundle

logger = logging.getLogger(__name__)


def nll_cost(m: Mps, samples: FeatureInput) -> float:
    """
    Negative log-likelihood cost -(1/J) sum_j ln(P_j / Z) - ln J.

    Returns ``inf`` (and logs the offending samples) if any sample has zero
    amplitude.
    """
    batch = as_feature_batch(samples)
    num_samples = batch.shape[0]
    if num_samples == 0:
        raise ArgumentError("nll_cost needs at least one sample")
    z = m.norm_squared()
    if not z > 0.0:
        raise DegenerateStateError(f"MPS norm squared is {z}")
    psi = m.amplitudes(batch)
    zero = torch.nonzero(psi == 0.0).reshape(-1)
    if zero.numel():
        logger.warning("Samples %s have zero amplitude", zero.tolist())
        return math.inf
    log_p = 2.0 * torch.log(torch.abs(psi))
    return float(-torch.mean(log_p) + math.log(z) - math.log(num_samples))


def _site_gradient(
    center: Tensor, left: Tensor, v: Tensor, right: Tensor, site: int
) -> Tensor:
    psi = torch.einsum("ja,jd,adb,jb->j", left, v, center, right)
    zero = torch.nonzero(psi == 0.0).reshape(-1)
    if zero.numel():
        raise GradientSingularityError(int(zero[0]), site)
    z = frobenius_norm(center) ** 2
    if z == 0.0:
        raise DegenerateStateError(f"Center tensor at site {site} is zero")
    environment_term = torch.einsum("ja,jd,jb,j->adb", left, v, right, 1.0 / psi)
    return 2.0 * center / z - (2.0 / psi.shape[0]) * environment_term


def nll_gradient(m: Mps, samples: FeatureInput) -> Tensor:
    """
    Gradient of ``nll_cost`` with respect to the canonical-center tensor.

    Raises:
        ArgumentError: If the MPS has no canonical center.
        GradientSingularityError: If a sample has zero amplitude.
    """
    if m.canonical_center is None:
        raise ArgumentError("nll_gradient needs a canonical MPS")
    batch = as_feature_batch(samples)
    site = m.canonical_center
    left = left_environments(m.tensors, batch, site)[site]
    right = right_environments(m.tensors, batch, site + 1)[site + 1]
    return _site_gradient(m.tensors[site], left, batch[:, site], right, site)


def adaptive_step(tensor: Tensor, gradient: Tensor, alpha: float) -> Tensor:
    """
    T - alpha * g / sqrt(p) with p = |g|^2 / |T|^2: a step of length
    alpha * |T| against the gradient. A zero gradient leaves T unchanged.
    """
    gradient_norm = frobenius_norm(gradient)
    if gradient_norm == 0.0:
        return tensor
    return tensor - (alpha * frobenius_norm(tensor) / gradient_norm) * gradient


def _sweep(model: Mps, batch: Tensor, alpha: float, to_right: bool) -> Mps:
    tensors = list(model.tensors)
    num_sites = len(tensors)
    num_samples = batch.shape[0]
    if to_right:
        right_envs = right_environments(tensors, batch, 1)
        left = boundary(num_samples)
        for site in range(num_sites):
            v = batch[:, site]
            right = right_envs[site + 1]
            gradient = _site_gradient(tensors[site], left, v, right, site)
            tensors[site] = adaptive_step(tensors[site], gradient, alpha)
            if site < num_sites - 1:
                tensors[site], tensors[site + 1] = shift_center_right(
                    tensors[site], tensors[site + 1]
                )
                left = absorb_left(left, tensors[site], v)
        return Mps(tensors, num_sites - 1)
    left_envs = left_environments(tensors, batch, num_sites - 1)
    right = boundary(num_samples)
    for site in range(num_sites - 1, -1, -1):
        v = batch[:, site]
        gradient = _site_gradient(tensors[site], left_envs[site], v, right, site)
        tensors[site] = adaptive_step(tensors[site], gradient, alpha)
        if site > 0:
            tensors[site - 1], tensors[site] = shift_center_left(
                tensors[site - 1], tensors[site]
            )
            right = absorb_right(tensors[site], v, right)
    return Mps(tensors, 0)


def draw_batch(samples: Tensor, batch_size: int, generator: torch.Generator) -> Tensor:
    """
    The full set when ``batch_size`` is 0 or covers it, else a seeded random
    subset.
    """
    if batch_size == 0 or batch_size >= samples.shape[0]:
        return samples
    order = torch.randperm(samples.shape[0], generator=generator)[:batch_size]
    return samples[torch.sort(order).values]


def relative_change(previous: float, current: float) -> float:
    return abs(previous - current) / max(abs(previous), 1.0)


def train_generative(
    samples: FeatureInput,
    config: TrainConfig,
    initial: Optional[Mps] = None,
) -> Tuple[Mps, TrainReport]:
    """
    Fit an MPS to one class of samples.

    Args:
        samples: Product states of one class, as a ``(J, L, d)`` batch or a
            sequence of ProductState.
        config: Sweep hyperparameters.
        initial: Starting model; a seeded random MPS when omitted.

    Returns:
        The lowest-cost model found and the training report.

    Raises:
        TrainingFailureError: If the cost becomes NaN/Inf or a sample hits
            zero amplitude; the partial report is attached.
    """
    batch_all = as_feature_batch(samples)
    num_samples, num_sites, local_dim = batch_all.shape
    if num_samples == 0:
        raise ArgumentError("train_generative needs at least one sample")
    started = time.perf_counter()
    report = TrainReport()
    model = initial if initial is not None else random_mps(
        num_sites, local_dim, config.chi, config.seed
    )
    model = canonicalize(model, 0)
    generator = torch.Generator().manual_seed(config.seed)
    alpha = config.alpha
    batch = draw_batch(batch_all, config.batch_size, generator)
    best_cost = nll_cost(model, batch)
    report.initial_cost = best_cost
    if not math.isfinite(best_cost):
        raise TrainingFailureError(f"initial cost is {best_cost}", report)

    for sweep in range(1, config.max_sweeps + 1):
        sweep_started = time.perf_counter()
        if config.batch_size:
            batch = draw_batch(batch_all, config.batch_size, generator)
            best_cost = nll_cost(model, batch)
        to_right = model.canonical_center == 0
        try:
            candidate = _sweep(model, batch, alpha, to_right)
        except GradientSingularityError as e:
            report.wall_time = time.perf_counter() - started
            raise TrainingFailureError(str(e), report) from e
        cost = nll_cost(candidate, batch)
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
            )
        )
        logger.debug(
            "sweep %d (%s): cost %.10g, best %.10g, alpha %.3g, %s",
            sweep,
            "right" if to_right else "left",
            cost,
            best_cost,
            alpha,
            "accepted" if accepted else "rolled back",
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
        "generative training finished: %d sweeps, cost %.10g, %.2fs",
        report.sweeps_run,
        report.final_cost,
        report.wall_time,
    )
    return model, report


def train_all_classes(
    dataset: Dataset,
    config: TrainConfig,
    max_workers: int = 1,
    local_dim: int = 2,
) -> "ClassifierBundle":
    """
    Train one generative MPS per class present in ``dataset``.

    Classes are independent (class c uses seed ``config.seed + c``), so the
    bundle is identical whether classes train serially or on ``max_workers``
    threads.

    Raises:
        TrainingFailureError: Naming the first class (in label order) that failed.
    """
    from GenerativeTNC.Classifiers.GenerativeClassifier import ClassifierBundle

    parts = split_by_class(dataset)
    labels = [label for label, part in enumerate(parts) if len(part) > 0]
    if not labels:
        raise ArgumentError("Dataset has no samples")

    def train_one(label: int) -> Tuple[Mps, TrainReport]:
        samples = map_images(parts[label].images, local_dim)
        class_config = replace(config, seed=config.seed + label)
        logger.info("training class %d on %d samples", label, samples.shape[0])
        try:
            return train_generative(samples, class_config)
        except TrainingFailureError as e:
            raise TrainingFailureError(str(e), e.report, class_label=label) from e
        except GtncError as e:
            raise TrainingFailureError(str(e), None, class_label=label) from e

    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        futures = {label: pool.submit(train_one, label) for label in labels}
        results: Dict[int, Tuple[Mps, TrainReport]] = {}
        for label in labels:
            results[label] = futures[label].result()

    models: Dict[int, Mps] = {label: results[label][0] for label in labels}
    reports: Dict[int, TrainReport] = {label: results[label][1] for label in labels}
    provenance: Dict[str, str] = dict(config.describe())
    provenance.update(dataset.provenance.describe())
    provenance["trainer"] = "generative"
    return ClassifierBundle(models, provenance=provenance, reports=reports)
