"""
Experiment CLI

    gtnc <command> [flags]

Commands:
    ingest      load, downsample and subsample an IDX pair; export it
    train       one generative MPS per class -> model_class<k>.mps
    train-disc  the discriminative labeled MPS -> model_disc.mps
    classify    predictions of a trained model directory
    eval        accuracy, confusion matrix and log-fidelities
    distances   class distance matrices and the clustering summary
    entropy     per-bond Renyi-2 and von Neumann entropies of trained models
    compare     generative vs lazy vs discriminative on one split
    scan-chi    generative and lazy accuracy over several bond dimensions

Every run writes its outputs and a run.manifest into ``--out``.
"""

import logging
import math
import os
import sys
import time
from dataclasses import replace
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
import torch

from GenerativeTNC.Analysis.ClassDistances import (
    ClassPairMatrix,
    approximate_distance_matrix,
    clustering_report,
    fidelity_matrix,
    hilbert_distance_matrix,
    raw_distance_matrix,
    squared_diagonal_distance_matrix,
)
from GenerativeTNC.Classifiers.Classifier import Classifier
from GenerativeTNC.Classifiers.DiscriminativeClassifier import DiscriminativeClassifier
from GenerativeTNC.Classifiers.Evaluation import evaluate
from GenerativeTNC.Classifiers.GenerativeClassifier import (
    ClassifierBundle,
    load_bundle,
    save_bundle,
)
from GenerativeTNC.Classifiers.LazyClassifier import LazyBundle
from GenerativeTNC.Cli.ExperimentConfig import (
    THREADS_ENV,
    ExperimentConfig,
    resolve,
    worker_count,
)
from GenerativeTNC.Cli.RunOutputManager import RunOutputManager
from GenerativeTNC.Cli.TsvTables import (
    chi_scan_table,
    compare_table,
    confusion_table,
    dataset_table,
    entropy_table,
    history_table,
    log_score_table,
    matrix_table,
    metrics_table,
    prediction_table,
    summary_table,
    table_name,
    write_tsv,
)
from GenerativeTNC.Data.IdxDataset import (
    Dataset,
    downsample,
    load_idx,
    save_idx,
    split_by_class,
    subsample,
)
from GenerativeTNC.Errors import ArgumentError, GtncError
from GenerativeTNC.Models.Mps import all_entanglement_spectra, spectrum_entropy
from GenerativeTNC.Models.MpsFile import (
    MPS_FORMAT_VERSION,
    ManifestValue,
    load_labeled_mps,
    save_labeled_mps,
    write_manifest,
)
from GenerativeTNC.Training.DiscriminativeTrainer import train_discriminative
from GenerativeTNC.Training.GenerativeTrainer import train_all_classes
from GenerativeTNC.Training.TrainConfig import TrainReport

RUN_MANIFEST = "run.manifest"
TRAIN_IMAGES_FILE = "train-images.idx"
TRAIN_LABELS_FILE = "train-labels.idx"
DISC_MODEL_FILE = "model_disc.mps"
DISC_MANIFEST_FILE = "model_disc.manifest"


class ExperimentRunner:
    """Runs one CLI command against one run directory."""

    def __init__(self, config: ExperimentConfig, output: RunOutputManager) -> None:
        self.config = config
        self.output = output
        self.workers = worker_count()
        self.outputs: List[str] = []

    def run(self) -> None:
        self._guard_run_dir()
        os.makedirs(self.config.out, exist_ok=True)
        self.output.print_header(f"gtnc {self.config.command} -> {self.config.out}")
        commands = {
            "ingest": self._ingest,
            "train": self._train,
            "train-disc": self._train_disc,
            "classify": self._classify,
            "eval": self._eval,
            "distances": self._distances,
            "entropy": self._entropy,
            "compare": self._compare,
            "scan-chi": self._scan_chi,
        }
        commands[self.config.command]()
        self._write_run_manifest()

    def _path(self, name: str) -> str:
        return os.path.join(self.config.out, name)

    def _guard_run_dir(self) -> None:
        if os.path.exists(self._path(RUN_MANIFEST)) and not self.config.force:
            raise ArgumentError(
                f"{self.config.out} already holds a run; pass --force to overwrite it"
            )

    def _write_table(self, frame: pd.DataFrame, name: str) -> None:
        name = table_name(name, self.config.emit_format)
        path = self._path(name)
        rows = write_tsv(frame, path, self.config.emit_format)
        self.outputs.append(name)
        self.output.print_table_written(path, rows)

    def _write_run_manifest(self) -> None:
        entries: Dict[str, ManifestValue] = dict(self.config.describe())
        entries["outputs"] = ",".join(sorted(self.outputs))
        entries["model_format_version"] = MPS_FORMAT_VERSION
        entries["torch_version"] = torch.__version__
        entries["numpy_version"] = np.__version__
        entries["pandas_version"] = pd.__version__
        write_manifest(self._path(RUN_MANIFEST), entries)

    # Data

    def _load(
        self,
        images: Optional[str],
        labels: Optional[str],
        per_class: Optional[int],
        role: str,
    ) -> Dataset:
        if not images or not labels:
            raise ArgumentError(f"The {role} set needs both an image and a label file")
        dataset = load_idx(images, labels)
        if self.config.downsample > 1:
            dataset = downsample(dataset, self.config.downsample)
        if per_class is not None:
            dataset = subsample(dataset, per_class, self.config.seed)
        self.output.print_dataset(
            role,
            len(dataset),
            dataset.num_pixels,
            ",".join(str(c) for c in dataset.class_counts()),
        )
        return dataset

    def _train_set(self) -> Dataset:
        c = self.config
        return self._load(c.images, c.labels, c.per_class, "train")

    def _test_set(self) -> Dataset:
        """The --test-* pair, or the --images/--labels pair when none is given."""
        c = self.config
        if c.test_images or c.test_labels:
            return self._load(c.test_images, c.test_labels, c.test_per_class, "test")
        return self._load(c.images, c.labels, c.test_per_class or c.per_class, "test")

    # Models

    def _train_bundle(
        self, dataset: Dataset, chi: Optional[int] = None
    ) -> ClassifierBundle:
        train_config = self.config.train_config()
        if chi is not None:
            train_config = replace(train_config, chi=chi)
        self.output.print_subheader(
            f"Training {len(dataset.present_classes())} class models, "
            f"chi={train_config.chi}"
        )
        return train_all_classes(
            dataset,
            train_config,
            max_workers=self.workers,
            local_dim=self.config.local_dim,
        )

    def _report_training(
        self, owner: str, report: TrainReport, history_name: str
    ) -> None:
        if report.sweeps:
            self.output.print_sweep(owner, report.sweeps[-1])
        self._write_table(history_table(report), history_name)

    def _load_classifier(self) -> Classifier:
        if not self.config.models:
            raise ArgumentError("--models is required")
        disc_path = os.path.join(self.config.models, DISC_MODEL_FILE)
        generative = [
            name
            for name in os.listdir(self.config.models)
            if name.startswith("model_class")
        ]
        if not generative and os.path.exists(disc_path):
            return DiscriminativeClassifier(load_labeled_mps(disc_path))
        return load_bundle(self.config.models)

    # Commands

    def _ingest(self) -> None:
        dataset = self._train_set()
        save_idx(dataset, self._path(TRAIN_IMAGES_FILE), self._path(TRAIN_LABELS_FILE))
        self.outputs.extend([TRAIN_IMAGES_FILE, TRAIN_LABELS_FILE])
        self._write_table(dataset_table(dataset.class_counts()), "dataset.tsv")

    def _train(self) -> None:
        dataset = self._train_set()
        label = self.config.class_label
        if label is not None:
            if label not in dataset.present_classes():
                raise ArgumentError(f"Class {label} has no training samples")
            dataset = split_by_class(dataset)[label]
        bundle = self._train_bundle(dataset)
        for path in save_bundle(bundle, self.config.out):
            self.outputs.append(os.path.basename(path))
            self.outputs.append(os.path.basename(path)[: -len(".mps")] + ".manifest")
        for k, report in bundle.reports.items():
            self._report_training(f"class {k}", report, f"class{k}.history.tsv")

    def _train_disc(self) -> None:
        dataset = self._train_set()
        self.output.print_subheader(
            f"Training the discriminative model, chi={self.config.chi}"
        )
        model, report = train_discriminative(
            dataset, self.config.train_config(), local_dim=self.config.local_dim
        )
        save_labeled_mps(model, self._path(DISC_MODEL_FILE))
        entries: Dict[str, ManifestValue] = dict(dataset.provenance.describe())
        entries.update(
            {
                "num_sites": model.num_sites,
                "num_labels": model.num_labels,
                "label_site": model.label_site,
                "sweeps_run": report.sweeps_run,
                "final_cost": report.final_cost,
            }
        )
        write_manifest(self._path(DISC_MANIFEST_FILE), entries)
        self.outputs.extend([DISC_MODEL_FILE, DISC_MANIFEST_FILE])
        self._report_training("discriminative", report, "disc.history.tsv")

    def _classify(self) -> None:
        classifier = self._load_classifier()
        c = self.config
        dataset = self._load(c.images, c.labels, c.per_class, "input")
        report = evaluate(classifier, dataset, local_dim=c.local_dim)
        self.output.print_accuracy("model", report.accuracy, report.num_samples)
        self._write_table(prediction_table(report), "predictions.tsv")

    def _eval(self) -> None:
        classifier = self._load_classifier()
        report = evaluate(classifier, self._test_set(), local_dim=self.config.local_dim)
        self.output.print_accuracy("model", report.accuracy, report.num_samples)
        self._write_table(metrics_table(report), "metrics.tsv")
        self._write_table(confusion_table(report), "confusion.tsv")
        self._write_table(log_score_table(report), "logfid.tsv")

    def _distances(self) -> None:
        dataset = self._train_set()
        if self.config.per_class is not None:
            self.output.print(
                f"  note: computed on at most {self.config.per_class} samples "
                f"per class (seed {self.config.seed}), not the full set"
            )
        raw = raw_distance_matrix(dataset)
        fidelity = fidelity_matrix(dataset, self.config.local_dim)
        matrices: List[ClassPairMatrix] = []
        names: List[str] = []
        if self.config.space in ("raw", "both"):
            matrices.append(raw)
            names.append("euclidean_raw")
        if self.config.space in ("hilbert", "both"):
            matrices.extend(
                [
                    fidelity,
                    hilbert_distance_matrix(fidelity),
                    squared_diagonal_distance_matrix(fidelity),
                    approximate_distance_matrix(fidelity),
                ]
            )
            names.extend(
                [
                    "fidelity_hilbert",
                    "distance_hilbert",
                    "distance_hilbert_squared_diagonal",
                    "distance_hilbert_approx",
                ]
            )
        self._write_table(matrix_table(matrices, names), "matrix.tsv")
        report = clustering_report(raw, fidelity)
        self.output.print(
            f"  fidelity clustering ratio {report.fidelity_ratio:.6g}, "
            f"clustered: {report.clustered}"
        )
        self._write_table(summary_table(report), "summary.tsv")

    def _entropy(self) -> None:
        if not self.config.models:
            raise ArgumentError("--models is required")
        self._write_table(entropy_report(self.config.models), "entropy.tsv")

    def _compare(self) -> None:
        train = self._train_set()
        test = self._test_set()
        local_dim = self.config.local_dim
        rows: List[Dict[str, object]] = []

        started = time.perf_counter()
        bundle = self._train_bundle(train)
        seconds = time.perf_counter() - started
        accuracy = evaluate(bundle, test, local_dim).accuracy
        self.output.print_accuracy("gtnc", accuracy, len(test))
        sweeps = max(r.sweeps_run for r in bundle.reports.values())
        rows.append(
            {
                "model": "gtnc",
                "accuracy": accuracy,
                "seconds": seconds,
                "sweeps": sweeps,
            }
        )

        started = time.perf_counter()
        lazy = LazyBundle.from_dataset(train, local_dim)
        seconds = time.perf_counter() - started
        accuracy = evaluate(lazy, test, local_dim).accuracy
        self.output.print_accuracy("lazy", accuracy, len(test))
        rows.append(
            {"model": "lazy", "accuracy": accuracy, "seconds": seconds, "sweeps": 0}
        )

        self.output.print_subheader(
            f"Training the discriminative model, chi={self.config.chi}"
        )
        started = time.perf_counter()
        train_config = self.config.train_config()
        model, report = train_discriminative(train, train_config, local_dim)
        seconds = time.perf_counter() - started
        accuracy = evaluate(DiscriminativeClassifier(model), test, local_dim).accuracy
        self.output.print_accuracy("discriminative", accuracy, len(test))
        rows.append(
            {
                "model": "discriminative",
                "accuracy": accuracy,
                "seconds": seconds,
                "sweeps": report.sweeps_run,
            }
        )
        self._write_table(compare_table(rows), "compare.tsv")

    def _scan_chi(self) -> None:
        chis = self.config.chi_values()
        train = self._train_set()
        test = self._test_set()
        local_dim = self.config.local_dim
        lazy = LazyBundle.from_dataset(train, local_dim)
        lazy_accuracy = evaluate(lazy, test, local_dim).accuracy
        self.output.print_accuracy("lazy", lazy_accuracy, len(test))
        rows: List[Dict[str, float]] = []
        for chi in chis:
            started = time.perf_counter()
            bundle = self._train_bundle(train, chi)
            seconds = time.perf_counter() - started
            accuracy = evaluate(bundle, test, local_dim).accuracy
            self.output.print_accuracy(f"gtnc chi={chi}", accuracy, len(test))
            rows.append(
                {
                    "chi": chi,
                    "gtnc_accuracy": accuracy,
                    "lazy_accuracy": lazy_accuracy,
                    "seconds": seconds,
                }
            )
        self._write_table(chi_scan_table(rows), "chi_scan.tsv")


def entropy_report(models_dir: str) -> pd.DataFrame:
    """
    Per-bond entanglement of every generative model in ``models_dir``: Renyi-2
    entropy, its ln(chi) bound and the von Neumann entropy.
    """
    bundle = load_bundle(models_dir)
    rows: List[Dict[str, float]] = []
    for label, m in bundle.models.items():
        spectra = all_entanglement_spectra(m)
        for bond in range(1, m.num_sites):
            chi = m.bond_dims[bond]
            h2 = spectrum_entropy(spectra[bond - 1], 2.0)
            rows.append(
                {
                    "class": label,
                    "bond": bond,
                    "chi": chi,
                    "H2": h2,
                    "ln_chi": math.log(chi),
                    "slack": math.log(chi) - h2,
                    "S_vn": spectrum_entropy(spectra[bond - 1], 1.0),
                }
            )
    return entropy_table(rows)


def _origin_module(error: BaseException, fallback: str) -> str:
    """Last GenerativeTNC module (outside the CLI) the error passed through."""
    module = fallback
    tb = error.__traceback__
    while tb is not None:
        name = str(tb.tb_frame.f_globals.get("__name__", ""))
        if name.startswith("GenerativeTNC.") and ".Cli." not in name:
            module = name.rsplit(".", 1)[-1]
        tb = tb.tb_next
    return module


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one command.

    Returns:
        0 on success, 2 on a usage error, 1 when the pipeline fails.
    """
    args: List[str] = list(sys.argv[1:] if argv is None else argv)
    try:
        config = resolve(args)
    except SystemExit as e:
        code: Union[int, str, None] = e.code
        return code if isinstance(code, int) else 0
    except (GtncError, OSError) as e:
        print(f"error [config]: {e}", file=sys.stderr)
        return 1

    output: Optional[RunOutputManager] = None
    try:
        output = RunOutputManager(config.log_file, quiet=config.quiet)
        output.install_logging(logging.DEBUG if config.verbose else logging.INFO)
        if os.environ.get(THREADS_ENV):
            torch.set_num_threads(worker_count())
        ExperimentRunner(config, output).run()
    except (GtncError, OSError) as e:
        module = _origin_module(e, config.command)
        if output is not None:
            output.print_error(module, str(e))
        else:
            print(f"error [{module}]: {e}", file=sys.stderr)
        return 1
    finally:
        if output is not None:
            output.close()
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
