"""
Tabular outputs of the experiment CLI. Every table is a pandas DataFrame
written as tab-separated (or, with --emit-format csv, comma-separated) text
with a header row and a fixed float format, so equal numbers always give equal
bytes.
"""

import os
from dataclasses import asdict
from typing import Dict, List, Sequence, Tuple

import pandas as pd

from GenerativeTNC.Analysis.ClassDistances import ClassPairMatrix, ClusteringReport
from GenerativeTNC.Classifiers.Evaluation import EvaluationReport
from GenerativeTNC.Training.TrainConfig import TrainReport

FLOAT_FORMAT = "%.17g"
SEPARATORS = {"tsv": "\t", "csv": ","}


def table_name(name: str, emit_format: str) -> str:
    """Swap the ``.tsv`` suffix of an output name for the chosen format."""
    stem, _ = os.path.splitext(name)
    return f"{stem}.{emit_format}"


def write_tsv(frame: pd.DataFrame, path: str, emit_format: str = "tsv") -> int:
    """Write ``frame`` to ``path``; returns the number of data rows."""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    frame.to_csv(
        path, sep=SEPARATORS[emit_format], index=False, float_format=FLOAT_FORMAT
    )
    return len(frame)


def read_tsv(path: str, emit_format: str = "tsv") -> pd.DataFrame:
    return pd.read_csv(path, sep=SEPARATORS[emit_format])


def history_table(report: TrainReport) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "sweep": [r.sweep for r in report.sweeps],
            "cost": [r.cost for r in report.sweeps],
            "alpha": [r.alpha for r in report.sweeps],
            "seconds": [r.seconds for r in report.sweeps],
        },
        columns=["sweep", "cost", "alpha", "seconds"],
    )


def metrics_table(report: EvaluationReport) -> pd.DataFrame:
    rows: List[Tuple[str, str, float]] = [("accuracy", "all", report.accuracy)]
    for label in range(report.num_classes):
        rows.append(("precision", str(label), float(report.precision[label])))
        rows.append(("recall", str(label), float(report.recall[label])))
    return pd.DataFrame(rows, columns=["metric", "class", "value"])


def confusion_table(report: EvaluationReport) -> pd.DataFrame:
    """Rows are true classes, ``pred_<k>`` columns predicted classes."""
    frame = pd.DataFrame(
        report.confusion,
        columns=[f"pred_{k}" for k in range(report.num_classes)],
    )
    frame.insert(0, "true", list(range(report.num_classes)))
    return frame


def log_score_table(report: EvaluationReport) -> pd.DataFrame:
    """One row per test sample with ``ln_f_<k>`` for every scored class."""
    frame = pd.DataFrame(
        report.log_scores, columns=[f"ln_f_{k}" for k in report.score_labels]
    )
    frame.insert(0, "undecidable", report.undecidable.astype(int))
    frame.insert(0, "predicted", report.predicted_labels)
    frame.insert(0, "true", report.true_labels)
    frame.insert(0, "sample", list(range(report.num_samples)))
    return frame


def prediction_table(report: EvaluationReport) -> pd.DataFrame:
    return log_score_table(report).drop(columns=["true"])


def matrix_table(
    matrices: Sequence[ClassPairMatrix], names: Sequence[str]
) -> pd.DataFrame:
    """Stack square class-pair matrices, tagging each block with its name."""
    frames = []
    for matrix, name in zip(matrices, names):
        frame = pd.DataFrame(
            matrix.values.numpy(), columns=[f"c{k}" for k in matrix.class_labels]
        )
        frame.insert(0, "count", matrix.class_counts)
        frame.insert(0, "class", matrix.class_labels)
        frame.insert(0, "matrix", name)
        frames.append(frame)
    return pd.concat(frames, ignore_index=True)


def summary_table(report: ClusteringReport) -> pd.DataFrame:
    values = {
        key: float(value) if not isinstance(value, bool) else int(value)
        for key, value in asdict(report).items()
    }
    return pd.DataFrame(list(values.items()), columns=["statistic", "value"])


def dataset_table(counts: Sequence[int]) -> pd.DataFrame:
    return pd.DataFrame(
        {"class": list(range(len(counts))), "count": list(counts)},
        columns=["class", "count"],
    )


def entropy_table(rows: Sequence[Dict[str, float]]) -> pd.DataFrame:
    return pd.DataFrame(
        list(rows), columns=["class", "bond", "chi", "H2", "ln_chi", "slack", "S_vn"]
    )


def compare_table(rows: Sequence[Dict[str, object]]) -> pd.DataFrame:
    return pd.DataFrame(list(rows), columns=["model", "accuracy", "seconds", "sweeps"])


def chi_scan_table(rows: Sequence[Dict[str, float]]) -> pd.DataFrame:
    return pd.DataFrame(
        list(rows), columns=["chi", "gtnc_accuracy", "lazy_accuracy", "seconds"]
    )
