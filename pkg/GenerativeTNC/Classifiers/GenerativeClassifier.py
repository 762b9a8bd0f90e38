"""
Generative Classifier Module

Classifies a product state by its fidelity f_c = |v^T Psi_c| / |Psi_c| with each
per-class generative MPS and picks the largest.
"""

import glob
import math
import os
import re
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional

import torch
from torch import Tensor

from GenerativeTNC import __version__
from GenerativeTNC.Classifiers.Classifier import LOG_FLOOR, Classifier
from GenerativeTNC.Errors import (
    ArgumentError,
    ConsistencyError,
    DegenerateStateError,
    DimensionError,
    FormatError,
)
from GenerativeTNC.Models.FeatureMap import ProductState
from GenerativeTNC.Models.Mps import Mps
from GenerativeTNC.Models.MpsFile import (
    MPS_FORMAT_VERSION,
    ManifestValue,
    load_mps,
    manifest_path,
    model_path,
    read_manifest,
    save_mps,
    write_manifest,
)
from GenerativeTNC.Tensors.TensorKernel import DTYPE
from GenerativeTNC.Training.TrainConfig import TrainReport

NORM_TOLERANCE = 1e-10
_MODEL_FILE = re.compile(r"model_class(\d+)\.mps$")
_PER_CLASS_ENTRIES = ("class", "norm", "sweeps_run", "final_cost", "converged")


class ClassifierBundle(Classifier):
    """One generative MPS per class with cached norms."""

    def __init__(
        self,
        models: Mapping[int, Mps],
        provenance: Optional[Mapping[str, str]] = None,
        reports: Optional[Mapping[int, TrainReport]] = None,
    ) -> None:
        if not models:
            raise ArgumentError("A classifier bundle needs at least one model")
        self.models: Dict[int, Mps] = {k: models[k] for k in sorted(models)}
        geometries = {(m.num_sites, m.local_dim) for m in self.models.values()}
        if len(geometries) != 1:
            raise DimensionError(f"Models differ in geometry: {sorted(geometries)}")
        self.norms: Dict[int, float] = {}
        for label, m in self.models.items():
            norm = m.norm()
            if not norm > 0.0:
                raise DegenerateStateError(f"Model of class {label} has zero norm")
            self.norms[label] = norm
        self.provenance: Dict[str, str] = dict(provenance or {})
        self.reports: Dict[int, TrainReport] = dict(reports or {})

    @property
    def class_labels(self) -> List[int]:
        return list(self.models)

    @property
    def num_sites(self) -> int:
        return next(iter(self.models.values())).num_sites

    @property
    def local_dim(self) -> int:
        return next(iter(self.models.values())).local_dim

    def raw_overlaps(self, batch: Tensor) -> Tensor:
        """Unnormalized overlaps v^T Psi_c, ``(J, K)``."""
        return torch.stack([m.amplitudes(batch) for m in self.models.values()], dim=1)

    def scores(self, batch: Tensor) -> Tensor:
        norms = torch.tensor(list(self.norms.values()), dtype=DTYPE)
        return torch.abs(self.raw_overlaps(batch)) / norms

    def __len__(self) -> int:
        return len(self.models)


@dataclass(frozen=True, eq=False)
class Classification:
    class_label: int
    log_fidelities: Tensor  # ln(f_c + 1e-300) in class_labels order
    undecidable: bool


def _single(v: ProductState) -> Tensor:
    return v.vectors.unsqueeze(0)


def fidelity(bundle: ClassifierBundle, v: ProductState) -> Tensor:
    return bundle.scores(_single(v))[0]


def raw_overlaps(bundle: ClassifierBundle, v: ProductState) -> Tensor:
    return bundle.raw_overlaps(_single(v))[0]


def classify(bundle: ClassifierBundle, v: ProductState) -> Classification:
    decisions = bundle.decide(_single(v))
    return Classification(
        class_label=int(decisions.labels[0]),
        log_fidelities=torch.log(decisions.scores[0] + LOG_FLOOR),
        undecidable=bool(decisions.undecidable[0]),
    )


def save_bundle(bundle: ClassifierBundle, directory: str) -> List[str]:
    """Write ``model_class<k>.mps`` plus its manifest for every class."""
    written = []
    for label, m in bundle.models.items():
        path = model_path(directory, label)
        save_mps(m, path)
        entries: Dict[str, ManifestValue] = dict(bundle.provenance)
        entries.update(
            {
                "class": label,
                "num_sites": m.num_sites,
                "local_dim": m.local_dim,
                "max_bond": m.max_bond,
                "norm": bundle.norms[label],
                "format_version": MPS_FORMAT_VERSION,
                "library_version": __version__,
            }
        )
        report = bundle.reports.get(label)
        if report is not None:
            entries["sweeps_run"] = report.sweeps_run
            entries["final_cost"] = report.final_cost
            entries["converged"] = str(report.converged).lower()
        write_manifest(manifest_path(directory, label), entries)
        written.append(path)
    return written


def load_bundle(directory: str) -> ClassifierBundle:
    """
    Load every ``model_class<k>.mps`` in ``directory``.

    Raises:
        FormatError: If the directory holds no model files.
        ConsistencyError: If a stored norm disagrees with its tensors.
    """
    models: Dict[int, Mps] = {}
    provenance: Dict[str, str] = {}
    for path in sorted(glob.glob(os.path.join(directory, "model_class*.mps"))):
        match = _MODEL_FILE.search(os.path.basename(path))
        if match is None:
            continue
        label = int(match.group(1))
        m = load_mps(path)
        sidecar = manifest_path(directory, label)
        if os.path.exists(sidecar):
            entries = read_manifest(sidecar)
            stored = float(entries.get("norm", "nan"))
            if not math.isnan(stored) and abs(stored - m.norm()) > NORM_TOLERANCE * max(
                stored, 1.0
            ):
                raise ConsistencyError(
                    f"{path}: stored norm {stored!r} but tensors give {m.norm()!r}"
                )
            if not provenance:
                provenance = {
                    k: v
                    for k, v in entries.items()
                    if k not in _PER_CLASS_ENTRIES
                }
        models[label] = m
    if not models:
        raise FormatError(f"No model_class<k>.mps files in {directory}")
    return ClassifierBundle(models, provenance=provenance)
