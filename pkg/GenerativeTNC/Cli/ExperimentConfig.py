"""
Experiment configuration: defaults, then an optional ``--config`` key=value
file, then command-line flags.
"""

import argparse
import os
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Sequence, Union

from GenerativeTNC import __version__
from GenerativeTNC.Cli.TsvTables import SEPARATORS
from GenerativeTNC.Errors import ArgumentError, FormatError
from GenerativeTNC.Models.MpsFile import read_manifest
from GenerativeTNC.Training.TrainConfig import TRAIN_PRESETS, TrainConfig

COMMANDS = (
    "ingest",
    "train",
    "train-disc",
    "classify",
    "eval",
    "distances",
    "entropy",
    "compare",
    "scan-chi",
)
SPACES = ("raw", "hilbert", "both")
THREADS_ENV = "TN_THREADS"
# Flags that take no value; a config file sets them with key=true
_SWITCHES = ("force", "verbose", "quiet")


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    out: str = "run"
    images: Optional[str] = None
    labels: Optional[str] = None
    test_images: Optional[str] = None
    test_labels: Optional[str] = None
    downsample: int = 1
    per_class: Optional[int] = None
    test_per_class: Optional[int] = None
    seed: int = 7
    chi: int = 16
    alpha: float = 0.05
    beta: float = 2.0
    max_sweeps: int = 50
    tol: float = 1e-4
    batch_size: int = 0
    class_label: Optional[int] = None
    models: Optional[str] = None
    space: str = "hilbert"
    chis: str = "2,4,8,16"
    local_dim: int = 2
    force: bool = False
    verbose: bool = False
    quiet: bool = False
    config: Optional[str] = None
    log_file: Optional[str] = None
    emit_format: str = "tsv"
    preset: Optional[str] = None

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            chi=self.chi,
            alpha=self.alpha,
            beta=self.beta,
            max_sweeps=self.max_sweeps,
            convergence_tol=self.tol,
            batch_size=self.batch_size,
            seed=self.seed,
        )

    def chi_values(self) -> List[int]:
        try:
            values = [int(part) for part in self.chis.split(",") if part.strip()]
        except ValueError as e:
            raise ArgumentError(
                f"--chis must be comma-separated integers: {self.chis!r}"
            ) from e
        if not values or min(values) < 1:
            raise ArgumentError(
                f"--chis needs positive bond dimensions, got {self.chis!r}"
            )
        return values

    def describe(self) -> Dict[str, str]:
        """Every resolved setting plus the library version, for run.manifest."""
        entries = {
            key: "none" if value is None else str(value)
            for key, value in asdict(self).items()
        }
        entries["library_version"] = __version__
        return entries


def preset_defaults(name: str) -> Dict[str, Union[int, float]]:
    """Parser defaults of the training flags a named preset sets."""
    preset = TRAIN_PRESETS[name]()
    return {
        "chi": preset.chi,
        "alpha": preset.alpha,
        "beta": preset.beta,
        "max_sweeps": preset.max_sweeps,
        "tol": preset.convergence_tol,
        "batch_size": preset.batch_size,
        "seed": preset.seed,
    }


def worker_count() -> int:
    """Worker cap from TN_THREADS; 1 when unset."""
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return 1
    try:
        count = int(raw)
    except ValueError as e:
        raise ArgumentError(f"{THREADS_ENV} must be an integer, got {raw!r}") from e
    if count < 1:
        raise ArgumentError(f"{THREADS_ENV} must be >= 1, got {count}")
    return count


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gtnc",
        description="Generative tensor network classification experiments.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--out", default="run", help="Run directory")
    parser.add_argument("--images", help="Training IDX image file")
    parser.add_argument("--labels", help="Training IDX label file")
    parser.add_argument("--test-images", dest="test_images")
    parser.add_argument("--test-labels", dest="test_labels")
    parser.add_argument("--downsample", type=int, default=1)
    parser.add_argument("--per-class", dest="per_class", type=int)
    parser.add_argument("--test-per-class", dest="test_per_class", type=int)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--chi", type=int, default=16)
    parser.add_argument("--alpha", type=float, default=0.05)
    parser.add_argument("--beta", type=float, default=2.0)
    parser.add_argument("--max-sweeps", dest="max_sweeps", type=int, default=50)
    parser.add_argument("--tol", type=float, default=1e-4)
    parser.add_argument("--batch-size", dest="batch_size", type=int, default=0)
    parser.add_argument("--class", dest="class_label", type=int)
    parser.add_argument("--models", help="Directory holding trained model files")
    parser.add_argument("--space", choices=SPACES, default="hilbert")
    parser.add_argument(
        "--chis", default="2,4,8,16", help="Bond dimensions for scan-chi"
    )
    parser.add_argument("--local-dim", dest="local_dim", type=int, default=2)
    parser.add_argument("--force", action="store_true")
    parser.add_argument("--verbose", action="store_true", help="Log every sweep")
    parser.add_argument("--quiet", action="store_true")
    parser.add_argument("--config", help="key=value file of flag defaults")
    parser.add_argument("--log-file", dest="log_file")
    parser.add_argument(
        "--emit-format", dest="emit_format", choices=sorted(SEPARATORS), default="tsv"
    )
    parser.add_argument(
        "--preset",
        choices=sorted(TRAIN_PRESETS),
        help="Training defaults for a problem size; explicit flags still win",
    )
    return parser


def config_file_tokens(path: str) -> List[str]:
    """
    Turn a key=value file into argv tokens. Keys are flag names without the
    leading dashes; switches take ``true`` or ``false``.
    """
    tokens: List[str] = []
    for key, value in read_manifest(path).items():
        flag = "--" + key.replace("_", "-")
        if key.replace("-", "_") in _SWITCHES:
            if value.lower() not in ("true", "false"):
                raise FormatError(f"{path}: {key} must be true or false, got {value!r}")
            if value.lower() == "true":
                tokens.append(flag)
            continue
        if key == "config":
            raise FormatError(f"{path}: config files cannot include other config files")
        tokens.extend([flag, value])
    return tokens


def resolve(argv: Sequence[str]) -> ExperimentConfig:
    """
    Parse ``argv`` into an ExperimentConfig. Flags given on the command line
    override entries of the ``--config`` file.
    A ``--preset`` only replaces the defaults of the training flags.

    Raises:
        SystemExit: From argparse on a usage error (code 2) or ``--help`` (0).
    """
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(list(argv))
    tokens = list(argv)
    if known.config:
        tokens = config_file_tokens(known.config) + tokens
    parser = build_parser()
    pre.add_argument("--preset", choices=sorted(TRAIN_PRESETS))
    known, _ = pre.parse_known_args(tokens)
    if known.preset:
        parser.set_defaults(**preset_defaults(known.preset))
    namespace = parser.parse_args(tokens)
    return ExperimentConfig(**vars(namespace))
