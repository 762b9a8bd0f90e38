"""
Training configuration and reporting shared by the generative and the
discriminative sweep trainers.
"""

from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List

from GenerativeTNC.Errors import ArgumentError


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of one sweep-training run."""

    # Maximum bond dimension
    chi: int = 16
    # Relative step size: every update moves a tensor by alpha times its norm
    alpha: float = 0.05
    # Step decay rate applied when a sweep increases the cost
    beta: float = 2.0
    max_sweeps: int = 50
    # Relative cost change below which training stops
    convergence_tol: float = 1e-4
    # Samples per sweep; 0 means the full training set
    batch_size: int = 0
    seed: int = 7
    # Training also stops once the step size decays below this
    min_alpha: float = 1e-12

    def __post_init__(self) -> None:
        if self.chi < 1:
            raise ArgumentError(f"chi must be >= 1, got {self.chi}")
        if self.alpha <= 0:
            raise ArgumentError(f"alpha must be > 0, got {self.alpha}")
        if self.beta <= 1:
            raise ArgumentError(f"beta must be > 1, got {self.beta}")
        if self.convergence_tol <= 0:
            raise ArgumentError(
                f"convergence_tol must be > 0, got {self.convergence_tol}"
            )
        if self.max_sweeps < 1:
            raise ArgumentError(f"max_sweeps must be >= 1, got {self.max_sweeps}")
        if self.batch_size < 0:
            raise ArgumentError(f"batch_size must be >= 0, got {self.batch_size}")

    def describe(self) -> Dict[str, str]:
        return {key: str(value) for key, value in asdict(self).items()}


@dataclass
class SweepRecord:
    """What one sweep did."""

    sweep: int
    direction: str  # "right" or "left"
    cost: float  # cost after the sweep, before any roll-back
    best_cost: float  # cost of the retained model
    alpha: float  # step size used during the sweep
    accepted: bool
    seconds: float
    discarded_weight: float = 0.0


@dataclass
class TrainReport:
    initial_cost: float = float("nan")
    sweeps: List[SweepRecord] = field(default_factory=list)
    wall_time: float = 0.0
    converged: bool = False

    @property
    def sweeps_run(self) -> int:
        return len(self.sweeps)

    @property
    def cost_history(self) -> List[float]:
        return [s.cost for s in self.sweeps]

    @property
    def best_cost_history(self) -> List[float]:
        return [s.best_cost for s in self.sweeps]

    @property
    def step_history(self) -> List[float]:
        return [s.alpha for s in self.sweeps]

    @property
    def final_cost(self) -> float:
        return self.sweeps[-1].best_cost if self.sweeps else self.initial_cost


def train_config_small() -> TrainConfig:
    """Tiny chains in unit tests and toy runs."""
    return TrainConfig(
        chi=2, alpha=0.1, beta=2.0, max_sweeps=200, convergence_tol=1e-10, seed=7
    )


def train_config_desk() -> TrainConfig:
    """14x14 MNIST with a few hundred samples per class."""
    return TrainConfig(
        chi=16, alpha=0.05, beta=2.0, max_sweeps=50, convergence_tol=1e-4, seed=7
    )


def train_config_full() -> TrainConfig:
    """Full 28x28 MNIST."""
    return TrainConfig(
        chi=32, alpha=0.05, beta=2.0, max_sweeps=50, convergence_tol=1e-4, seed=7
    )


TRAIN_PRESETS: Dict[str, Callable[[], TrainConfig]] = {
    "small": train_config_small,
    "desk": train_config_desk,
    "full": train_config_full,
}
