"""
Configuration and bookkeeping records for mask optimization.
"""
from dataclasses import dataclass, field, asdict
from typing import Any, Dict, List

import numpy as np
import pandas as pd

from config.config import (
    ADAM_BETA1,
    ADAM_BETA2,
    ADAM_EPS,
    APERTURE_FRACTION,
    EPOCHS,
    EPS_MAG,
    INIT_HIGH,
    INIT_LOW,
    LEARNING_RATE,
    N_SECTIONS,
    OPTIM_SHAPE,
    SEED,
)
from src.errors import InvalidParameterError
from src.masks.radial import RadialMaskParams


@dataclass(frozen=True)
class OptimConfig:
    """Hyperparameters of one radial mask optimization run"""

    learning_rate: float = LEARNING_RATE
    epochs: int = EPOCHS
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps_adam: float = ADAM_EPS
    init_low: float = INIT_LOW
    init_high: float = INIT_HIGH
    seed: int = SEED
    grid_ny: int = OPTIM_SHAPE[0]
    grid_nx: int = OPTIM_SHAPE[1]
    n_sections: int = N_SECTIONS
    aperture_fraction: float = APERTURE_FRACTION
    eps_mag: float = EPS_MAG

    def __post_init__(self):
        # lr = 0 is accepted so a run can be replayed without moving the parameters
        if self.learning_rate < 0:
            raise InvalidParameterError(f"learning_rate must be nonnegative, got {self.learning_rate}")
        if self.epochs < 1:
            raise InvalidParameterError(f"epochs must be at least 1, got {self.epochs}")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise InvalidParameterError("Adam betas must lie in [0, 1)")
        if not self.init_low < self.init_high:
            raise InvalidParameterError("init_low must be below init_high")
        if self.n_sections < 1:
            raise InvalidParameterError(f"n_sections must be positive, got {self.n_sections}")
        if self.grid_ny < 2 or self.grid_nx < 2:
            raise InvalidParameterError("optimization grid must be at least 2x2")
        if not 0 < self.aperture_fraction <= 1:
            raise InvalidParameterError("aperture_fraction must lie in (0, 1]")
        if not self.eps_mag > 0:
            raise InvalidParameterError("eps_mag must be positive")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "OptimConfig":
        known = {name for name in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise InvalidParameterError(f"unknown optimization settings: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class OptimTrace:
    """
    Per-epoch record of an optimization run.

    Attributes:
        losses: Loss evaluated at the start of every epoch
        mean_transmittances: In-aperture mean transmittance at the start of every epoch
        final_params: Parameters after the last update
        final_mean_transmittance: In-aperture mean transmittance of final_params
        binarity_fraction: Fraction of sections with transmittance outside [0.1, 0.9]
    """

    losses: np.ndarray
    mean_transmittances: np.ndarray
    final_params: RadialMaskParams
    final_mean_transmittance: float
    binarity_fraction: float
    final_loss: float = float("nan")
    stalled: List[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.losses)

    @property
    def best_loss_history(self) -> np.ndarray:
        """Running minimum of the loss"""
        return np.minimum.accumulate(self.losses)

    def stalled_windows(self, window: int) -> List[int]:
        """
        Epoch windows in which the best-so-far loss never improved.

        Args:
            window: Window length in epochs

        Returns:
            Start epochs of windows without improvement
        """
        best = self.best_loss_history
        stalled = []
        for start in range(window, len(best), window):
            stop = min(start + window, len(best))
            if not best[stop - 1] < best[start - 1]:
                stalled.append(start)
        return stalled

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "epoch": np.arange(len(self.losses)),
            "loss": self.losses,
            "mean_transmittance": self.mean_transmittances,
        })
