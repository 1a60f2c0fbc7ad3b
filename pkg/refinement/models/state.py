import logging
from dataclasses import dataclass, field

import numpy as np

from adaptation.models import PseudoLabeledSet
from learners.models import ClassifierParams, OptimizerConfig
from utils.exceptions import ContractException

logger = logging.getLogger(__name__)

INIT_MODES = ("ramp", "scores")
Q_OPTIMIZERS = ("adam", "sgd")


@dataclass(frozen=True)
class RefinementConfig:
    """
    t_steps forward and t_steps backward steps per cycle, `epochs` weight
    updates per domain. self_train_opt and keep_frac drive the step from
    theta_m to theta_{m+1} on each selected chunk.

    lr_theta applies to the batch-mean loss, so 0.1 is a step of about 0.001
    on a sum over a batch of 128. q_optimizer "adam" moves every weight by
    about lr_q per epoch whatever the hypergradient scale; "sgd" takes the
    plain step q - lr_q * hypergradient.
    """
    t_steps: int = 10
    epochs: int = 30
    lr_theta: float = 0.1
    lr_q: float = 0.01
    q_optimizer: str = "adam"
    batch_size: int = 128
    init: str = "ramp"
    keep_frac: float = 1.0
    self_train_opt: OptimizerConfig = field(default_factory=OptimizerConfig)

    def __post_init__(self):
        if self.t_steps < 1:
            raise ContractException(f"t_steps must be >= 1, got {self.t_steps}")
        if self.epochs < 0:
            raise ContractException(f"epochs must be >= 0, got {self.epochs}")
        if self.lr_theta < 0 or self.lr_q < 0:
            raise ContractException("learning rates must be non-negative")
        if self.batch_size < 1:
            raise ContractException(f"batch_size must be >= 1, got {self.batch_size}")
        if self.init not in INIT_MODES:
            raise ContractException(f"init must be one of {INIT_MODES}, got {self.init!r}")
        if self.q_optimizer not in Q_OPTIMIZERS:
            raise ContractException(f"q_optimizer must be one of {Q_OPTIMIZERS}, got {self.q_optimizer!r}")


@dataclass(frozen=True, eq=False)
class RefinementState:
    """
    theta_m with the remaining pool positions I (in coarse order), their
    weights q, the anchor set S_m and the chunk size C.
    """
    params: ClassifierParams
    remaining: np.ndarray
    weights: np.ndarray
    anchor: PseudoLabeledSet
    chunk_size: int

    def __post_init__(self):
        remaining = np.asarray(self.remaining, dtype=np.int64)
        weights = np.asarray(self.weights, dtype=np.float64)
        if weights.shape != remaining.shape:
            raise ContractException(f"{weights.size} weights for {remaining.size} remaining examples")
        if np.any(weights < 0):
            logger.warning(f"Clamping {int(np.sum(weights < 0))} negative initial weights to 0")
            weights = np.maximum(weights, 0.0)
        if self.anchor.num_kept == 0:
            raise ContractException("anchor set has no kept examples")
        object.__setattr__(self, "remaining", remaining)
        object.__setattr__(self, "weights", weights)


@dataclass(frozen=True, eq=False)
class NextDomain:
    selected: np.ndarray        # pool positions, highest final weight first
    weights: np.ndarray         # final q aligned with the state's remaining positions
    cycle_losses: list          # objective value before each weight update


@dataclass(frozen=True, eq=False)
class FineSequence:
    chunks: list
    cycle_losses: list          # one list per discovered domain

    @property
    def order(self) -> np.ndarray:
        return np.concatenate(self.chunks) if self.chunks else np.zeros(0, dtype=np.int64)
