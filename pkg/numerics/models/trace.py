from collections.abc import Callable
from dataclasses import dataclass

import torch

from numerics.models.param_vector import ParamVector


@dataclass(frozen=True)
class TraceStep:
    batch: tuple
    lr: float
    # q entries the step loss was scaled by; None when the step loss ignores q
    weights: tuple | None = None

    @property
    def weighted(self) -> bool:
        return self.weights is not None


StepLoss = Callable[[ParamVector, int, torch.Tensor | None], torch.Tensor]


@dataclass(frozen=True, eq=False)
class UnrolledTrace:
    """
    Record of T plain gradient steps theta <- theta - lr * d(step_loss)/d(theta).

    step_loss(params, step_index, batch_weights) evaluates the loss of one step;
    batch_weights is None for unweighted steps. The trace keeps everything needed
    to replay the steps, with or without a graph back to the weights.
    """
    initial: ParamVector
    steps: tuple
    step_loss: StepLoss
    num_weights: int

    def __len__(self):
        return len(self.steps)

    def replay(self, weights=None) -> ParamVector:
        from numerics.services.autodiff import replay_trace

        return replay_trace(self, weights)
