import logging
from collections.abc import Callable, Sequence

import numpy as np
import torch

from Idol.settings import TORCH_DTYPE
from numerics.models import ParamVector, StepLoss, TraceStep, UnrolledTrace
from utils.exceptions import ContractException, NumericalFailureException

logger = logging.getLogger(__name__)


# =========================================================
# FIRST-ORDER GRADIENTS
# =========================================================

def gradient(loss_fn: Callable[[ParamVector], torch.Tensor], params: ParamVector) -> ParamVector:
    """
    d loss_fn / d params at `params`.
    A loss that does not depend on the parameters has an all-zero gradient.
    """
    flat = params.values.detach().clone().requires_grad_(True)
    loss = loss_fn(params.with_values(flat))
    _check_scalar(loss, params, "loss")

    grad = _grad_or_zeros(loss, flat, create_graph=False)
    result = params.with_values(grad.detach())
    _check_vector(result, "gradient")
    return result


def sgd_step(params: ParamVector, loss_fn, lr: float) -> ParamVector:
    grad = gradient(loss_fn, params)
    return params.with_values(params.values.detach() - lr * grad.values)


# =========================================================
# UNROLLED STEPS
# =========================================================

def unroll(
    initial: ParamVector,
    step_loss: StepLoss,
    schedule: Sequence,
    weights=None,
) -> tuple[ParamVector, UnrolledTrace]:
    """
    Run plain gradient steps and record them.

    schedule: sequence of (batch_indices, lr, weighted) triples. For weighted steps
    the step loss receives weights[batch_indices]; unweighted steps receive None.
    """
    q = _as_weights(weights)
    theta = initial.detached()
    steps = []

    for t, (batch, lr, weighted) in enumerate(schedule):
        batch_index = torch.as_tensor(np.asarray(batch, dtype=np.int64))
        if weighted and q is None:
            raise ContractException("weighted step scheduled without weights")
        batch_weights = q[batch_index] if weighted else None

        theta = sgd_step(theta, lambda p, t=t, w=batch_weights: step_loss(p, t, w), float(lr))
        steps.append(TraceStep(
            batch=tuple(int(i) for i in batch_index.tolist()),
            lr=float(lr),
            weights=tuple(batch_weights.tolist()) if batch_weights is not None else None,
        ))

    trace = UnrolledTrace(
        initial=initial.detached(),
        steps=tuple(steps),
        step_loss=step_loss,
        num_weights=0 if q is None else q.numel(),
    )
    return theta, trace


def replay_trace(trace: UnrolledTrace, weights=None) -> ParamVector:
    """Recompute the trace's final params; identical inputs give bit-identical output."""
    q = _as_weights(weights)
    theta = trace.initial.detached()
    for t, step in enumerate(trace.steps):
        batch_weights = q[torch.as_tensor(step.batch, dtype=torch.long)] if step.weighted else None
        theta = sgd_step(theta, lambda p, t=t, w=batch_weights: trace.step_loss(p, t, w), step.lr)
    return theta


# =========================================================
# HYPERGRADIENT
# =========================================================

def hypergradient(
    outer_loss: Callable[[ParamVector], torch.Tensor],
    trace: UnrolledTrace,
    weights,
) -> np.ndarray:
    """
    d outer_loss(theta_T(q)) / d q, differentiating through every step of the trace.

    Examples that never appear in a weighted batch get exactly 0.
    """
    q = _as_weights(weights)
    if q is None or q.numel() != trace.num_weights:
        got = 0 if q is None else q.numel()
        raise ContractException(f"trace expects {trace.num_weights} weights, got {got}")

    for t, step in enumerate(trace.steps):
        if step.weighted:
            used = q[torch.as_tensor(step.batch, dtype=torch.long)]
            if not torch.equal(used, torch.as_tensor(step.weights, dtype=TORCH_DTYPE)):
                raise ContractException(f"trace step {t} was recorded with different weights")

    q = q.clone().requires_grad_(True)
    theta = trace.initial.values.detach().clone().requires_grad_(True)

    for t, step in enumerate(trace.steps):
        point = trace.initial.with_values(theta)
        batch_weights = q[torch.as_tensor(step.batch, dtype=torch.long)] if step.weighted else None
        loss = trace.step_loss(point, t, batch_weights)
        _check_scalar(loss, point, f"step {t} loss")

        grad = _grad_or_zeros(loss, theta, create_graph=True)
        theta = theta - step.lr * grad
        if not torch.isfinite(theta).all():
            _raise_nonfinite(trace.initial.with_values(theta.detach()), f"step {t} params")

    final = trace.initial.with_values(theta)
    outer = outer_loss(final)
    _check_scalar(outer, final, "outer loss")

    hyper = _grad_or_zeros(outer, q, create_graph=False).detach()
    if not torch.isfinite(hyper).all():
        raise NumericalFailureException("hypergradient is not finite", segment="weights")
    return hyper.numpy().copy()


# =========================================================
# HELPERS
# =========================================================

def _as_weights(weights):
    if weights is None:
        return None
    return torch.as_tensor(np.asarray(weights, dtype=np.float64), dtype=TORCH_DTYPE)


def _grad_or_zeros(output: torch.Tensor, wrt: torch.Tensor, create_graph: bool) -> torch.Tensor:
    if not output.requires_grad:
        return torch.zeros_like(wrt)
    (grad,) = torch.autograd.grad(output, wrt, create_graph=create_graph, allow_unused=True)
    return torch.zeros_like(wrt) if grad is None else grad


def _check_scalar(value: torch.Tensor, params: ParamVector, what: str):
    if value.numel() != 1:
        raise ContractException(f"{what} must be a scalar, got shape {tuple(value.shape)}")
    if not torch.isfinite(value.detach()).all():
        _raise_nonfinite(params, what)


def _check_vector(vector: ParamVector, what: str):
    if not torch.isfinite(vector.values).all():
        _raise_nonfinite(vector, what)


def _raise_nonfinite(params: ParamVector, what: str):
    segment = params.first_nonfinite_segment()
    if segment is None:
        # params themselves are finite; the failure came from the data or the loss
        segment = params.layout[0][0] if params.layout else "loss"
    logger.error(f"Non-finite {what}", extra={"segment": segment})
    raise NumericalFailureException(f"non-finite {what} (first offending segment: {segment})", segment=segment)
