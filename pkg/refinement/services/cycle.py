import logging

import numpy as np
import torch

from adaptation.models import PseudoLabeledSet
from adaptation.services import pseudo_label, self_train
from learners.models import ClassifierParams
from learners.services import forward, hard_labels, predict, weighted_batch_loss
from numerics.models import UnrolledTrace
from numerics.services.autodiff import hypergradient, unroll
from refinement.models import FineSequence, NextDomain, RefinementConfig, RefinementState
from scoring.models import order_by_scores
from streams.models import LabeledSet, UnlabeledSet
from utils.chunking import chunk_sizes
from utils.exceptions import ContractException, NumericalFailureException
from utils.seeding import child_seed, make_rng

logger = logging.getLogger(__name__)


# =========================================================
# ONE FORWARD-BACKWARD CYCLE
# =========================================================

class _CycleProblem:
    """
    Frozen inputs of the greedy sub-problem for one state: the remaining pool
    with theta_m's pseudo-labels, and the anchor set with the outer targets.
    """

    def __init__(self, state: RefinementState, pool_features: np.ndarray):
        params = state.params
        if not torch.isfinite(params.vector.values).all():
            segment = params.vector.first_nonfinite_segment()
            raise NumericalFailureException(f"theta_m is not finite (segment {segment})", segment=segment)

        self.spec = params.spec
        self.initial = params.vector
        self.X_pool = torch.as_tensor(pool_features[state.remaining], dtype=torch.float64)
        self.y_pool = torch.as_tensor(hard_labels(predict(params, self.X_pool)))

        anchor = state.anchor.kept()
        self.X_anchor = anchor.tensor()
        # outer targets: sharpen(f(x; theta_m)) on S_m
        self.y_outer = torch.as_tensor(hard_labels(predict(params, self.X_anchor)))

    def outer_loss(self, vector) -> torch.Tensor:
        return weighted_batch_loss(self.spec, vector, self.X_anchor, self.y_outer)

    def unroll(self, q: np.ndarray, config: RefinementConfig, rng: np.random.Generator):
        """Forward steps on (I, q), then backward steps on S_m; returns (final params, joint trace)."""
        T = config.t_steps
        n_pool, n_anchor = self.X_pool.shape[0], self.X_anchor.shape[0]

        forward_batches = [
            torch.as_tensor(rng.choice(n_pool, size=min(config.batch_size, n_pool), replace=False))
            for _ in range(T)
        ]

        def forward_loss(vector, t, w):
            b = forward_batches[t]
            return weighted_batch_loss(self.spec, vector, self.X_pool[b], self.y_pool[b], w)

        theta_prime, forward_trace = unroll(
            self.initial, forward_loss, [(b, config.lr_theta, True) for b in forward_batches], q
        )

        # backward pseudo-labels come from the detached theta'
        with torch.no_grad():
            y_back = forward(self.spec, theta_prime, self.X_anchor).argmax(dim=1)
        backward_batches = [
            torch.as_tensor(rng.choice(n_anchor, size=min(config.batch_size, n_anchor), replace=False))
            for _ in range(T)
        ]

        def backward_loss(vector, t, w):
            b = backward_batches[t]
            return weighted_batch_loss(self.spec, vector, self.X_anchor[b], y_back[b])

        final, backward_trace = unroll(
            theta_prime, backward_loss, [(b, config.lr_theta, False) for b in backward_batches]
        )

        def cycle_step_loss(vector, t, w):
            return forward_loss(vector, t, w) if t < T else backward_loss(vector, t - T, w)

        trace = UnrolledTrace(
            initial=forward_trace.initial,
            steps=forward_trace.steps + backward_trace.steps,
            step_loss=cycle_step_loss,
            num_weights=n_pool,
        )
        return final, trace


def cycle_loss(state: RefinementState, pool_features, q, config: RefinementConfig, seed: int) -> float:
    """
    Objective of the greedy sub-problem for weights q: cross entropy on S_m,
    after the forward and backward adaptation, against theta_m's predictions.
    Uses the same batches as the first epoch of find_next_domain with this seed.
    """
    q = np.asarray(q, dtype=np.float64)
    if q.shape != state.remaining.shape:
        raise ContractException(f"{q.size} weights for {state.remaining.size} remaining examples")
    problem = _CycleProblem(state, np.asarray(pool_features, dtype=np.float64))
    final, _ = problem.unroll(q, config, make_rng(seed))
    with torch.no_grad():
        return float(problem.outer_loss(final))


# =========================================================
# NEXT DOMAIN
# =========================================================

def _weight_optimizer(q: torch.Tensor, config: RefinementConfig) -> torch.optim.Optimizer:
    if config.q_optimizer == "sgd":
        return torch.optim.SGD([q], lr=config.lr_q)
    return torch.optim.Adam([q], lr=config.lr_q)


def find_next_domain(state: RefinementState, pool_features, config: RefinementConfig, seed: int) -> NextDomain:
    """
    Reweight the remaining pool by descending the cycle loss's hypergradient for
    config.epochs updates of config.q_optimizer (q clamped at 0 after each),
    then select the chunk_size examples with the largest q.
    """
    n = len(state.remaining)
    if state.chunk_size > n:
        raise ContractException(f"chunk of {state.chunk_size} requested from {n} remaining examples")

    problem = _CycleProblem(state, np.asarray(pool_features, dtype=np.float64))
    rng = make_rng(seed)
    weights = torch.tensor(state.weights, dtype=torch.float64, requires_grad=True)
    optimizer = _weight_optimizer(weights, config)
    losses = []

    for epoch in range(config.epochs):
        q = weights.detach().numpy().copy()
        final, trace = problem.unroll(q, config, rng)
        with torch.no_grad():
            losses.append(float(problem.outer_loss(final)))
        if config.lr_q > 0:
            weights.grad = torch.as_tensor(hypergradient(problem.outer_loss, trace, q), dtype=torch.float64)
            optimizer.step()
            with torch.no_grad():
                weights.clamp_(min=0.0)
        logger.debug(f"Refinement epoch {epoch + 1}/{config.epochs} cycle_loss={losses[-1]:.6f}", extra={"seed": seed})

    q = weights.detach().numpy().copy()
    picked = order_by_scores(q)[:state.chunk_size]
    return NextDomain(selected=state.remaining[picked], weights=q, cycle_losses=losses)


# =========================================================
# WHOLE SEQUENCE
# =========================================================

def initial_weights(num_remaining: int, config: RefinementConfig, scores=None) -> np.ndarray:
    """Descending ramp (n - j) / n over the remaining coarse order, or the raw coarse scores."""
    if config.init == "scores":
        if scores is None:
            raise ContractException("init='scores' needs the coarse scores")
        return np.asarray(scores, dtype=np.float64)
    return (num_remaining - np.arange(num_remaining)) / num_remaining


def refine_sequence(
    source: LabeledSet,
    source_params: ClassifierParams,
    pool: UnlabeledSet,
    coarse_order,
    M: int,
    config: RefinementConfig,
    seed: int,
    coarse_scores=None,
) -> FineSequence:
    """
    Greedy discovery of M - 1 domains. S_0 is the labeled source; each selected
    chunk is pseudo-labeled by theta_m to form S_{m+1}, and theta_m self-trains
    on it to give theta_{m+1}. The last chunk takes every remaining example,
    ordered by the weights the previous search left on them (coarse order
    when M = 2).
    """
    if M < 2:
        raise ContractException(f"refinement needs M >= 2, got {M}")
    coarse_order = np.asarray(coarse_order, dtype=np.int64)
    if not np.array_equal(np.sort(coarse_order), np.arange(len(pool))):
        raise ContractException("coarse_order must be a permutation of the pool positions")
    scores = None if coarse_scores is None else np.asarray(coarse_scores, dtype=np.float64)

    sizes = chunk_sizes(len(pool), M - 1)
    anchor = PseudoLabeledSet.from_labeled(source, source_params.spec.num_classes)
    params = source_params
    remaining = coarse_order
    leftover_weights = None
    chunks, all_losses = [], []

    for m, size in enumerate(sizes):
        if m == len(sizes) - 1:
            selected, losses = remaining, []
            if leftover_weights is not None:
                selected = remaining[order_by_scores(leftover_weights)]
        else:
            state = RefinementState(
                params=params,
                remaining=remaining,
                weights=initial_weights(len(remaining), config, None if scores is None else scores[remaining]),
                anchor=anchor,
                chunk_size=size,
            )
            step = find_next_domain(state, pool.features, config, child_seed(seed, m))
            selected, losses = step.selected, step.cycle_losses

            chunk = pool.subset(selected)
            anchor = pseudo_label(params, chunk, keep_frac=1.0)
            params = self_train(params, chunk, config.keep_frac, config.self_train_opt, seed + m)
            unpicked = ~np.isin(remaining, selected)
            leftover_weights = step.weights[unpicked]
            remaining = remaining[unpicked]

        chunks.append(np.asarray(selected, dtype=np.int64))
        all_losses.append(losses)
        logger.info(
            f"Refined domain {m + 1}/{len(sizes)} size={len(selected)} "
            f"cycle_loss={losses[-1] if losses else float('nan'):.6f}",
            extra={"seed": seed, "step": m + 1},
        )

    return FineSequence(chunks=chunks, cycle_losses=all_losses)
