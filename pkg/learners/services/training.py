import logging
import math

import numpy as np
import torch
import torch.nn.functional as F

from Idol.settings import TORCH_DTYPE
from learners.models import (
    ClassifierParams,
    ClassifierSpec,
    DiscriminatorParams,
    DiscriminatorSpec,
    OptimizerConfig,
)
from learners.services.networks import forward, init_discriminator, init_params
from numerics.models import ParamVector
from numerics.services.autodiff import sgd_step
from streams.models import LabeledSet, UnlabeledSet
from utils.exceptions import ContractException, DegenerateLabelsException
from utils.seeding import make_rng

logger = logging.getLogger(__name__)


# =========================================================
# LOSSES
# =========================================================

def per_example_cross_entropy(spec, vector: ParamVector, X: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    return F.cross_entropy(forward(spec, vector, X), labels, reduction="none")


def weighted_batch_loss(spec, vector, X, labels, weights=None) -> torch.Tensor:
    """(1/|B|) sum_i w_i * l_i; plain mean when weights is None."""
    losses = per_example_cross_entropy(spec, vector, X, labels)
    if weights is None:
        return losses.mean()
    return (weights * losses).sum() / losses.shape[0]


def mean_cross_entropy(params: ClassifierParams, data: LabeledSet) -> float:
    with torch.no_grad():
        return float(per_example_cross_entropy(params.spec, params.vector, data.tensor(), data.label_tensor()).mean())


def _balanced_discriminator_loss(spec, vector, X_source, X_target) -> torch.Tensor:
    # -log sigma(g) = softplus(-g); -log(1 - sigma(g)) = softplus(g)
    source_term = F.softplus(-forward(spec, vector, X_source)).mean()
    target_term = F.softplus(forward(spec, vector, X_target)).mean()
    return 0.5 * (source_term + target_term)


def discriminator_loss(phi: DiscriminatorParams, source: UnlabeledSet, target: UnlabeledSet) -> float:
    """Source-vs-target binary cross entropy, each side averaged on its own (ln 2 at sigma = 1/2)."""
    with torch.no_grad():
        return float(_balanced_discriminator_loss(phi.spec, phi.vector, source.tensor(), target.tensor()))


def _with_weight_decay(loss: torch.Tensor, vector: ParamVector, weight_decay: float) -> torch.Tensor:
    if weight_decay == 0:
        return loss
    return loss + 0.5 * weight_decay * (vector.values ** 2).sum()


# =========================================================
# MINI-BATCH SGD
# =========================================================

def minibatches(n: int, batch_size: int, rng: np.random.Generator) -> list:
    order = rng.permutation(n)
    return [order[start:start + batch_size] for start in range(0, n, batch_size)]


def run_sgd(initial: ParamVector, batch_loss, n: int, opt: OptimizerConfig, rng) -> ParamVector:
    """
    opt.epochs passes of shuffled mini-batches over n examples.
    batch_loss(vector, batch_indices) returns the scalar loss of one batch.
    """
    theta = initial.detached()
    for _ in range(opt.epochs):
        for batch in minibatches(n, opt.batch_size, rng):
            theta = sgd_step(
                theta,
                lambda p, b=batch: _with_weight_decay(batch_loss(p, b), p, opt.weight_decay),
                opt.lr,
            )
    return theta


def fit_targets(
    params: ClassifierParams,
    X,
    targets,
    opt: OptimizerConfig,
    seed: int,
    weights=None,
) -> ClassifierParams:
    """Continue training `params` on fixed class targets, optionally weighting each example's loss."""
    X = torch.as_tensor(np.asarray(X, dtype=np.float64), dtype=TORCH_DTYPE)
    y = torch.as_tensor(np.asarray(targets, dtype=np.int64))
    w = None if weights is None else torch.as_tensor(np.asarray(weights, dtype=np.float64), dtype=TORCH_DTYPE)
    if X.shape[0] == 0:
        raise ContractException("cannot train on an empty set")

    def batch_loss(vector, batch):
        index = torch.as_tensor(batch)
        return weighted_batch_loss(params.spec, vector, X[index], y[index], None if w is None else w[index])

    vector = run_sgd(params.vector, batch_loss, X.shape[0], opt, make_rng(seed, 1))
    with torch.no_grad():
        final_loss = float(weighted_batch_loss(params.spec, vector, X, y, w))
    return params.with_vector(vector, training_loss=final_loss)


# =========================================================
# SUPERVISED TRAINING
# =========================================================

def train_supervised(
    spec: ClassifierSpec,
    data: LabeledSet,
    opt: OptimizerConfig,
    seed: int,
    init: ClassifierParams | None = None,
) -> ClassifierParams:
    """Average cross-entropy by mini-batch SGD from a seeded initialisation (or from `init`)."""
    if len(data) == 0:
        raise ContractException("cannot train on an empty dataset")
    present = np.unique(data.labels)
    if len(present) < 2:
        raise DegenerateLabelsException(f"training labels contain {len(present)} class(es), need at least 2")
    if present.max() >= spec.num_classes:
        raise ContractException(f"label {present.max()} out of range for {spec.num_classes} classes")

    start = init if init is not None else init_params(spec, seed)
    trained = fit_targets(start, data.features, data.labels, opt, seed)

    logger.info(
        f"Trained classifier n={len(data)} epochs={opt.epochs} loss={trained.training_loss:.4f}",
        extra={"seed": seed, "num_classes": spec.num_classes},
    )
    return trained


# =========================================================
# DOMAIN DISCRIMINATOR
# =========================================================

def train_discriminator(
    source: UnlabeledSet,
    target: UnlabeledSet,
    opt: OptimizerConfig,
    init: DiscriminatorParams | None = None,
    seed: int = 0,
    spec: DiscriminatorSpec | None = None,
) -> DiscriminatorParams:
    """
    Fit g(.; phi) with source labelled 1 and target labelled 0.

    Each step pairs a source batch with a target batch; an epoch lasts until the
    larger side has been seen once. With `init`, training continues from it.
    """
    if len(source) == 0 or len(target) == 0:
        raise ContractException("discriminator needs non-empty source and target sets")
    if source.dim != target.dim:
        raise ContractException(f"source has {source.dim} features, target has {target.dim}")

    if init is not None:
        start = init
    else:
        start = init_discriminator(spec or DiscriminatorSpec(input_dim=source.dim), seed)
    if start.spec.input_dim != source.dim:
        raise ContractException(f"discriminator expects {start.spec.input_dim} features, got {source.dim}")

    Xs, Xt = source.tensor(), target.tensor()
    ns, nt = len(source), len(target)
    rng = make_rng(seed, 2)
    steps_per_epoch = math.ceil(max(ns, nt) / opt.batch_size)

    vector = start.vector.detached()
    for _ in range(opt.epochs):
        perm_s, perm_t = rng.permutation(ns), rng.permutation(nt)
        for k in range(steps_per_epoch):
            bs = torch.as_tensor(perm_s[(k * opt.batch_size + np.arange(min(opt.batch_size, ns))) % ns])
            bt = torch.as_tensor(perm_t[(k * opt.batch_size + np.arange(min(opt.batch_size, nt))) % nt])
            vector = sgd_step(
                vector,
                lambda p, bs=bs, bt=bt: _with_weight_decay(
                    _balanced_discriminator_loss(start.spec, p, Xs[bs], Xt[bt]), p, opt.weight_decay
                ),
                opt.lr,
            )

    phi = start.with_vector(vector)
    loss = discriminator_loss(phi, source, target)
    logger.debug(f"Trained discriminator ns={ns} nt={nt} loss={loss:.4f}", extra={"seed": seed})
    return phi.with_vector(vector, training_loss=loss)
