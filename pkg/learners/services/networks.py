import logging
import math

import numpy as np
import torch
import torch.nn.functional as F

from Idol.settings import TORCH_DTYPE
from learners.models import ClassifierParams, ClassifierSpec, DiscriminatorParams, DiscriminatorSpec
from numerics.models import ParamVector
from utils.exceptions import ContractException
from utils.seeding import make_rng

logger = logging.getLogger(__name__)

_ACTIVATION_FNS = {
    "relu": torch.relu,
    "tanh": torch.tanh,
    "softplus": F.softplus,
}


# =========================================================
# LAYOUT & INITIALISATION
# =========================================================

def layout_for(spec) -> tuple:
    """((name, shape), ...) for hidden layers followed by the head."""
    layout, fan_in = [], spec.input_dim
    for i, width in enumerate(spec.hidden_dims):
        layout.append((f"hidden{i}.weight", (fan_in, width)))
        layout.append((f"hidden{i}.bias", (width,)))
        fan_in = width
    layout.append(("head.weight", (fan_in, spec.output_dim)))
    layout.append(("head.bias", (spec.output_dim,)))
    return tuple(layout)


def _init_vector(spec, seed: int) -> ParamVector:
    rng = make_rng(seed)
    segments = []
    for name, shape in layout_for(spec):
        # weight shapes are (fan_in, fan_out); a bias shares its layer's fan_in
        fan_in = shape[0] if name.endswith(".weight") else segments[-1][1].shape[0]
        bound = 1.0 / math.sqrt(fan_in)
        segments.append((name, rng.uniform(-bound, bound, size=shape)))
    return ParamVector.from_segments(segments)


def init_params(spec: ClassifierSpec, seed: int) -> ClassifierParams:
    """Uniform in +-1/sqrt(fan_in) from the seed."""
    return ClassifierParams(spec=spec, vector=_init_vector(spec, seed))


def init_discriminator(spec: DiscriminatorSpec, seed: int) -> DiscriminatorParams:
    return DiscriminatorParams(spec=spec, vector=_init_vector(spec, seed))


def zero_params(spec: ClassifierSpec) -> ClassifierParams:
    return ClassifierParams(spec=spec, vector=ParamVector.zeros(layout_for(spec)))


def zero_discriminator(spec: DiscriminatorSpec) -> DiscriminatorParams:
    return DiscriminatorParams(spec=spec, vector=ParamVector.zeros(layout_for(spec)))


# =========================================================
# FORWARD PASS
# =========================================================

def hidden_features(spec, vector: ParamVector, X: torch.Tensor) -> torch.Tensor:
    """Activations feeding the head; the raw input when there are no hidden layers."""
    seg = vector.segments()
    act = _ACTIVATION_FNS[spec.activation]
    h = X
    for i in range(len(spec.hidden_dims)):
        h = act(h @ seg[f"hidden{i}.weight"] + seg[f"hidden{i}.bias"])
    return h


def forward(spec, vector: ParamVector, X: torch.Tensor) -> torch.Tensor:
    """Head outputs, differentiable in `vector`: (n, num_classes) logits or (n,) discriminator logits."""
    if X.dim() != 2 or X.shape[1] != spec.input_dim:
        raise ContractException(f"expected inputs with {spec.input_dim} columns, got shape {tuple(X.shape)}")
    seg = vector.segments()
    out = hidden_features(spec, vector, X) @ seg["head.weight"] + seg["head.bias"]
    return out[:, 0] if isinstance(spec, DiscriminatorSpec) else out


def penultimate(params: ClassifierParams, X) -> np.ndarray:
    X = torch.as_tensor(np.asarray(X, dtype=np.float64), dtype=TORCH_DTYPE)
    if X.dim() != 2 or X.shape[1] != params.spec.input_dim:
        raise ContractException(f"expected inputs with {params.spec.input_dim} columns, got shape {tuple(X.shape)}")
    with torch.no_grad():
        return hidden_features(params.spec, params.vector, X).numpy().copy()
