import numpy as np
import torch

from Idol.settings import TORCH_DTYPE
from learners.models import ClassifierParams, DiscriminatorParams, Prediction
from learners.services.networks import forward
from utils.exceptions import ContractException


def _as_tensor(X) -> torch.Tensor:
    if isinstance(X, torch.Tensor):
        return X.to(TORCH_DTYPE)
    return torch.as_tensor(np.asarray(X, dtype=np.float64), dtype=TORCH_DTYPE)


def predict(params: ClassifierParams, X) -> Prediction:
    with torch.no_grad():
        logits = forward(params.spec, params.vector, _as_tensor(X))
        probabilities = torch.softmax(logits, dim=1)
    return Prediction(logits=logits.numpy().copy(), probabilities=probabilities.numpy().copy())


def prediction_from_logits(logits) -> Prediction:
    logits = torch.as_tensor(np.asarray(logits, dtype=np.float64), dtype=TORCH_DTYPE)
    return Prediction(logits=logits.numpy().copy(), probabilities=torch.softmax(logits, dim=1).numpy().copy())


def hard_labels(pred: Prediction) -> np.ndarray:
    # np.argmax returns the first maximum, i.e. the smallest class index on ties
    return np.argmax(pred.logits, axis=1)


def sharpen(pred: Prediction) -> np.ndarray:
    """One-hot rows at the argmax logit."""
    one_hot = np.zeros(pred.logits.shape, dtype=np.int64)
    one_hot[np.arange(len(pred)), hard_labels(pred)] = 1
    return one_hot


def confidence(pred: Prediction) -> np.ndarray:
    return pred.probabilities.max(axis=1)


def accuracy(params: ClassifierParams, labeled) -> float:
    """Fraction of argmax-correct predictions on a LabeledSet."""
    if len(labeled) == 0:
        raise ContractException("cannot evaluate accuracy on an empty set")
    return float(np.mean(hard_labels(predict(params, labeled.features)) == labeled.labels))


def discriminator_probability(phi: DiscriminatorParams, X) -> np.ndarray:
    """sigma(g(x; phi)), the probability that x comes from the source side."""
    with torch.no_grad():
        return torch.sigmoid(forward(phi.spec, phi.vector, _as_tensor(X))).numpy().copy()
