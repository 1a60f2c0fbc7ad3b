import numpy as np
import pytest

from learners.models import ClassifierSpec, OptimizerConfig
from learners.services import train_supervised
from streams.models import LabeledSet
from streams.services import gen_rotated_gaussians


@pytest.fixture(scope="session")
def small_stream():
    """3-class rotated Gaussians: 4 intermediate domains of 30 points over 60 degrees."""
    return gen_rotated_gaussians(
        num_classes=3,
        points_per_domain=30,
        num_domains=5,
        total_angle=60.0,
        noise_sd=0.15,
        seed=0,
    )


@pytest.fixture(scope="session")
def train_opt():
    return OptimizerConfig(lr=0.1, epochs=20, batch_size=32)


@pytest.fixture(scope="session")
def source_params(small_stream, train_opt):
    spec = ClassifierSpec(input_dim=2, num_classes=3, hidden_dims=(16,))
    return train_supervised(spec, small_stream.source, train_opt, seed=0)


@pytest.fixture
def two_blobs():
    rng = np.random.default_rng(0)
    X = np.vstack([
        rng.normal(loc=(-3.0, 0.0), scale=0.5, size=(100, 2)),
        rng.normal(loc=(3.0, 0.0), scale=0.5, size=(100, 2)),
    ])
    return LabeledSet(X, np.repeat([0, 1], 100))
