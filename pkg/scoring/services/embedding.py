from typing import Protocol

import numpy as np
from scipy.spatial import KDTree
from sklearn.decomposition import PCA

from utils.exceptions import ContractException

DISTANCE_EPS = 1e-8


class Embedding(Protocol):
    """Maps a feature matrix to low-dimensional points gamma(x), one row each."""

    def fit_transform(self, features: np.ndarray) -> np.ndarray: ...


class PCAEmbedding:
    """Projection onto the top principal components, fit on the rows given."""

    def __init__(self, dim: int = 2):
        self.dim = dim

    def fit_transform(self, features: np.ndarray) -> np.ndarray:
        if self.dim > features.shape[1]:
            raise ContractException(f"embedding dim {self.dim} exceeds feature dim {features.shape[1]}")
        if self.dim > features.shape[0]:
            raise ContractException(f"embedding dim {self.dim} exceeds the number of points {features.shape[0]}")
        return PCA(n_components=self.dim, svd_solver="full").fit_transform(features)


def manifold_distance_ratio(points, source_points, target_points, eps: float = DISTANCE_EPS) -> np.ndarray:
    """(eps + distance to nearest target point) / (eps + distance to nearest source point)."""
    d_target, _ = KDTree(np.asarray(target_points)).query(np.asarray(points), k=1)
    d_source, _ = KDTree(np.asarray(source_points)).query(np.asarray(points), k=1)
    return (eps + d_target) / (eps + d_source)
