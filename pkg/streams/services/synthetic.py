import logging
import math

import numpy as np
from sklearn.datasets import make_moons

from streams.models import LabeledSet, ShiftStream, UnlabeledSet
from utils.exceptions import ContractException
from utils.seeding import child_seed, make_rng

logger = logging.getLogger(__name__)

# make_moons arcs span x in [-1, 2], y in [-0.5, 1]; shift them to sit around the origin
MOONS_CENTER = np.array([0.5, 0.25])


def rotation_matrix(angle_degrees: float) -> np.ndarray:
    theta = math.radians(angle_degrees)
    return np.array([
        [math.cos(theta), -math.sin(theta)],
        [math.sin(theta), math.cos(theta)],
    ])


def rotate_points(points: np.ndarray, angle_degrees: float) -> np.ndarray:
    """Rotate row vectors counter-clockwise about the origin."""
    return points @ rotation_matrix(angle_degrees).T


# =========================================================
# DOMAIN SAMPLERS
# =========================================================

def gaussian_class_means(num_classes: int, center_offset: float) -> np.ndarray:
    """Class means spread evenly on a unit circle around (center_offset, 0)."""
    angles = 2 * np.pi * np.arange(num_classes) / num_classes
    return np.column_stack([center_offset + np.cos(angles), np.sin(angles)])


def sample_gaussian_domain(generator: dict, angle: float, rng: np.random.Generator):
    num_classes = generator["num_classes"]
    per_class = generator["points_per_domain"] // num_classes
    means = gaussian_class_means(num_classes, generator["center_offset"])

    labels = np.repeat(np.arange(num_classes), per_class)
    points = means[labels] + rng.normal(scale=generator["noise_sd"], size=(len(labels), 2))
    return rotate_points(points, angle), labels


def sample_moons_domain(generator: dict, angle: float, rng: np.random.Generator):
    points, labels = make_moons(
        n_samples=generator["points_per_domain"],
        shuffle=False,
        noise=None,
        random_state=int(rng.integers(0, 2**31 - 1)),
    )
    if generator["noise_sd"] > 0:
        points = points + rng.normal(scale=generator["noise_sd"], size=points.shape)
    return rotate_points(points - MOONS_CENTER, angle), labels.astype(np.int64)


SAMPLERS = {
    "gaussians": sample_gaussian_domain,
    "moons": sample_moons_domain,
}


def domain_angles(generator: dict) -> np.ndarray:
    """Angle of domain m = m * total_angle / num_domains for m = 0..num_domains."""
    steps = generator["num_domains"]
    return np.arange(steps + 1) * generator["total_angle"] / steps


def sample_domains(generator: dict, angles, seed: int, key: int):
    """Sample one domain per angle; `key` separates independent batches of domains."""
    sampler = SAMPLERS[generator["kind"]]
    features, labels = [], []
    for m, angle in enumerate(angles):
        X, y = sampler(generator, float(angle), make_rng(seed, key, m))
        features.append(X)
        labels.append(y)
    return features, labels


# =========================================================
# STREAM BUILDERS
# =========================================================

def _validate(num_classes, points_per_domain, num_domains, total_angle, noise_sd):
    if num_classes < 2:
        raise ContractException(f"num_classes must be >= 2, got {num_classes}")
    if not 0 < total_angle < 180:
        raise ContractException(f"total_angle must be in (0, 180), got {total_angle}")
    if num_domains < 1:
        raise ContractException(f"num_domains must be >= 1, got {num_domains}")
    if points_per_domain < num_classes or points_per_domain % num_classes:
        raise ContractException(
            f"points_per_domain={points_per_domain} must be a positive multiple of num_classes={num_classes}"
        )
    if noise_sd < 0:
        raise ContractException(f"noise_sd must be >= 0, got {noise_sd}")


def build_stream(generator: dict, seed: int) -> ShiftStream:
    """
    Domain 0 is the source, domain num_domains the target and the domains in
    between form the unindexed pool, with their angle as ground truth.
    """
    angles = domain_angles(generator)
    features, labels = sample_domains(generator, angles, seed, key=0)

    pool_X = np.vstack(features[1:-1]) if len(angles) > 2 else np.zeros((0, 2))
    pool_y = np.concatenate(labels[1:-1]) if len(angles) > 2 else np.zeros(0, dtype=np.int64)
    truth = np.repeat(angles[1:-1], [len(y) for y in labels[1:-1]])

    stream = ShiftStream(
        source=LabeledSet(features[0], labels[0]),
        target=LabeledSet(features[-1], labels[-1]),
        intermediate=UnlabeledSet(pool_X),
        intermediate_labels=pool_y,
        truth_index=truth,
        num_classes=int(generator.get("num_classes", 2)),
        generator=dict(generator),
        seed=seed,
    )
    logger.info(
        f"Generated {generator['kind']} stream domains={generator['num_domains']} pool={len(pool_X)}",
        extra={"seed": seed},
    )
    return stream


def gen_rotated_gaussians(
    num_classes: int,
    points_per_domain: int,
    num_domains: int,
    total_angle: float,
    noise_sd: float,
    seed: int,
    center_offset: float = 2.0,
) -> ShiftStream:
    """Gaussian classes on a circle, rotated about the origin by m * total_angle / num_domains."""
    _validate(num_classes, points_per_domain, num_domains, total_angle, noise_sd)
    generator = {
        "kind": "gaussians",
        "num_classes": num_classes,
        "points_per_domain": points_per_domain,
        "num_domains": num_domains,
        "total_angle": float(total_angle),
        "noise_sd": float(noise_sd),
        "center_offset": float(center_offset),
    }
    return build_stream(generator, seed)


def gen_rotated_moons(
    points_per_domain: int,
    num_domains: int,
    total_angle: float,
    noise_sd: float,
    seed: int,
) -> ShiftStream:
    _validate(2, points_per_domain, num_domains, total_angle, noise_sd)
    generator = {
        "kind": "moons",
        "num_classes": 2,
        "points_per_domain": points_per_domain,
        "num_domains": num_domains,
        "total_angle": float(total_angle),
        "noise_sd": float(noise_sd),
    }
    return build_stream(generator, seed)
