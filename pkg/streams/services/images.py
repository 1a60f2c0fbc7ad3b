import logging
from pathlib import Path

import numpy as np
from scipy import ndimage

from streams.models import LabeledSet, ShiftStream
from utils.exceptions import ContractException, FormatException
from utils.seeding import make_rng

logger = logging.getLogger(__name__)

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


# =========================================================
# IDX FILES
# =========================================================

def _read_idx(data: bytes, magic: int, what: str) -> np.ndarray:
    """Parse a big-endian unsigned-byte IDX payload into an array of its declared shape."""
    if len(data) < 4:
        raise FormatException(f"{what} file too short for a header", offset=len(data))
    found = int.from_bytes(data[:4], "big")
    if found != magic:
        raise FormatException(f"{what} file has magic 0x{found:08x}, expected 0x{magic:08x}", offset=0)

    ndims = magic & 0xFF
    header_end = 4 + 4 * ndims
    if len(data) < header_end:
        raise FormatException(f"{what} header truncated", offset=len(data))
    dims = np.frombuffer(data, dtype=">u4", count=ndims, offset=4).astype(np.int64)

    expected = int(np.prod(dims))
    body = data[header_end:]
    if len(body) != expected:
        raise FormatException(
            f"{what} payload has {len(body)} bytes, header declares {expected}",
            offset=header_end + min(len(body), expected),
        )
    return np.frombuffer(body, dtype=np.uint8).reshape(tuple(dims))


def load_idx_images(images_path, labels_path) -> LabeledSet:
    """Images scaled to [0, 1] and flattened row-major, paired with their labels."""
    images = _read_idx(Path(images_path).read_bytes(), IDX_IMAGES_MAGIC, "images")
    labels = _read_idx(Path(labels_path).read_bytes(), IDX_LABELS_MAGIC, "labels")
    if labels.shape[0] != images.shape[0]:
        # the label count is the first dimension field of the labels header
        raise FormatException(f"{labels.shape[0]} labels for {images.shape[0]} images", offset=4)

    features = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    logger.info(f"Loaded {images.shape[0]} images of {images.shape[1]}x{images.shape[2]} from {images_path}")
    return LabeledSet(features, labels.astype(np.int64))


# =========================================================
# ROTATION
# =========================================================

def rotate_image(flat: np.ndarray, width: int, height: int, angle_degrees: float) -> np.ndarray:
    if angle_degrees % 360 == 0:
        return flat.copy()
    image = flat.reshape(height, width)
    rotated = ndimage.rotate(image, angle_degrees, reshape=False, order=1, mode="constant", cval=0.0)
    return rotated.reshape(-1)


def rotate_images(data: LabeledSet, width: int, height: int, angle_degrees, seed: int = 0) -> LabeledSet:
    """
    Bilinear rotation about the image centre with zero fill; labels unchanged.

    angle_degrees is one angle for every image or one per image. Rotation is
    deterministic, so seed only matters to callers that draw the angles.
    """
    if data.dim != width * height:
        raise ContractException(f"feature dim {data.dim} does not match {width}x{height} images")
    angles = np.broadcast_to(np.asarray(angle_degrees, dtype=np.float64), (len(data),))
    rotated = np.vstack([
        rotate_image(row, width, height, angle) for row, angle in zip(data.features, angles, strict=True)
    ]) if len(data) else data.features.copy()
    return LabeledSet(rotated, data.labels, data.ids)


def gen_rotated_images(
    base: LabeledSet,
    width: int,
    height: int,
    seed: int,
    source_range=(0.0, 5.0),
    intermediate_range=(5.0, 55.0),
    target_range=(55.0, 60.0),
    splits=(0.2, 0.6, 0.2),
) -> ShiftStream:
    """
    Split `base` at random into source, pool and target, and rotate every image
    by an angle drawn uniformly from its split's range.
    """
    if len(splits) != 3 or any(s <= 0 for s in splits) or abs(sum(splits) - 1) > 1e-9:
        raise ContractException(f"splits must be three positive fractions summing to 1, got {splits}")
    if len(base) < 3:
        raise ContractException("need at least three images to build a stream")

    rng = make_rng(seed)
    order = rng.permutation(len(base))
    n_source = max(1, int(round(splits[0] * len(base))))
    n_pool = max(1, int(round(splits[1] * len(base))))
    parts = np.split(order, [n_source, n_source + n_pool])

    rotated = []
    for indices, (lo, hi) in zip(parts, (source_range, intermediate_range, target_range), strict=True):
        indices = np.sort(indices)
        angles = rng.uniform(lo, hi, size=len(indices))
        subset = base.subset(indices)
        rotated.append((rotate_images(LabeledSet(subset.features, subset.labels), width, height, angles), angles))

    (source, _), (pool, pool_angles), (target, _) = rotated
    num_classes = int(base.labels.max()) + 1
    return ShiftStream(
        source=source,
        target=target,
        intermediate=pool.unlabeled(),
        intermediate_labels=pool.labels,
        truth_index=pool_angles,
        num_classes=max(num_classes, 2),
        generator={
            "kind": "images",
            "width": width,
            "height": height,
            "source_range": list(source_range),
            "intermediate_range": list(intermediate_range),
            "target_range": list(target_range),
        },
        seed=seed,
    )
