from .export import read_stream_csv, stream_frame, write_stream_csv
from .images import gen_rotated_images, load_idx_images, rotate_images
from .perturb import PerturbMode, perturb_stream, stratified_quotas
from .synthetic import (
    gaussian_class_means,
    gen_rotated_gaussians,
    gen_rotated_moons,
    rotate_points,
    rotation_matrix,
)

__all__ = (
    "PerturbMode",
    "gaussian_class_means",
    "gen_rotated_gaussians",
    "gen_rotated_images",
    "gen_rotated_moons",
    "load_idx_images",
    "perturb_stream",
    "read_stream_csv",
    "rotate_images",
    "rotate_points",
    "rotation_matrix",
    "stratified_quotas",
    "stream_frame",
    "write_stream_csv",
)
