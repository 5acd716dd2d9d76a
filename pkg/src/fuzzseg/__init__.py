"""Grayscale image segmentation by K-Means, fuzzy C-means, and a spatially
weighted fuzzy C-means, with synthetic phantoms for quantitative scoring."""

from .core import (
    ClusterParams,
    DegenerateClusterError,
    ImageGrid,
    TraceEntry,
    distance_matrix,
    normalize_intensities,
    objective,
    update_centroids,
    update_membership,
)
from .engines import (
    LabelMap,
    SegmentationResult,
    converged,
    defuzzify,
    init_centroids,
    kmeans_assign,
    kmeans_update,
    run_fcm,
    run_fuzzy_features,
    run_kmeans,
    run_sfcm,
)
from .phantom import (
    NoiseSpec,
    PhantomSpec,
    add_noise,
    generate_phantom,
    isolated_pixel_count,
    misclassification_rate,
)
from .spatial import modulate, spatial_function, window_indices

__version__ = "0.1.0"

__all__ = [
    "ClusterParams",
    "DegenerateClusterError",
    "ImageGrid",
    "LabelMap",
    "NoiseSpec",
    "PhantomSpec",
    "SegmentationResult",
    "TraceEntry",
    "add_noise",
    "converged",
    "defuzzify",
    "distance_matrix",
    "generate_phantom",
    "init_centroids",
    "isolated_pixel_count",
    "kmeans_assign",
    "kmeans_update",
    "misclassification_rate",
    "modulate",
    "normalize_intensities",
    "objective",
    "run_fcm",
    "run_fuzzy_features",
    "run_kmeans",
    "run_sfcm",
    "spatial_function",
    "update_centroids",
    "update_membership",
    "window_indices",
]
