"""Iteration drivers: K-Means (Lloyd), fuzzy C-means, and the spatially
weighted fuzzy variant, plus centroid initialization and defuzzification.

All runs are deterministic functions of (image, params): the only random
draw is the seeded centroid initialization, and every reduction happens in
a fixed order.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (
    ClusterParams,
    ImageGrid,
    TraceEntry,
    distance_matrix,
    normalize_intensities,
    objective,
    update_centroids,
    update_membership,
)
from .spatial import modulate, spatial_function

__all__ = [
    "LabelMap",
    "SegmentationResult",
    "init_centroids",
    "kmeans_assign",
    "kmeans_update",
    "run_kmeans",
    "run_fcm",
    "run_sfcm",
    "run_fuzzy_features",
    "defuzzify",
    "converged",
]

_REDRAW_ATTEMPTS = 100


@dataclass(frozen=True)
class LabelMap:
    """Hard per-pixel cluster assignment, row-major like ImageGrid."""

    width: int
    height: int
    labels: np.ndarray

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError("label map must be at least 1x1")
        arr = np.ascontiguousarray(np.asarray(self.labels, dtype=np.int64).reshape(-1))
        object.__setattr__(self, "labels", arr)
        if arr.size != self.width * self.height:
            raise ValueError(
                f"expected {self.width * self.height} labels, got {arr.size}"
            )
        if int(arr.min()) < 0:
            raise ValueError("labels must be non-negative")

    @property
    def pixel_count(self) -> int:
        return self.width * self.height

    @property
    def grid(self) -> np.ndarray:
        return self.labels.reshape(self.height, self.width)


@dataclass
class SegmentationResult:
    """Everything one engine run produces.

    memberships is None for K-Means. diagnostics carries incidental flags
    such as duplicate initial centroids or spatial-weighting fallback counts.
    """

    labels: LabelMap
    centroids: np.ndarray
    memberships: Optional[np.ndarray]
    trace: list[TraceEntry]
    iterations_run: int
    converged: bool
    params: ClusterParams
    diagnostics: dict = field(default_factory=dict)


def init_centroids(
    params: ClusterParams, features: np.ndarray, max_value: Optional[float] = None
) -> np.ndarray:
    """Initial centroids in normalized intensity space.

    Explicit init lists hold raw intensities and need max_value (the image's
    bit-depth maximum) to land on the feature scale. Seeded-random init
    draws uniformly from the observed feature range; duplicate draws are
    retried, and if the range is degenerate the duplicates stand and a
    warning is emitted.
    """
    x = np.asarray(features, dtype=np.float64).reshape(-1)
    if x.size == 0:
        raise ValueError("features are empty")
    if isinstance(params.init, str):
        rng = np.random.default_rng(params.seed)
        lo, hi = float(x.min()), float(x.max())
        values = rng.uniform(lo, hi, params.clusters)
        tries = 0
        while (
            np.unique(values).size < params.clusters
            and lo < hi
            and tries < _REDRAW_ATTEMPTS
        ):
            values = rng.uniform(lo, hi, params.clusters)
            tries += 1
        if np.unique(values).size < params.clusters:
            warnings.warn(
                "initial centroids contain duplicates (degenerate feature range)",
                RuntimeWarning,
                stacklevel=2,
            )
        return values
    if max_value is None:
        raise ValueError("explicit init values require max_value for scaling")
    return np.asarray(params.init, dtype=np.float64) / float(max_value)


def kmeans_assign(features: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Index of the nearest centroid per pixel; ties go to the lowest index."""
    dists = distance_matrix(features, centroids)
    return np.argmin(dists, axis=1).astype(np.int64)


def kmeans_update(
    features: np.ndarray,
    labels: np.ndarray,
    clusters: int,
    previous: np.ndarray,
) -> np.ndarray:
    """Per-cluster mean; a cluster with no members keeps its previous centroid."""
    x = np.asarray(features, dtype=np.float64).reshape(-1)
    lab = np.asarray(labels, dtype=np.int64).reshape(-1)
    if lab.size != x.size:
        raise ValueError("labels do not match feature count")
    if lab.size and int(lab.max()) >= clusters:
        raise ValueError("label exceeds cluster count")
    sums = np.bincount(lab, weights=x, minlength=clusters)
    counts = np.bincount(lab, minlength=clusters)
    out = np.asarray(previous, dtype=np.float64).reshape(-1).copy()
    if out.size != clusters:
        raise ValueError("previous centroids do not match cluster count")
    filled = counts > 0
    out[filled] = sums[filled] / counts[filled]
    return out


def defuzzify(memberships: np.ndarray, width: int, height: int) -> LabelMap:
    """Hard labels by per-pixel argmax; ties resolve to the lowest index."""
    u = np.asarray(memberships, dtype=np.float64)
    return LabelMap(width, height, np.argmax(u, axis=1))


def converged(previous: np.ndarray, current: np.ndarray, epsilon: float) -> bool:
    """True when no membership entry moved by epsilon or more."""
    if not epsilon > 0.0:
        raise ValueError("epsilon must be positive")
    a = np.asarray(previous, dtype=np.float64)
    b = np.asarray(current, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("membership shapes differ")
    if a.size == 0:
        return True
    return bool(np.abs(b - a).max() < epsilon)


def _resolve_centroids(
    params: ClusterParams,
    features: np.ndarray,
    max_value: Optional[float],
    override: Optional[np.ndarray],
) -> np.ndarray:
    if override is not None:
        arr = np.asarray(override, dtype=np.float64).reshape(-1).copy()
        if arr.size != params.clusters:
            raise ValueError(
                f"initial_centroids needs {params.clusters} values, got {arr.size}"
            )
        return arr
    return init_centroids(params, features, max_value=max_value)


def _init_diagnostics(centroids: np.ndarray, params: ClusterParams) -> dict:
    diag: dict = {}
    if np.unique(centroids).size < params.clusters:
        diag["duplicate_init"] = True
    return diag


def run_fuzzy_features(
    features: np.ndarray,
    width: int,
    height: int,
    params: ClusterParams,
    initial_centroids: Optional[np.ndarray] = None,
    spatial: bool = False,
) -> SegmentationResult:
    """Alternating membership/centroid updates on a prepared feature vector.

    Per iteration: distances, membership update, then (with spatial=True)
    window sums and the p/q reweighting, then the centroid update from
    whichever matrix survives. Convergence is the largest absolute change of
    that matrix dropping below epsilon. Labels come from the final matrix.
    """
    x = np.asarray(features, dtype=np.float64).reshape(-1)
    if x.size != width * height:
        raise ValueError("features do not match image size")
    centroids = _resolve_centroids(params, x, None, initial_centroids)
    diagnostics = _init_diagnostics(centroids, params)

    u_prev = np.zeros((x.size, params.clusters))
    u = u_prev
    trace: list[TraceEntry] = []
    fallbacks = 0
    converged_flag = False
    iterations = 0
    for iterations in range(1, params.max_iter + 1):
        dists = distance_matrix(x, centroids)
        u = update_membership(dists, params.fuzziness)
        if spatial:
            sums = spatial_function(u, width, height, params.radius)
            u, dead_rows = modulate(u, sums, params.p, params.q)
            fallbacks += dead_rows
        value = objective(dists, u, params.fuzziness)
        delta = float(np.abs(u - u_prev).max())
        trace.append(TraceEntry(iterations, value, delta))
        centroids = update_centroids(x, u, params.fuzziness)
        u_prev = u
        if delta < params.epsilon:
            converged_flag = True
            break

    if fallbacks:
        diagnostics["modulation_fallbacks"] = fallbacks
    return SegmentationResult(
        labels=defuzzify(u, width, height),
        centroids=centroids,
        memberships=u,
        trace=trace,
        iterations_run=iterations,
        converged=converged_flag,
        params=params,
        diagnostics=diagnostics,
    )


def run_fcm(
    image: ImageGrid,
    params: ClusterParams,
    initial_centroids: Optional[np.ndarray] = None,
) -> SegmentationResult:
    """Fuzzy C-means on a grayscale image."""
    features = normalize_intensities(image)
    centroids = _resolve_centroids(params, features, image.max_value, initial_centroids)
    return run_fuzzy_features(
        features, image.width, image.height, params, centroids, spatial=False
    )


def run_sfcm(
    image: ImageGrid,
    params: ClusterParams,
    initial_centroids: Optional[np.ndarray] = None,
) -> SegmentationResult:
    """Spatially weighted fuzzy C-means on a grayscale image.

    With p=1 and q=0 the weighting is the identity and the run reproduces
    run_fcm exactly, iteration for iteration.
    """
    features = normalize_intensities(image)
    centroids = _resolve_centroids(params, features, image.max_value, initial_centroids)
    return run_fuzzy_features(
        features, image.width, image.height, params, centroids, spatial=True
    )


def run_kmeans(
    image: ImageGrid,
    params: ClusterParams,
    initial_centroids: Optional[np.ndarray] = None,
) -> SegmentationResult:
    """Lloyd iterations until labels stabilize, centroid movement drops below
    epsilon, or max_iter is reached.

    The trace records the within-cluster sum of squares and the centroid
    movement per iteration. A stop on label stabilization counts as
    converged even when the recorded movement still exceeds epsilon (one
    more iteration would move nothing).
    """
    features = normalize_intensities(image)
    centroids = _resolve_centroids(params, features, image.max_value, initial_centroids)
    diagnostics = _init_diagnostics(centroids, params)

    labels = kmeans_assign(features, centroids)
    trace: list[TraceEntry] = []
    converged_flag = False
    iterations = 0
    for iterations in range(1, params.max_iter + 1):
        new_centroids = kmeans_update(features, labels, params.clusters, centroids)
        new_labels = kmeans_assign(features, new_centroids)
        wcss = float(((features - new_centroids[new_labels]) ** 2).sum())
        movement = float(np.abs(new_centroids - centroids).max())
        trace.append(TraceEntry(iterations, wcss, movement))
        labels_stable = bool(np.array_equal(new_labels, labels))
        centroids, labels = new_centroids, new_labels
        if labels_stable or movement < params.epsilon:
            converged_flag = True
            break

    return SegmentationResult(
        labels=LabelMap(image.width, image.height, labels),
        centroids=centroids,
        memberships=None,
        trace=trace,
        iterations_run=iterations,
        converged=converged_flag,
        params=params,
        diagnostics=diagnostics,
    )
