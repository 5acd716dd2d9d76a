"""Core math for intensity-based fuzzy clustering.

Everything here is a pure function over float64 numpy arrays. Pixel
intensities are normalized to [0, 1]. Distance and membership matrices
have shape (n, c): one row per pixel, one column per cluster.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

__all__ = [
    "DegenerateClusterError",
    "ImageGrid",
    "ClusterParams",
    "TraceEntry",
    "normalize_intensities",
    "distance_matrix",
    "update_membership",
    "update_centroids",
    "objective",
]


class DegenerateClusterError(ValueError):
    """A cluster column carries zero total weight, so its centroid is undefined."""

    def __init__(self, cluster: int) -> None:
        super().__init__(f"cluster {cluster} has zero total membership weight")
        self.cluster = cluster


@dataclass(frozen=True)
class ImageGrid:
    """Row-major grayscale raster with an explicit bit depth.

    samples holds one non-negative integer per pixel, length width*height,
    each at most 2**bit_depth - 1. Only 8- and 16-bit rasters are supported.
    """

    width: int
    height: int
    bit_depth: int
    samples: np.ndarray

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError("image must be at least 1x1")
        if self.bit_depth not in (8, 16):
            raise ValueError(f"unsupported bit depth {self.bit_depth}")
        arr = np.asarray(self.samples)
        if arr.dtype == object or not np.issubdtype(arr.dtype, np.integer):
            raise ValueError("samples must be integers")
        arr = np.ascontiguousarray(arr.astype(np.int64).reshape(-1))
        object.__setattr__(self, "samples", arr)
        if arr.size != self.width * self.height:
            raise ValueError(
                f"expected {self.width * self.height} samples, got {arr.size}"
            )
        if int(arr.min()) < 0 or int(arr.max()) > self.max_value:
            raise ValueError("sample value out of range for bit depth")

    @property
    def max_value(self) -> int:
        return (1 << self.bit_depth) - 1

    @property
    def pixel_count(self) -> int:
        return self.width * self.height


@dataclass(frozen=True)
class ClusterParams:
    """Knobs shared by every segmentation engine.

    init is either the string "random" (a seeded uniform draw from the
    observed feature range) or a sequence of raw intensity values, one per
    cluster, interpreted against the image's bit-depth maximum. p and q
    weight the membership and spatial terms of the spatially weighted
    variant; plain FCM and K-Means ignore them.
    """

    clusters: int
    fuzziness: float = 2.0
    p: float = 1.0
    q: float = 1.0
    radius: int = 1
    epsilon: float = 1e-5
    max_iter: int = 100
    init: Union[str, Sequence[float]] = "random"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.clusters < 1:
            raise ValueError("clusters must be at least 1")
        if not self.fuzziness > 1.0:
            raise ValueError("fuzziness exponent must exceed 1")
        if self.p < 0 or self.q < 0:
            raise ValueError("p and q must be non-negative")
        if self.radius < 1:
            raise ValueError("radius must be at least 1")
        if not self.epsilon > 0.0:
            raise ValueError("epsilon must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if isinstance(self.init, str):
            if self.init != "random":
                raise ValueError(f"unknown init spec {self.init!r}")
        else:
            values = tuple(float(v) for v in self.init)
            if len(values) != self.clusters:
                raise ValueError(
                    f"explicit init needs exactly {self.clusters} values, got {len(values)}"
                )
            if not all(math.isfinite(v) and v >= 0 for v in values):
                raise ValueError("init values must be finite and non-negative")
            object.__setattr__(self, "init", values)


@dataclass(frozen=True)
class TraceEntry:
    """One engine iteration: objective value plus the step size that iteration.

    For the fuzzy engines max_delta is the largest absolute membership change
    since the previous iteration (on the first iteration: the largest
    membership, i.e. the change from an all-zero matrix). For K-Means it is
    the largest absolute centroid movement.
    """

    iteration: int
    objective: float
    max_delta: float


def normalize_intensities(image: ImageGrid) -> np.ndarray:
    """Map raw samples onto [0, 1] by dividing by the bit-depth maximum."""
    return image.samples.astype(np.float64) / float(image.max_value)


def distance_matrix(features: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Absolute intensity distance from every pixel to every centroid."""
    f = np.asarray(features, dtype=np.float64).reshape(-1)
    c = np.asarray(centroids, dtype=np.float64).reshape(-1)
    return np.abs(f[:, None] - c[None, :])


def update_membership(dist: np.ndarray, fuzziness: float) -> np.ndarray:
    """Memberships from distances: mu_ij = 1 / sum_k (d_ij / d_ik)^(2/(m-1)).

    Rows sum to 1 by construction. A pixel at zero distance from one or more
    centroids gets its whole membership split equally over those clusters
    and zero elsewhere, which is the limit of the update as the distance
    vanishes; no division by zero can surface.
    """
    if not fuzziness > 1.0:
        raise ValueError("fuzziness exponent must exceed 1")
    d = np.asarray(dist, dtype=np.float64)
    if d.ndim != 2:
        raise ValueError("distance matrix must be 2-D")
    n, c = d.shape
    expo = 2.0 / (fuzziness - 1.0)
    memberships = np.empty_like(d)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for j in range(c):
            ratios = d[:, j, None] / d
            memberships[:, j] = 1.0 / np.power(ratios, expo).sum(axis=1)
    zero = d == 0.0
    singular = zero.any(axis=1)
    if singular.any():
        shares = zero[singular].astype(np.float64)
        memberships[singular] = shares / shares.sum(axis=1, keepdims=True)
    return memberships


def update_centroids(
    features: np.ndarray, memberships: np.ndarray, fuzziness: float
) -> np.ndarray:
    """Per-cluster weighted mean with weights mu^m, clipped to the feature range.

    The clip only corrects last-ulp float overshoot: the exact weighted mean
    always lies inside [min(features), max(features)].
    """
    if not fuzziness > 1.0:
        raise ValueError("fuzziness exponent must exceed 1")
    x = np.asarray(features, dtype=np.float64).reshape(-1)
    u = np.asarray(memberships, dtype=np.float64)
    if u.ndim != 2 or u.shape[0] != x.size:
        raise ValueError("membership rows do not match feature count")
    weights = u**fuzziness
    totals = weights.sum(axis=0)
    dead = np.flatnonzero(totals == 0.0)
    if dead.size:
        raise DegenerateClusterError(int(dead[0]))
    sums = (weights * x[:, None]).sum(axis=0)
    return np.clip(sums / totals, x.min(), x.max())


def objective(dist: np.ndarray, memberships: np.ndarray, fuzziness: float) -> float:
    """Weighted sum of squared distances: J = sum_ij mu_ij^m * d_ij^2."""
    d = np.asarray(dist, dtype=np.float64)
    u = np.asarray(memberships, dtype=np.float64)
    if d.shape != u.shape:
        raise ValueError("distance and membership shapes differ")
    return float((u**fuzziness * d * d).sum())
