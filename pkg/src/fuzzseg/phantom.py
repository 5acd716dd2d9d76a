"""Synthetic ground-truth images, noise injection, and segmentation scoring.

Phantoms stand in for clinical rasters: known region geometry gives an
exact truth labeling to score segmentations against.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .core import ImageGrid
from .engines import LabelMap

__all__ = [
    "NoiseSpec",
    "PhantomSpec",
    "generate_phantom",
    "add_noise",
    "misclassification_rate",
    "isolated_pixel_count",
    "MAX_PERMUTATION_CLUSTERS",
]

# The permutation search below is exact but factorial in the cluster count.
MAX_PERMUTATION_CLUSTERS = 8

_REGION_KINDS = ("band", "disc")


@dataclass(frozen=True)
class NoiseSpec:
    """Noise model: "none", "salt" (amount = corrupted pixel fraction), or
    "gauss" (amount = standard deviation in raw intensity units)."""

    kind: str = "none"
    amount: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("none", "salt", "gauss"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kind == "salt" and not 0.0 <= self.amount < 1.0:
            raise ValueError("salt fraction must lie in [0, 1)")
        if self.kind == "gauss" and self.amount < 0.0:
            raise ValueError("gaussian sigma must be non-negative")

    @classmethod
    def parse(cls, text: str) -> "NoiseSpec":
        """Parse "none", "salt:FRACTION", or "gauss:SIGMA"."""
        if text == "none":
            return cls()
        kind, sep, amount = text.partition(":")
        if not sep or kind not in ("salt", "gauss"):
            raise ValueError(f"bad noise spec {text!r}")
        try:
            value = float(amount)
        except ValueError:
            raise ValueError(f"bad noise amount {amount!r}") from None
        return cls(kind, value)


@dataclass(frozen=True)
class PhantomSpec:
    """Region layout plus a noise model, all 8-bit.

    regions is a sequence of ("band" | "disc", intensity) pairs. Band
    entries split the rows evenly, top to bottom. Disc entries paint
    centered discs of shrinking radius over whatever came before; when no
    bands exist, the first disc fills the frame as the background. Truth
    labels are region indices, assigned by paint order.
    """

    width: int
    height: int
    regions: tuple
    noise: NoiseSpec = NoiseSpec()
    seed: int = 0

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError("phantom must be at least 1x1")
        regions = tuple((str(kind), int(value)) for kind, value in self.regions)
        object.__setattr__(self, "regions", regions)
        if not regions:
            raise ValueError("phantom needs at least one region")
        for kind, value in regions:
            if kind not in _REGION_KINDS:
                raise ValueError(f"unknown region kind {kind!r}")
            if not 0 <= value <= 255:
                raise ValueError(f"region intensity {value} outside 8-bit range")
        intensities = [value for _, value in regions]
        if len(set(intensities)) != len(intensities):
            raise ValueError("region intensities must be distinct")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")


def generate_phantom(spec: PhantomSpec) -> tuple[ImageGrid, LabelMap]:
    """Deterministic phantom image and its ground-truth label map.

    Noise (if any) is applied after painting, so the truth labels always
    describe the clean geometry.
    """
    height, width = spec.height, spec.width
    image = np.zeros((height, width), dtype=np.int64)
    labels = np.zeros((height, width), dtype=np.int64)

    band_ids = [i for i, (kind, _) in enumerate(spec.regions) if kind == "band"]
    disc_ids = [i for i, (kind, _) in enumerate(spec.regions) if kind == "disc"]

    if band_ids:
        row_band = np.minimum(np.arange(height) * len(band_ids) // height,
                              len(band_ids) - 1)
        for b, region in enumerate(band_ids):
            rows = row_band == b
            image[rows, :] = spec.regions[region][1]
            labels[rows, :] = region

    if disc_ids:
        overlays = disc_ids
        if not band_ids:
            background = disc_ids[0]
            image[:, :] = spec.regions[background][1]
            labels[:, :] = background
            overlays = disc_ids[1:]
        if overlays:
            ys = np.arange(height, dtype=np.float64)[:, None] - (height - 1) / 2.0
            xs = np.arange(width, dtype=np.float64)[None, :] - (width - 1) / 2.0
            rr = ys * ys + xs * xs
            count = len(overlays)
            for k, region in enumerate(overlays):
                radius = min(width, height) * (count - k) / (2.0 * (count + 1))
                mask = rr <= radius * radius
                image[mask] = spec.regions[region][1]
                labels[mask] = region

    clean = ImageGrid(width, height, 8, image.reshape(-1))
    noisy = add_noise(clean, spec.noise, spec.seed)
    return noisy, LabelMap(width, height, labels.reshape(-1))


def add_noise(image: ImageGrid, noise: NoiseSpec, seed: int) -> ImageGrid:
    """Seeded pixel corruption.

    Salt noise replaces each pixel independently by 0 or full scale, each
    with probability amount/2. Gaussian noise adds N(0, sigma) per pixel,
    clamps to the valid range, and rounds to the nearest integer.
    """
    if noise.kind == "none" or noise.amount == 0.0:
        return image
    rng = np.random.default_rng(seed)
    n = image.samples.size
    if noise.kind == "salt":
        hit = rng.random(n) < noise.amount
        dark = rng.random(n) < 0.5
        extremes = np.where(dark, 0, image.max_value)
        samples = np.where(hit, extremes, image.samples)
    else:
        jitter = rng.normal(0.0, noise.amount, n)
        samples = np.rint(
            np.clip(image.samples + jitter, 0, image.max_value)
        ).astype(np.int64)
    return ImageGrid(image.width, image.height, image.bit_depth, samples)


def misclassification_rate(pred: LabelMap, truth: LabelMap, clusters: int) -> float:
    """Fraction of mismatched pixels under the best label permutation.

    Exact search over all clusters! relabelings of pred, so the rate is
    invariant to how the clustering happened to number its clusters.
    """
    if clusters < 1:
        raise ValueError("clusters must be at least 1")
    if clusters > MAX_PERMUTATION_CLUSTERS:
        raise ValueError(
            f"permutation matching supports at most {MAX_PERMUTATION_CLUSTERS} clusters"
        )
    if (pred.width, pred.height) != (truth.width, truth.height):
        raise ValueError("prediction and truth dimensions differ")
    a, b = pred.labels, truth.labels
    if int(a.max()) >= clusters or int(b.max()) >= clusters:
        raise ValueError("label exceeds cluster count")
    confusion = np.bincount(
        a * clusters + b, minlength=clusters * clusters
    ).reshape(clusters, clusters)
    perms = np.array(
        list(itertools.permutations(range(clusters))), dtype=np.int64
    )
    matches = confusion[np.arange(clusters)[None, :], perms].sum(axis=1)
    return 1.0 - int(matches.max()) / a.size


def isolated_pixel_count(labels: LabelMap, radius: int = 1) -> int:
    """Pixels whose label matches no other pixel in their clipped window.

    A proxy for speckle: a clean segmentation of contiguous regions scores
    0, every surviving noise pixel scores 1.
    """
    if radius < 1:
        raise ValueError("radius must be at least 1")
    grid = labels.grid
    height, width = grid.shape
    has_peer = np.zeros((height, width), dtype=bool)
    for dy in range(-radius, radius + 1):
        y0, y1 = max(0, -dy), height - max(0, dy)
        if y0 >= y1:
            continue
        for dx in range(-radius, radius + 1):
            if dy == 0 and dx == 0:
                continue
            x0, x1 = max(0, -dx), width - max(0, dx)
            if x0 >= x1:
                continue
            has_peer[y0:y1, x0:x1] |= (
                grid[y0:y1, x0:x1] == grid[y0 + dy : y1 + dy, x0 + dx : x1 + dx]
            )
    return int((~has_peer).sum())
