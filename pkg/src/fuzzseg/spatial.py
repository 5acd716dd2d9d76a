"""Square-window neighborhood sums and spatially weighted membership updates.

The spatial matrix has the same (n, c) shape as a membership matrix: entry
[i][j] is the sum of cluster-j memberships over the clipped square window
centered on pixel i. Windows include their own center and are clipped at
image borders; there is no padding or wraparound.
"""

from __future__ import annotations

import numpy as np

__all__ = ["window_indices", "spatial_function", "modulate"]


def window_indices(idx: int, width: int, height: int, radius: int) -> np.ndarray:
    """Row-major indices of the clipped (2r+1)x(2r+1) window around idx.

    The returned indices are in ascending row-major order and include idx
    itself.
    """
    if radius < 1:
        raise ValueError("radius must be at least 1")
    if not 0 <= idx < width * height:
        raise ValueError(f"pixel index {idx} out of range for {width}x{height}")
    y, x = divmod(idx, width)
    ys = np.arange(max(0, y - radius), min(height - 1, y + radius) + 1)
    xs = np.arange(max(0, x - radius), min(width - 1, x + radius) + 1)
    return (ys[:, None] * width + xs[None, :]).reshape(-1)


def spatial_function(
    memberships: np.ndarray, width: int, height: int, radius: int = 1
) -> np.ndarray:
    """Window sum of memberships for every pixel and cluster.

    Implemented as shifted in-place accumulation. Per output pixel the
    additions happen in ascending row-major neighbor order, so the result is
    bit-identical to summing the window_indices entries one at a time.
    """
    if radius < 1:
        raise ValueError("radius must be at least 1")
    u = np.asarray(memberships, dtype=np.float64)
    if u.ndim != 2 or u.shape[0] != width * height:
        raise ValueError("membership rows do not match image size")
    clusters = u.shape[1]
    grid = u.reshape(height, width, clusters)
    acc = np.zeros_like(grid)
    for dy in range(-radius, radius + 1):
        y0, y1 = max(0, -dy), height - max(0, dy)
        if y0 >= y1:
            continue
        for dx in range(-radius, radius + 1):
            x0, x1 = max(0, -dx), width - max(0, dx)
            if x0 >= x1:
                continue
            acc[y0:y1, x0:x1] += grid[y0 + dy : y1 + dy, x0 + dx : x1 + dx]
    return acc.reshape(u.shape[0], clusters)


def modulate(
    memberships: np.ndarray, spatial: np.ndarray, p: float = 1.0, q: float = 1.0
) -> tuple[np.ndarray, int]:
    """Reweight memberships by the spatial matrix: mu'_ij ∝ mu_ij^p * h_ij^q.

    Returns the renormalized matrix together with the number of rows whose
    weights underflowed to all zero; those rows fall back to their
    unweighted memberships. p=1, q=0 is the exact identity and returns an
    unmodified copy of the input.
    """
    if p < 0 or q < 0:
        raise ValueError("exponents must be non-negative")
    if p == 0 and q == 0:
        raise ValueError("p and q cannot both be zero")
    u = np.asarray(memberships, dtype=np.float64)
    h = np.asarray(spatial, dtype=np.float64)
    if u.shape != h.shape:
        raise ValueError("membership and spatial shapes differ")
    if p == 1.0 and q == 0.0:
        return u.copy(), 0
    weighted = u**p * h**q
    totals = weighted.sum(axis=1)
    dead = totals == 0.0
    fallbacks = int(dead.sum())
    out = np.empty_like(u)
    good = ~dead
    out[good] = weighted[good] / totals[good][:, None]
    if fallbacks:
        out[dead] = u[dead]
    return out, fallbacks
