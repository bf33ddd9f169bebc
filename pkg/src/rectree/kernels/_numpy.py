"""Numpy implementations of the hot kernels.

These are the pure-Python (no compiled extension) fallback.  The compiled
backend in ``_core.pyx`` implements the same four functions with identical
signatures; ``rectree.kernels`` picks one at import time.

Conventions shared by both backends:

* points are C-contiguous float64 arrays of shape (n, dim) with every
  coordinate in [0, 1);
* a cell at depth j is addressed by the bit-interleaved (Morton) code of
  its lattice index, which requires depth * dim <= 62 so codes fit in a
  signed 64-bit integer;
* the code of the enclosing cell at depth j - 1 is ``code >> dim``.
"""

import numpy as np

BACKEND_NAME = "python"


def morton_encode(points, depth):
    """Morton codes of the depth-``depth`` dyadic cells containing each point.

    Multiplying by 2**depth is exact in binary floating point, so the
    lattice index is exactly floor(x * 2**depth) with the half-open cell
    convention.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    n, dim = points.shape
    if depth * dim > 62:
        raise ValueError(f"depth {depth} with dim {dim} overflows 62-bit Morton codes")
    idx = np.floor(points * np.float64(2.0**depth)).astype(np.int64)
    codes = np.zeros(n, dtype=np.int64)
    for b in range(depth):
        for k in range(dim):
            codes |= ((idx[:, k] >> b) & 1) << (b * dim + k)
    return codes


def morton_decode(codes, depth, dim):
    """Inverse of :func:`morton_encode`: codes -> (m, dim) lattice indices."""
    codes = np.asarray(codes, dtype=np.int64)
    idx = np.zeros((codes.shape[0], dim), dtype=np.int64)
    for b in range(depth):
        for k in range(dim):
            idx[:, k] |= ((codes >> (b * dim + k)) & 1) << b
    return idx


def group_moments(points, starts):
    """Per-group count, mean and scatter for contiguous groups of rows.

    ``starts`` holds the first row of each group; groups partition
    ``points`` (rows already ordered by group).  Scatter is the sum of
    squared distances to the group mean, accumulated in a second pass so
    the result does not suffer the cancellation of a sum-of-squares
    update.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    starts = np.asarray(starts, dtype=np.int64)
    n = points.shape[0]
    counts = np.diff(np.concatenate([starts, [n]]))
    sums = np.add.reduceat(points, starts, axis=0)
    means = sums / counts[:, None]
    owner = np.repeat(np.arange(starts.shape[0]), counts)
    sq = ((points - means[owner]) ** 2).sum(axis=1)
    scatters = np.add.reduceat(sq, starts)
    # reduceat on a length-1 slice returns the element itself; still fine.
    return counts, means, scatters


def nearest_centers(points, centers):
    """Index of the nearest center per point and the squared distance.

    Ties break toward the lowest center index (argmin semantics).
    Works in blocks to bound the (block, k) temporary.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    centers = np.ascontiguousarray(centers, dtype=np.float64)
    n = points.shape[0]
    labels = np.empty(n, dtype=np.int64)
    sqd = np.empty(n, dtype=np.float64)
    block = max(1, min(n, 1 << 22) // max(1, centers.shape[0]))
    for lo in range(0, n, block):
        hi = min(n, lo + block)
        d2 = ((points[lo:hi, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        labels[lo:hi] = np.argmin(d2, axis=1)
        sqd[lo:hi] = d2[np.arange(hi - lo), labels[lo:hi]]
    return labels, sqd
