"""Pure-NumPy implementations of the neighbor and voxel kernels.

Semantics mirror the compiled core bit for bit: squared distances are
(a-b)**2 summed x, y, z; voxel indices are floor(p / voxel); per-voxel sums
accumulate in input order (np.bincount iterates sequentially); ties resolve
to the lowest index.
"""

import numpy as np

# Rough cap on elements of the pairwise distance block held in memory.
_CHUNK_ELEMS = 4_000_000

_VOXEL_OFF = 1 << 20


def nn_directed(a, b):
    n, m = a.shape[0], b.shape[0]
    idx = np.empty(n, dtype=np.int64)
    d2 = np.empty(n, dtype=np.float64)
    if n == 0 or m == 0:
        return np.full(n, -1, dtype=np.int64), np.full(n, np.inf)
    step = max(1, _CHUNK_ELEMS // m)
    for s in range(0, n, step):
        e = min(n, s + step)
        diff = a[s:e, None, :] - b[None, :, :]
        dist = (diff * diff).sum(axis=2)
        rows = dist.argmin(axis=1)
        idx[s:e] = rows
        d2[s:e] = dist[np.arange(e - s), rows]
    return idx, d2


def nn_mutual(a, b):
    n, m = a.shape[0], b.shape[0]
    idx_ab = np.empty(n, dtype=np.int64)
    d2_ab = np.empty(n, dtype=np.float64)
    idx_ba = np.full(m, -1, dtype=np.int64)
    d2_ba = np.full(m, np.inf)
    if n == 0 or m == 0:
        return (np.full(n, -1, dtype=np.int64), np.full(n, np.inf),
                idx_ba, d2_ba)
    step = max(1, _CHUNK_ELEMS // m)
    for s in range(0, n, step):
        e = min(n, s + step)
        diff = a[s:e, None, :] - b[None, :, :]
        dist = (diff * diff).sum(axis=2)
        rows = dist.argmin(axis=1)
        idx_ab[s:e] = rows
        d2_ab[s:e] = dist[np.arange(e - s), rows]
        col_min = dist.min(axis=0)
        col_arg = dist.argmin(axis=0)
        better = col_min < d2_ba
        d2_ba[better] = col_min[better]
        idx_ba[better] = col_arg[better] + s
    return idx_ab, d2_ab, idx_ba, d2_ba


def voxel_downsample(points, voxel):
    n = points.shape[0]
    if n == 0:
        return np.empty((0, 3), dtype=np.float64)
    ijk = np.floor(points / voxel).astype(np.int64)
    if ijk.min() < -_VOXEL_OFF or ijk.max() >= _VOXEL_OFF:
        return _voxel_downsample_bigrange(points, ijk)
    keys = (((ijk[:, 0] + _VOXEL_OFF) << 42)
            | ((ijk[:, 1] + _VOXEL_OFF) << 21)
            | (ijk[:, 2] + _VOXEL_OFF))
    _, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
    k = first.shape[0]
    sums = np.empty((k, 3), dtype=np.float64)
    for c in range(3):
        sums[:, c] = np.bincount(inverse, weights=points[:, c], minlength=k)
    counts = np.bincount(inverse, minlength=k)
    centroids = sums / counts[:, None]
    order = np.argsort(first, kind="stable")
    return centroids[order]


def _voxel_downsample_bigrange(points, ijk):
    # Coordinates too large for key packing; plain dict accumulation.
    acc = {}
    for p, key in zip(points, map(tuple, ijk)):
        slot = acc.get(key)
        if slot is None:
            acc[key] = [p[0], p[1], p[2], 1]
        else:
            slot[0] += p[0]
            slot[1] += p[1]
            slot[2] += p[2]
            slot[3] += 1
    out = np.empty((len(acc), 3), dtype=np.float64)
    for row, (sx, sy, sz, c) in enumerate(acc.values()):
        out[row, 0] = sx / c
        out[row, 1] = sy / c
        out[row, 2] = sz / c
    return out
