# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled brute-force neighbor and voxel-grid kernels.

Float semantics must match ``_fallback`` exactly: squared distances
accumulate as dx*dx + dy*dy + dz*dz in that order, voxel indices come from
floor(p / voxel) per axis, and per-voxel sums accumulate in input order.
Ties in nearest-neighbor searches resolve to the lowest index (strict
less-than updates while scanning in ascending order).
"""

from cython.operator cimport dereference as deref
from libc.math cimport INFINITY, floor
from libcpp.unordered_map cimport unordered_map

import numpy as np

cimport numpy as cnp

cnp.import_array()

# Voxel indices are packed three-per-int64 with 21 bits each.
cdef long long VOXEL_OFF = 1 << 20


def nn_directed(double[:, ::1] a, double[:, ::1] b):
    """Index and squared distance of the nearest row of ``b`` for each row of ``a``."""
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t m = b.shape[0]
    idx_arr = np.empty(n, dtype=np.int64)
    d2_arr = np.empty(n, dtype=np.float64)
    cdef cnp.int64_t[::1] idx = idx_arr
    cdef double[::1] d2 = d2_arr
    cdef Py_ssize_t i, j, best_j
    cdef double ax, ay, az, dx, dy, dz, d, best
    for i in range(n):
        ax = a[i, 0]
        ay = a[i, 1]
        az = a[i, 2]
        best = INFINITY
        best_j = -1
        for j in range(m):
            dx = ax - b[j, 0]
            dy = ay - b[j, 1]
            dz = az - b[j, 2]
            d = dx * dx + dy * dy + dz * dz
            if d < best:
                best = d
                best_j = j
        idx[i] = best_j
        d2[i] = best
    return idx_arr, d2_arr


def nn_mutual(double[:, ::1] a, double[:, ::1] b):
    """Nearest-neighbor indices and squared distances in both directions, one pass."""
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t m = b.shape[0]
    idx_ab_arr = np.empty(n, dtype=np.int64)
    d2_ab_arr = np.empty(n, dtype=np.float64)
    idx_ba_arr = np.full(m, -1, dtype=np.int64)
    d2_ba_arr = np.full(m, np.inf, dtype=np.float64)
    cdef cnp.int64_t[::1] idx_ab = idx_ab_arr
    cdef double[::1] d2_ab = d2_ab_arr
    cdef cnp.int64_t[::1] idx_ba = idx_ba_arr
    cdef double[::1] d2_ba = d2_ba_arr
    cdef Py_ssize_t i, j, best_j
    cdef double ax, ay, az, dx, dy, dz, d, best
    for i in range(n):
        ax = a[i, 0]
        ay = a[i, 1]
        az = a[i, 2]
        best = INFINITY
        best_j = -1
        for j in range(m):
            dx = ax - b[j, 0]
            dy = ay - b[j, 1]
            dz = az - b[j, 2]
            d = dx * dx + dy * dy + dz * dz
            if d < best:
                best = d
                best_j = j
            if d < d2_ba[j]:
                d2_ba[j] = d
                idx_ba[j] = i
        idx_ab[i] = best_j
        d2_ab[i] = best
    return idx_ab_arr, d2_ab_arr, idx_ba_arr, d2_ba_arr


def voxel_downsample(double[:, ::1] pts, double voxel):
    """Per-voxel centroids in order of first appearance.

    Raises OverflowError when a voxel index falls outside the packed 21-bit
    range; the caller then reruns through the fallback path.
    """
    cdef Py_ssize_t n = pts.shape[0]
    sums_arr = np.zeros((n, 3), dtype=np.float64)
    counts_arr = np.zeros(n, dtype=np.int64)
    cdef double[:, ::1] sums = sums_arr
    cdef cnp.int64_t[::1] counts = counts_arr
    cdef unordered_map[long long, long long] slots
    cdef unordered_map[long long, long long].iterator it
    cdef Py_ssize_t i, k = 0
    cdef long long ix, iy, iz, key, slot
    for i in range(n):
        ix = <long long>floor(pts[i, 0] / voxel)
        iy = <long long>floor(pts[i, 1] / voxel)
        iz = <long long>floor(pts[i, 2] / voxel)
        if (ix < -VOXEL_OFF or ix >= VOXEL_OFF or
                iy < -VOXEL_OFF or iy >= VOXEL_OFF or
                iz < -VOXEL_OFF or iz >= VOXEL_OFF):
            raise OverflowError("voxel index outside packed 21-bit range")
        key = ((ix + VOXEL_OFF) << 42) | ((iy + VOXEL_OFF) << 21) | (iz + VOXEL_OFF)
        it = slots.find(key)
        if it == slots.end():
            slot = k
            slots[key] = k
            k += 1
        else:
            slot = deref(it).second
        sums[slot, 0] += pts[i, 0]
        sums[slot, 1] += pts[i, 1]
        sums[slot, 2] += pts[i, 2]
        counts[slot] += 1
    return sums_arr[:k] / counts_arr[:k, None]
