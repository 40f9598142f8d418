"""Hot-loop kernels: compiled core with a pure-NumPy fallback.

The Cython extension handles the O(n*m) correspondence searches and the
voxel-grid accumulation that dominate fusion runtime. Importing it can fail
(extension not built for this interpreter), in which case the NumPy
implementations take over transparently. Set SEMSCENE_PURE=1 to force the
fallback; both paths return bit-identical results.
"""

import os

import numpy as np

from . import _fallback

try:
    from . import _core
except ImportError:
    _core = None

HAVE_COMPILED = _core is not None

_active = _core if HAVE_COMPILED and os.environ.get("SEMSCENE_PURE") != "1" else _fallback


def backend_name():
    return "compiled" if _active is _core else "numpy"


def _prep(points):
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"expected an (n, 3) point array, got shape {pts.shape}")
    return pts


def nn_directed(a, b):
    """For each point of ``a``: (index, squared distance) of its nearest point in ``b``."""
    return _active.nn_directed(_prep(a), _prep(b))


def nn_mutual(a, b):
    """Nearest neighbors of ``a`` in ``b`` and of ``b`` in ``a`` in one pass."""
    return _active.nn_mutual(_prep(a), _prep(b))


def voxel_downsample(points, voxel_mm):
    """Centroid per occupied voxel, in order of first appearance."""
    pts = _prep(points)
    if _active is not _fallback:
        try:
            return _active.voxel_downsample(pts, float(voxel_mm))
        except OverflowError:
            pass
    return _fallback.voxel_downsample(pts, float(voxel_mm))
