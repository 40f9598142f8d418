"""Compiled and fallback kernels must agree bit for bit."""

import numpy as np
import pytest

from semscene import kernels
from semscene.kernels import _fallback

from oracles import brute_mutual_pairs, voxel_centroids_dict

HAVE_COMPILED = kernels.HAVE_COMPILED


def clouds(rng, n, m, scale=1000.0):
    return (rng.uniform(-scale, scale, (n, 3)), rng.uniform(-scale, scale, (m, 3)))


def test_backend_reports_a_name():
    assert kernels.backend_name() in ("compiled", "numpy")


@pytest.mark.skipif(not HAVE_COMPILED, reason="compiled kernels unavailable")
def test_nn_directed_matches_fallback_bitwise():
    rng = np.random.default_rng(11)
    for n, m in [(1, 1), (7, 3), (200, 311), (513, 64)]:
        a, b = clouds(rng, n, m)
        ic, dc = kernels._core.nn_directed(a, b)
        ip, dp = _fallback.nn_directed(a, b)
        assert np.array_equal(ic, ip)
        assert np.array_equal(dc, dp)  # bitwise, not approx


@pytest.mark.skipif(not HAVE_COMPILED, reason="compiled kernels unavailable")
def test_nn_mutual_matches_fallback_bitwise():
    rng = np.random.default_rng(12)
    for n, m in [(5, 5), (123, 456), (300, 17)]:
        a, b = clouds(rng, n, m)
        outs_c = kernels._core.nn_mutual(a, b)
        outs_p = _fallback.nn_mutual(a, b)
        for xc, xp in zip(outs_c, outs_p):
            assert np.array_equal(xc, xp)


@pytest.mark.skipif(not HAVE_COMPILED, reason="compiled kernels unavailable")
def test_voxel_matches_fallback_bitwise():
    rng = np.random.default_rng(13)
    for n in [1, 50, 4096]:
        pts = rng.uniform(-5000, 5000, (n, 3))
        vc = kernels._core.voxel_downsample(pts, 75.0)
        vp = _fallback.voxel_downsample(pts, 75.0)
        assert np.array_equal(vc, vp)


def test_nn_ties_break_to_lowest_index():
    a = np.array([[0.0, 0.0, 0.0]])
    b = np.array([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
    idx, d2 = kernels.nn_directed(a, b)
    assert idx[0] == 0
    assert d2[0] == 1.0


def test_fallback_chunking_boundary():
    # force several chunks through the pure path and compare with one-shot
    rng = np.random.default_rng(14)
    a, b = clouds(rng, 700, 900)
    old = _fallback._CHUNK_ELEMS
    try:
        _fallback._CHUNK_ELEMS = 10_000  # ~dozens of chunks
        chunked = _fallback.nn_mutual(a, b)
    finally:
        _fallback._CHUNK_ELEMS = old
    whole = _fallback.nn_mutual(a, b)
    for xc, xw in zip(chunked, whole):
        assert np.array_equal(xc, xw)


def test_voxel_against_dict_oracle():
    rng = np.random.default_rng(15)
    for _ in range(25):
        pts = rng.uniform(-2000, 2000, (rng.integers(1, 500), 3))
        voxel = float(rng.uniform(10, 300))
        got = kernels.voxel_downsample(pts, voxel)
        want = voxel_centroids_dict(pts, voxel)
        assert np.array_equal(got, want)


def test_voxel_negative_coordinates_use_true_floor():
    pts = np.array([[-1.0, -1.0, -1.0], [-99.0, -99.0, -99.0]])
    out = kernels.voxel_downsample(pts, 100.0)
    # both live in voxel (-1,-1,-1); centroid is their mean
    assert out.shape == (1, 3)
    assert np.allclose(out[0], [-50.0, -50.0, -50.0])


def test_voxel_big_coordinates_fall_back_to_dict_path():
    pts = np.array([[3e9, 0.0, 0.0], [3e9 + 1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    out = kernels.voxel_downsample(pts, 100.0)
    want = voxel_centroids_dict(pts, 100.0)
    assert np.array_equal(out, want)


def test_empty_inputs():
    e = np.empty((0, 3))
    assert kernels.voxel_downsample(e, 50.0).shape == (0, 3)
    idx, d2 = kernels.nn_directed(e, np.array([[1.0, 2.0, 3.0]]))
    assert idx.shape == (0,) and d2.shape == (0,)


def test_mutual_matches_brute_oracle():
    rng = np.random.default_rng(16)
    for _ in range(30):
        a, b = clouds(rng, int(rng.integers(1, 60)), int(rng.integers(1, 60)), 300.0)
        idx_ab, d2_ab, idx_ba, d2_ba = kernels.nn_mutual(a, b)
        pairs = [(i, int(idx_ab[i])) for i in range(len(a))
                 if idx_ba[idx_ab[i]] == i and d2_ab[i] <= 200.0 ** 2]
        assert pairs == brute_mutual_pairs(a, b, 200.0)
