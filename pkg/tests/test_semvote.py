import numpy as np
import pytest

from semscene.semvote import (LabelImage, MaskSet, combine, majority_label,
                              masks_from_instances, overlap_resolve)

from oracles import vote_histogram


def rect_mask(h, w, r0, r1, c0, c1):
    m = np.zeros((h, w), dtype=bool)
    m[r0:r1, c0:c1] = True
    return m


def test_label_image_validation():
    LabelImage(np.zeros((4, 4), dtype=np.int32))
    with pytest.raises(ValueError):
        LabelImage(np.zeros((4, 4)))  # floats
    with pytest.raises(ValueError):
        LabelImage(np.full((4, 4), -1, dtype=np.int32))
    with pytest.raises(ValueError):
        LabelImage(np.full((4, 4), 7, dtype=np.int32), class_names={1: "a"})
    LabelImage(np.full((4, 4), 7, dtype=np.int32), class_names={7: "chair"})


def test_mask_set_validation():
    with pytest.raises(ValueError):
        MaskSet((np.zeros((4, 4), dtype=bool),))  # empty mask
    with pytest.raises(ValueError):
        MaskSet((rect_mask(4, 4, 0, 2, 0, 2), rect_mask(5, 4, 0, 2, 0, 2)))
    with pytest.raises(ValueError):
        MaskSet((rect_mask(4, 4, 0, 2, 0, 2),), source="nonsense")


def test_majority_vote_examples():
    lab = LabelImage(np.array([[1, 1, 2, 0]], dtype=np.int32))
    full = np.ones((1, 4), dtype=bool)
    cid, frac = majority_label(lab, full)
    assert (cid, frac) == (1, pytest.approx(2 / 3))  # unlabeled pixel casts no vote

    uniform = LabelImage(np.full((2, 2), 7, dtype=np.int32))
    assert majority_label(uniform, np.ones((2, 2), dtype=bool)) == (7, 1.0)

    tie = LabelImage(np.array([[3, 3, 5, 5]], dtype=np.int32))
    cid, frac = majority_label(tie, np.ones((1, 4), dtype=bool))
    assert (cid, frac) == (3, 0.5)  # tie breaks to the lowest id

    only_unlabeled = LabelImage(np.zeros((2, 2), dtype=np.int32))
    assert majority_label(only_unlabeled, np.ones((2, 2), dtype=bool)) == (0, 0.0)


def test_majority_vote_rejects_bad_masks():
    lab = LabelImage(np.ones((2, 2), dtype=np.int32))
    with pytest.raises(ValueError):
        majority_label(lab, np.zeros((2, 2), dtype=bool))
    with pytest.raises(ValueError):
        majority_label(lab, np.ones((3, 3), dtype=bool))


def test_combine_region_vote_flips_minority():
    # a 4x4 raster, one mask over nine 1s and three 2s: all pixels vote 1
    data = np.zeros((4, 4), dtype=np.int32)
    data[:3, :3] = 1
    data[3, :3] = 2
    mask = np.ones((4, 4), dtype=bool)
    mask[:, 3] = False
    out = combine(LabelImage(data), MaskSet((mask,)))
    assert len(out.instances) == 1
    assert out.instances[0].class_id == 1
    assert out.instances[0].vote_fraction == pytest.approx(9 / 12)
    assert len(out.class_unions) == 1
    assert np.array_equal(out.class_unions[0].mask, mask)


def test_combine_unions_same_class():
    data = np.ones((4, 8), dtype=np.int32)
    m1 = rect_mask(4, 8, 0, 4, 0, 3)
    m2 = rect_mask(4, 8, 0, 4, 5, 8)
    out = combine(LabelImage(data), MaskSet((m1, m2)))
    assert len(out.instances) == 2
    assert len(out.class_unions) == 1
    assert np.array_equal(out.class_unions[0].mask, m1 | m2)


def test_combine_empty_mask_set():
    out = combine(LabelImage(np.ones((2, 2), dtype=np.int32)), MaskSet(()))
    assert out.instances == () and out.class_unions == ()


def test_combine_matches_histogram_oracle():
    rng = np.random.default_rng(21)
    for _ in range(50):
        data = rng.integers(0, 6, (32, 32)).astype(np.int32)
        masks = []
        for _ in range(6):
            r0, c0 = rng.integers(0, 28, 2)
            masks.append(rect_mask(32, 32, r0, r0 + rng.integers(2, 5),
                                   c0, c0 + rng.integers(2, 5)))
        ms = overlap_resolve(MaskSet(tuple(masks)))
        out = combine(LabelImage(data), ms)
        for sm, mask in zip(out.instances, ms):
            want_cid, want_frac = vote_histogram(data, mask)
            assert sm.class_id == want_cid
            assert sm.vote_fraction == pytest.approx(want_frac)


def test_combine_never_invents_classes():
    rng = np.random.default_rng(22)
    data = rng.integers(0, 4, (16, 16)).astype(np.int32)
    masks = MaskSet((rect_mask(16, 16, 0, 8, 0, 8), rect_mask(16, 16, 4, 12, 4, 12)))
    for sm in combine(LabelImage(data), masks).instances:
        present = set(np.unique(data[sm.mask]).tolist())
        assert sm.class_id in present or sm.class_id == 0


def test_combine_idempotent_on_own_output():
    rng = np.random.default_rng(23)
    data = rng.integers(0, 5, (24, 24)).astype(np.int32)
    masks = overlap_resolve(MaskSet(tuple(
        rect_mask(24, 24, r, r + 5, c, c + 5)
        for r, c in rng.integers(0, 19, (4, 2)))))
    first = combine(LabelImage(data), masks)
    relabeled = np.zeros_like(data)
    for u in first.class_unions:
        relabeled[u.mask] = u.class_id
    second = combine(LabelImage(relabeled), masks)
    for a, b in zip(first.instances, second.instances):
        assert a.class_id == b.class_id
        assert np.array_equal(a.mask, b.mask)
    for a, b in zip(first.class_unions, second.class_unions):
        assert a.class_id == b.class_id
        assert np.array_equal(a.mask, b.mask)


def test_combine_pass_through_on_constant_labels():
    data = np.full((8, 8), 4, dtype=np.int32)
    masks = MaskSet((rect_mask(8, 8, 0, 4, 0, 4), rect_mask(8, 8, 4, 8, 4, 8)))
    out = combine(LabelImage(data), masks)
    assert all(s.class_id == 4 and s.vote_fraction == 1.0 for s in out.instances)


def test_overlap_resolve_disjoint_unchanged():
    m1 = rect_mask(8, 8, 0, 3, 0, 3)
    m2 = rect_mask(8, 8, 4, 8, 4, 8)
    out = overlap_resolve(MaskSet((m1, m2)))
    assert np.array_equal(out.masks[0], m1)
    assert np.array_equal(out.masks[1], m2)


def test_overlap_resolve_small_mask_keeps_contested_pixels():
    big = rect_mask(8, 8, 0, 8, 0, 8)
    small = rect_mask(8, 8, 2, 4, 2, 4)
    out = overlap_resolve(MaskSet((big, small)))
    assert np.array_equal(out.masks[1], small)
    assert not (out.masks[0] & small).any()
    assert (out.masks[0] | out.masks[1]).sum() == 64


def test_overlap_resolve_pairwise_disjoint_property():
    rng = np.random.default_rng(24)
    for _ in range(100):
        masks = []
        for _ in range(rng.integers(1, 7)):
            r0, c0 = rng.integers(0, 12, 2)
            masks.append(rect_mask(16, 16, r0, r0 + rng.integers(1, 5),
                                   c0, c0 + rng.integers(1, 5)))
        out = overlap_resolve(MaskSet(tuple(masks)))
        stack = np.array([m.astype(int) for m in out.masks])
        assert stack.sum(axis=0).max() <= 1
        # no pixel lost: resolved union equals input union
        assert np.array_equal(stack.any(axis=0),
                              np.array([m for m in masks]).any(axis=0))


def test_overlap_resolve_drops_fully_shadowed_masks():
    small = rect_mask(8, 8, 2, 4, 2, 4)
    out = overlap_resolve(MaskSet((small, small.copy())))
    assert len(out) == 1  # equal area: earlier mask wins, the other is empty


def test_masks_from_instances():
    inst = np.array([[0, 1, 1], [2, 2, 0]], dtype=np.int32)
    ms = masks_from_instances(inst)
    assert len(ms) == 2 and ms.source == "instance"
    assert np.array_equal(ms.masks[0], inst == 1)
    assert np.array_equal(ms.masks[1], inst == 2)
