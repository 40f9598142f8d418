"""Fuse pixel-wise class labels with binary masks by per-mask majority voting.

A classification raster is usually noisy at object boundaries while binary
masks from a mask branch (or an instance-id raster) are sharp but unlabeled.
``combine`` gives every mask the class that the raster votes for under it and
emits both per-mask entries and per-class union rasters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MASK_SOURCES = ("mask_branch", "instance")


@dataclass(frozen=True)
class LabelImage:
    """Raster of non-negative class ids; ``unlabeled_id`` marks no-vote pixels."""

    data: np.ndarray
    unlabeled_id: int = 0
    class_names: dict | None = None

    def __post_init__(self):
        d = np.asarray(self.data)
        if d.ndim != 2:
            raise ValueError(f"label raster must be 2-D, got shape {d.shape}")
        if not np.issubdtype(d.dtype, np.integer):
            raise ValueError("label raster must hold integers")
        if d.size and d.min() < 0:
            raise ValueError("class ids must be non-negative")
        object.__setattr__(self, "data", d)
        if self.class_names is not None:
            present = set(np.unique(d).tolist())
            present.discard(self.unlabeled_id)
            unknown = present - set(self.class_names)
            if unknown:
                raise ValueError(f"class ids missing from the name table: {sorted(unknown)}")

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class MaskSet:
    """Ordered binary masks sharing one raster size; each mask is nonempty."""

    masks: tuple
    source: str = "mask_branch"

    def __post_init__(self):
        if self.source not in MASK_SOURCES:
            raise ValueError(f"source must be one of {MASK_SOURCES}")
        cleaned = []
        shape = None
        for i, m in enumerate(self.masks):
            m = np.asarray(m, dtype=bool)
            if m.ndim != 2:
                raise ValueError(f"mask {i} must be 2-D, got shape {m.shape}")
            if shape is None:
                shape = m.shape
            elif m.shape != shape:
                raise ValueError(f"mask {i} shape {m.shape} differs from {shape}")
            if not m.any():
                raise ValueError(f"mask {i} has no true pixels")
            cleaned.append(m)
        object.__setattr__(self, "masks", tuple(cleaned))

    def __len__(self) -> int:
        return len(self.masks)

    def __iter__(self):
        return iter(self.masks)


def masks_from_instances(instances, background_id: int = 0) -> MaskSet:
    """One mask per distinct non-background id in an instance raster, id ascending."""
    inst = np.asarray(instances)
    if inst.ndim != 2:
        raise ValueError(f"instance raster must be 2-D, got shape {inst.shape}")
    ids = np.unique(inst)
    ids = ids[ids != background_id]
    return MaskSet(tuple(inst == i for i in ids), source="instance")


@dataclass(frozen=True)
class SemanticMask:
    """A binary raster with its voted class and the vote's support."""

    mask: np.ndarray
    class_id: int
    vote_fraction: float


@dataclass(frozen=True)
class SemanticMaskSet:
    """Voting output: one entry per input mask plus one union per final class."""

    instances: tuple = ()
    class_unions: tuple = ()

    def __iter__(self):
        return iter(self.instances)


def majority_label(labels: LabelImage, mask) -> tuple[int, float]:
    """Most frequent class id among labeled pixels under the mask.

    Unlabeled pixels cast no vote. Returns (class_id, winner count / labeled
    count); ties break to the lowest class id. A mask covering only unlabeled
    pixels returns (unlabeled_id, 0.0).
    """
    m = np.asarray(mask, dtype=bool)
    if m.shape != labels.data.shape:
        raise ValueError(f"mask shape {m.shape} does not match labels {labels.data.shape}")
    if not m.any():
        raise ValueError("mask has no true pixels")
    votes = labels.data[m]
    votes = votes[votes != labels.unlabeled_id]
    if votes.size == 0:
        return labels.unlabeled_id, 0.0
    ids, counts = np.unique(votes, return_counts=True)
    best = int(np.argmax(counts))  # first max; ids are ascending, so lowest id wins ties
    return int(ids[best]), float(counts[best]) / votes.size


def combine(labels: LabelImage, masks: MaskSet) -> SemanticMaskSet:
    """Assign each mask its majority label and build per-class union rasters.

    ``instances`` keeps the input mask order. ``class_unions`` holds, per final
    class id in ascending order, the logical-or of that class's masks; its
    vote_fraction pools the member tallies (total winning votes over total
    labeled pixels).
    """
    instances = []
    for m in masks:
        cid, frac = majority_label(labels, m)
        instances.append(SemanticMask(m.copy(), cid, frac))

    unions = []
    for cid in sorted({s.class_id for s in instances}):
        members = [s.mask for s in instances if s.class_id == cid]
        union = np.logical_or.reduce(members)
        votes = labels.data[union]
        votes = votes[votes != labels.unlabeled_id]
        frac = float((votes == cid).sum()) / votes.size if votes.size else 0.0
        unions.append(SemanticMask(union, cid, frac))
    return SemanticMaskSet(tuple(instances), tuple(unions))


def overlap_resolve(masks: MaskSet) -> MaskSet:
    """Make masks pairwise disjoint: contested pixels go to the smallest mask.

    Area ties go to the earlier mask. Masks left empty are dropped; survivor
    order matches the input.
    """
    if len(masks) == 0:
        return masks
    shape = masks.masks[0].shape
    areas = [int(m.sum()) for m in masks]
    owner = np.full(shape, -1, dtype=np.int64)
    # Paint large-to-small so the smallest claimant lands last; among equal
    # areas paint the higher index first so the lower index wins.
    for i in sorted(range(len(masks)), key=lambda i: (-areas[i], -i)):
        owner[masks.masks[i]] = i
    kept = []
    for i, m in enumerate(masks):
        resolved = m & (owner == i)
        if resolved.any():
            kept.append(resolved)
    return MaskSet(tuple(kept), source=masks.source)
