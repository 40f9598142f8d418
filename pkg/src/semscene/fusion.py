"""Semantics-guided point-cloud merging into a growing scene model.

Each frame contributes labeled, segmented clouds in camera coordinates. After
transforming them to the world frame, every (scene object, frame cloud) pair
with equal class labels is scored by Eq.-style overlap: the fraction of
mutually closest point pairs within a cutoff, computed on coarse voxel
downsamples, divided by the smaller cloud's size. Pairs above alpha merge;
merged objects keep their accumulated raw points and re-downsample them at
the fine storage voxel. Label gating is what makes this cheap: distance
computations are only spent on label-equal pairs, and the per-frame counters
record how many were spent versus the ungated all-pairs product.

Human clouds are handled separately (``merge_human``): they are keyed by
track id and never take part in overlap scoring, so a moving person cannot
be fused into static geometry.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Pose, VoxelParams, as_points, transform, voxel_downsample
from . import kernels


@dataclass(frozen=True)
class FusionParams:
    """Merge thresholds and voxel sizes.

    alpha and the correspondence cutoff are operating-point choices, not
    measured constants; the defaults are sensible for room-scale mm data
    (cutoff = 2x the correspondence voxel) but are deliberately config-exposed.
    use_labels=False disables label gating so the all-pairs baseline can be
    run and timed.
    """

    alpha: float = 0.3
    voxels: VoxelParams = field(default_factory=VoxelParams)
    correspondence_cutoff_mm: float = 200.0
    use_labels: bool = True

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must be in (0, 1)")
        if self.correspondence_cutoff_mm <= 0:
            raise ValueError("correspondence cutoff must be positive")


@dataclass(frozen=True)
class SegmentedCloud:
    """One labeled object: fine-voxel points plus the raw accumulation behind them."""

    points: np.ndarray
    class_label: int
    instance_id: int
    raw_points: np.ndarray
    last_updated_frame: int = 0

    def __post_init__(self):
        object.__setattr__(self, "points", as_points(self.points))
        object.__setattr__(self, "raw_points", as_points(self.raw_points))
        if self.points.shape[0] == 0:
            raise ValueError("segmented cloud must have at least one point")

    @classmethod
    def from_raw(cls, raw_points, class_label: int, instance_id: int,
                 final_voxel_mm: float = 50.0, last_updated_frame: int = 0) -> "SegmentedCloud":
        raw = as_points(raw_points)
        if raw.shape[0] == 0:
            raise ValueError("cannot build a segmented cloud from zero points")
        pts = voxel_downsample(raw, final_voxel_mm)
        return cls(pts, int(class_label), int(instance_id), raw, last_updated_frame)


@dataclass(frozen=True)
class CorrespondenceMap:
    """Mutually-closest point pairs between two clouds, within a cutoff."""

    pairs: tuple
    cutoff_mm: float

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class FrameStats:
    """Distance-computation accounting for one merged frame.

    Point counts are taken on the correspondence-voxel downsamples, the
    resolution at which overlap is actually evaluated. without_labels is the
    pooled all-pairs product (total scene points x total frame points);
    with_labels sums only over label-equal pairs.
    """

    frame_index: int
    scene_points: int
    frame_points: int
    pairs_evaluated: int
    with_labels: int
    without_labels: int

    @property
    def reduction_factor(self) -> float:
        if self.with_labels == 0:
            return float("inf") if self.without_labels else 1.0
        return self.without_labels / self.with_labels


@dataclass
class SceneModel:
    """The growing scene: labeled objects, per-frame stats, id bookkeeping."""

    params: FusionParams = field(default_factory=FusionParams)
    objects: list = field(default_factory=list)
    frame_count: int = 0
    stats: list = field(default_factory=list)
    next_instance_id: int = 0
    human_instances: dict = field(default_factory=dict)  # track_id -> instance_id

    def static_objects(self) -> list:
        humans = set(self.human_instances.values())
        return [o for o in self.objects if o.instance_id not in humans]

    def _issue_id(self) -> int:
        i = self.next_instance_id
        self.next_instance_id += 1
        return i


def mutual_correspondences(a, b, cutoff_mm: float) -> CorrespondenceMap:
    """Pairs (i, j) where a[i] and b[j] are each other's nearest neighbor.

    A pair is kept only if its distance is <= cutoff_mm. Nearest-neighbor ties
    break to the lowest index, which makes the map deterministic.
    """
    pa, pb = as_points(a), as_points(b)
    if pa.shape[0] == 0 or pb.shape[0] == 0:
        raise ValueError("mutual correspondences require two nonempty clouds")
    if cutoff_mm <= 0:
        raise ValueError("cutoff must be positive")
    idx_ab, d2_ab, idx_ba, _ = kernels.nn_mutual(pa, pb)
    i = np.arange(pa.shape[0])
    j = idx_ab
    keep = (idx_ba[j] == i) & (d2_ab <= cutoff_mm * cutoff_mm)
    pairs = tuple((int(ii), int(jj)) for ii, jj in zip(i[keep], j[keep]))
    return CorrespondenceMap(pairs, float(cutoff_mm))


def overlap(a, b, cutoff_mm: float) -> float:
    """Overlap score |M| / min(|a|, |b|); always in [0, 1]."""
    pa, pb = as_points(a), as_points(b)
    m = mutual_correspondences(pa, pb, cutoff_mm)
    return len(m) / min(pa.shape[0], pb.shape[0])


def count_distance_computations(scene: SceneModel, frame_clouds, use_labels: bool) -> int:
    """Distance computations the overlap stage would spend on this frame.

    Clouds are counted at the correspondence voxel. Without labels every
    (scene object, frame cloud) pair is evaluated, which pools to
    total_scene_points x total_frame_points; with labels only label-equal
    pairs count.
    """
    voxel = scene.params.voxels.correspondence_voxel_mm
    s = [(o.class_label, voxel_downsample(o.points, voxel).shape[0])
         for o in scene.static_objects()]
    f = [(c.class_label, voxel_downsample(c.points, voxel).shape[0])
         for c in frame_clouds]
    if use_labels:
        return sum(ns * nf for ls, ns in s for lf, nf in f if ls == lf)
    return sum(ns for _, ns in s) * sum(nf for _, nf in f)


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def merge_frame(scene: SceneModel, frame_clouds, pose: Pose) -> SceneModel:
    """Fold one frame's static clouds into the scene; mutates and returns it.

    Frame clouds arrive in camera coordinates; ``pose`` maps camera to world.
    A frame cloud merges with every scene object it overlaps above alpha
    (label-equal pairs only when label gating is on), collapsing them all into
    one object that keeps the oldest instance id. Unmatched frame clouds
    become new objects. Every touched object's raw accumulation is
    re-downsampled at the fine voxel, so the points/raw_points relation holds
    after every frame.
    """
    params = scene.params
    fine = params.voxels.final_voxel_mm
    coarse = params.voxels.correspondence_voxel_mm
    frame_index = scene.frame_count

    world = []
    for fc in frame_clouds:
        raw_w = transform(fc.raw_points, pose)
        world.append(SegmentedCloud.from_raw(raw_w, fc.class_label, -1, fine, frame_index))

    statics = scene.static_objects()
    s100 = [voxel_downsample(o.points, coarse) for o in statics]
    f100 = [voxel_downsample(w.points, coarse) for w in world]
    total_s = sum(p.shape[0] for p in s100)
    total_f = sum(p.shape[0] for p in f100)
    with_labels = sum(p.shape[0] * q.shape[0]
                      for o, p in zip(statics, s100)
                      for w, q in zip(world, f100) if o.class_label == w.class_label)

    ns = len(statics)
    uf = _UnionFind(ns + len(world))
    evaluated = 0
    for i, o in enumerate(statics):
        for j, w in enumerate(world):
            if params.use_labels and o.class_label != w.class_label:
                continue
            evaluated += 1
            if overlap(s100[i], f100[j], params.correspondence_cutoff_mm) > params.alpha:
                uf.union(i, ns + j)

    groups: dict = {}
    for node in range(ns + len(world)):
        groups.setdefault(uf.find(node), []).append(node)

    humans = set(scene.human_instances.values())
    merged_objects = [o for o in scene.objects if o.instance_id in humans]
    for root in sorted(groups):
        nodes = groups[root]
        members_s = [statics[n] for n in nodes if n < ns]
        members_f = [world[n - ns] for n in nodes if n >= ns]
        if not members_f:
            merged_objects.extend(members_s)  # untouched scene objects pass through
            continue
        if members_s:
            members_s.sort(key=lambda o: o.instance_id)
            instance_id = members_s[0].instance_id
            label = members_s[0].class_label
        else:
            instance_id = scene._issue_id()
            label = members_f[0].class_label
        if params.use_labels:
            labels = {o.class_label for o in members_s} | {w.class_label for w in members_f}
            assert len(labels) == 1, f"label gating violated in merge group: {labels}"
        raw = np.concatenate([o.raw_points for o in members_s]
                             + [w.raw_points for w in members_f])
        merged_objects.append(SegmentedCloud.from_raw(raw, label, instance_id,
                                                      fine, frame_index))

    merged_objects.sort(key=lambda o: o.instance_id)
    scene.objects = merged_objects
    scene.next_instance_id = max([scene.next_instance_id]
                                 + [o.instance_id + 1 for o in merged_objects])
    scene.stats.append(FrameStats(frame_index, total_s, total_f, evaluated,
                                  with_labels, total_s * total_f))
    scene.frame_count += 1
    return scene


def merge_human(scene: SceneModel, cloud: SegmentedCloud, track_id: int,
                pose: Pose, frame_index: int | None = None) -> SceneModel:
    """Fold one tracked person's cloud into the scene, keyed by track id.

    No overlap scoring: the same track id always lands in the same object,
    and distinct track ids never fuse. Call after merge_frame for the frame
    (frame_index defaults to the frame merge_frame just committed).
    """
    if frame_index is None:
        frame_index = max(scene.frame_count - 1, 0)
    raw_w = transform(cloud.raw_points, pose)
    fine = scene.params.voxels.final_voxel_mm
    if track_id in scene.human_instances:
        iid = scene.human_instances[track_id]
        pos = next(k for k, o in enumerate(scene.objects) if o.instance_id == iid)
        raw = np.concatenate([scene.objects[pos].raw_points, raw_w])
        scene.objects[pos] = SegmentedCloud.from_raw(
            raw, scene.objects[pos].class_label, iid, fine, frame_index)
    else:
        iid = scene._issue_id()
        scene.human_instances[track_id] = iid
        scene.objects.append(SegmentedCloud.from_raw(
            raw_w, cloud.class_label, iid, fine, frame_index))
        scene.objects.sort(key=lambda o: o.instance_id)
    return scene
