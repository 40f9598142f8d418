"""Frame-by-frame pipeline: ingest, vote, track, merge, export.

A dataset directory holds `frames/NNNNNN.*` rasters and sidecars plus
`intrinsics.txt` and optional `classes.txt` / `projector.txt`. Each frame's
masks are voted against its label raster, detections drive the tracker,
person-class masks are routed to the tracker's identities, and everything
else merges into the scene by label-gated overlap. Exports (PLY per object,
a JSON manifest, and a USD-ASCII scene) are byte-deterministic for a given
(dataset, config) pair: nothing in them depends on wall-clock or filesystem
iteration order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import dataio
from .fusion import FusionParams, SceneModel, SegmentedCloud, merge_frame, merge_human
from .geometry import CameraIntrinsics, VoxelParams, backproject
from .semvote import LabelImage, MaskSet, combine, masks_from_instances, overlap_resolve
from .tracker import TrackState, step
from .usd_export import export_usda

MANIFEST_NAME = "scene_manifest.json"


@dataclass(frozen=True)
class FrameRecord:
    """Paths for one frame; only depth and pose are mandatory."""

    index: int
    depth_path: Path
    pose_path: Path
    labels_path: Path | None = None
    instances_path: Path | None = None
    mask_paths: tuple = ()
    detections_path: Path | None = None
    timestamp: float | None = None


@dataclass(frozen=True)
class PipelineConfig:
    """Validated run configuration; see from_dict for the JSON schema."""

    fusion: FusionParams = field(default_factory=FusionParams)
    tau: float | None = None
    memory_size: int = 8
    projector_path: str | None = None
    person_class_id: int | None = None
    unlabeled_id: int = 0
    enable_semvote: bool = True
    resolve_overlaps: bool = True
    enable_tracker: bool = True
    export_dir: str | None = None
    intrinsics: CameraIntrinsics | None = None

    @classmethod
    def from_dict(cls, cfg: dict) -> "PipelineConfig":
        known = {"fusion", "tracker", "semvote", "projector", "person_class_id",
                 "unlabeled_id", "export_dir", "intrinsics"}
        unknown = set(cfg) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")

        fus = dict(cfg.get("fusion", {}))
        fkeys = {"alpha", "correspondence_voxel_mm", "final_voxel_mm",
                 "correspondence_cutoff_mm", "use_labels"}
        if set(fus) - fkeys:
            raise ValueError(f"unknown fusion keys: {sorted(set(fus) - fkeys)}")
        voxels = VoxelParams(
            correspondence_voxel_mm=float(fus.get("correspondence_voxel_mm", 100.0)),
            final_voxel_mm=float(fus.get("final_voxel_mm", 50.0)))
        fusion = FusionParams(
            alpha=float(fus.get("alpha", 0.3)), voxels=voxels,
            correspondence_cutoff_mm=float(fus.get(
                "correspondence_cutoff_mm", 2 * voxels.correspondence_voxel_mm)),
            use_labels=bool(fus.get("use_labels", True)))

        trk = dict(cfg.get("tracker", {}))
        tkeys = {"enabled", "tau", "memory_size"}
        if set(trk) - tkeys:
            raise ValueError(f"unknown tracker keys: {sorted(set(trk) - tkeys)}")
        sem = dict(cfg.get("semvote", {}))
        skeys = {"enabled", "resolve_overlaps"}
        if set(sem) - skeys:
            raise ValueError(f"unknown semvote keys: {sorted(set(sem) - skeys)}")

        intr = None
        if "intrinsics" in cfg:
            ik = dict(cfg["intrinsics"])
            ikeys = {"fx", "fy", "cx", "cy", "width", "height"}
            if set(ik) - ikeys:
                raise ValueError(f"unknown intrinsics keys: {sorted(set(ik) - ikeys)}")
            intr = CameraIntrinsics(fx=float(ik["fx"]), fy=float(ik["fy"]),
                                    cx=float(ik["cx"]), cy=float(ik["cy"]),
                                    width=int(ik["width"]), height=int(ik["height"]))

        tau = trk.get("tau")
        return cls(fusion=fusion,
                   tau=None if tau is None else float(tau),
                   memory_size=int(trk.get("memory_size", 8)),
                   projector_path=cfg.get("projector"),
                   person_class_id=cfg.get("person_class_id"),
                   unlabeled_id=int(cfg.get("unlabeled_id", 0)),
                   enable_semvote=bool(sem.get("enabled", True)),
                   resolve_overlaps=bool(sem.get("resolve_overlaps", True)),
                   enable_tracker=bool(trk.get("enabled", True)),
                   export_dir=cfg.get("export_dir"),
                   intrinsics=intr)

    @classmethod
    def from_json(cls, path) -> "PipelineConfig":
        try:
            cfg = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ValueError(f"cannot read config {path}: {e}") from e
        if not isinstance(cfg, dict):
            raise ValueError(f"{path}: config must be a JSON object")
        return cls.from_dict(cfg)


def ingest(dataset_dir) -> list:
    """Scan a dataset directory into FrameRecords, sorted by frame index.

    Optional per-frame files (labels, instances, masks, detections) may be
    missing; the frames must exist and every present raster must match the
    depth raster's dimensions.
    """
    root = Path(dataset_dir)
    frames_dir = root / "frames"
    if not frames_dir.is_dir():
        raise ValueError(f"{root}: no frames/ directory")
    records = []
    for depth_path in sorted(frames_dir.glob("*.depth.png")):
        stem = depth_path.name.split(".")[0]
        try:
            index = int(stem)
        except ValueError:
            raise ValueError(f"{depth_path}: frame files must be named <index>.depth.png")
        pose_path = frames_dir / f"{stem}.pose.txt"
        if not pose_path.is_file():
            raise ValueError(f"frame {index}: missing pose file {pose_path}")

        def optional(suffix):
            p = frames_dir / f"{stem}.{suffix}"
            return p if p.is_file() else None

        labels = optional("labels.png")
        inst = optional("inst.png")
        masks = tuple(sorted(frames_dir.glob(f"{stem}.mask*.png")))
        dets = optional("det.txt")
        wh = dataio.raster_size(depth_path)
        for p in [labels, inst, *masks]:
            if p is not None and dataio.raster_size(p) != wh:
                raise ValueError(f"frame {index}: {p.name} is {dataio.raster_size(p)}, "
                                 f"depth is {wh}")
        timestamp = None
        tpath = optional("time.txt")
        if tpath is not None:
            try:
                timestamp = float(tpath.read_text().strip())
            except ValueError as e:
                raise ValueError(f"frame {index}: bad timestamp: {e}") from e
        records.append(FrameRecord(index, depth_path, pose_path, labels, inst,
                                   masks, dets, timestamp))
    if not records:
        raise ValueError(f"{root}: dataset has no frames")
    records.sort(key=lambda r: r.index)
    return records


@dataclass
class Dataset:
    root: Path
    records: list
    intrinsics: CameraIntrinsics
    class_names: dict | None
    projector_path: Path | None


def load_dataset(dataset_dir, config: PipelineConfig) -> Dataset:
    root = Path(dataset_dir)
    records = ingest(root)
    if config.intrinsics is not None:
        k = config.intrinsics
    elif (root / "intrinsics.txt").is_file():
        k = dataio.read_intrinsics(root / "intrinsics.txt")
    else:
        raise ValueError(f"{root}: no intrinsics.txt and none in the config")
    classes = None
    if (root / "classes.txt").is_file():
        classes = dataio.read_classes(root / "classes.txt")
    proj = root / "projector.txt"
    return Dataset(root, records, k, classes, proj if proj.is_file() else None)


def _bbox_of_mask(mask: np.ndarray) -> tuple:
    vs, us = np.nonzero(mask)
    return float(us.min()), float(vs.min()), float(us.max() + 1), float(vs.max() + 1)


def _bbox_iou(a, b) -> float:
    ix = max(0.0, min(a[2], b[2]) - max(a[0], b[0]))
    iy = max(0.0, min(a[3], b[3]) - max(a[1], b[1]))
    inter = ix * iy
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    return inter / (area_a + area_b - inter) if inter else 0.0


def _frame_semantics(rec: FrameRecord, labels: LabelImage | None,
                     config: PipelineConfig) -> list:
    """Per-object (class_id, mask) list for one frame.

    With voting enabled, masks (from mask files or the instance raster) are
    overlap-resolved and majority-voted against the label raster; masks that
    vote unlabeled carry no class to gate on and are dropped. With voting
    disabled, the label raster itself is split into one object per class.
    """
    masks = None
    if rec.instances_path is not None:
        masks = masks_from_instances(dataio.read_label_png(rec.instances_path))
    elif rec.mask_paths:
        masks = MaskSet(tuple(dataio.read_mask_png(p) for p in rec.mask_paths))

    if config.enable_semvote and masks is not None and labels is not None:
        if len(masks) == 0:
            return []
        if config.resolve_overlaps:
            masks = overlap_resolve(masks)
        voted = combine(labels, masks)
        return [(s.class_id, s.mask) for s in voted.instances
                if s.class_id != labels.unlabeled_id]
    if labels is not None:
        ids = [c for c in np.unique(labels.data).tolist() if c != labels.unlabeled_id]
        return [(c, labels.data == c) for c in ids]
    return []


def run_pipeline(config: PipelineConfig, dataset_dir, out_dir=None) -> SceneModel:
    """Run the full per-frame loop and optionally export the scene.

    Any input error is re-raised with the offending frame's index so dataset
    problems are directly actionable.
    """
    ds = load_dataset(dataset_dir, config)
    k = ds.intrinsics

    projector = None
    ppath = config.projector_path or ds.projector_path
    if ppath is not None:
        projector = dataio.read_projector(ppath)

    tracker_on = config.enable_tracker and any(
        r.detections_path is not None for r in ds.records)
    state = None
    if tracker_on:
        if config.tau is None:
            raise ValueError("dataset has detections but tracker.tau is not configured")
        state = TrackState(tau=config.tau, projector=projector,
                           memory_size=config.memory_size)

    scene = SceneModel(params=config.fusion)
    reset_frames = []
    for rec in ds.records:
        try:
            _run_frame(rec, scene, state, k, config, reset_frames, tracker_on)
        except (ValueError, OSError) as e:
            raise ValueError(f"frame {rec.index}: {e}") from e

    if out_dir is not None:
        export_scene(scene, out_dir, ds.class_names, reset_frames)
    return scene


def _run_frame(rec: FrameRecord, scene: SceneModel, state: TrackState | None,
               k: CameraIntrinsics, config: PipelineConfig, reset_frames: list,
               tracker_on: bool):
    depth = dataio.read_depth_png(rec.depth_path)
    if (depth.height, depth.width) != (k.height, k.width):
        raise ValueError(f"depth is {depth.width}x{depth.height}, "
                         f"intrinsics expect {k.width}x{k.height}")
    pose = dataio.read_pose(rec.pose_path)
    labels = None
    if rec.labels_path is not None:
        labels = LabelImage(dataio.read_label_png(rec.labels_path),
                            unlabeled_id=config.unlabeled_id)
    objects = _frame_semantics(rec, labels, config)
    no_sources = (labels is None and rec.instances_path is None and not rec.mask_paths)
    if no_sources:
        if config.fusion.use_labels:
            raise ValueError("frame has no labels.png, inst.png, or mask files; "
                             "label-gated fusion needs per-object classes "
                             "(rerun with fusion.use_labels=false for raw merging)")
        # ungated fallback: the whole frame as one unlabeled cloud
        objects = [(config.unlabeled_id, depth.data > 0)]

    track_of_det = {}
    detections = []
    if tracker_on and rec.detections_path is not None:
        detections = dataio.read_detections(rec.detections_path)
        bad = [d for d in detections if d.frame_index != rec.index]
        if bad:
            raise ValueError(f"detection frame index {bad[0].frame_index} "
                             f"does not match frame {rec.index}")
        _, assignment, reset = step(state, detections)
        track_of_det = dict(assignment.pairs)
        if reset:
            reset_frames.append(rec.index)

    humans = []  # (track_id, SegmentedCloud)
    statics = []
    claimed = set()
    person = config.person_class_id
    fine = config.fusion.voxels.final_voxel_mm
    for cid, mask in objects:
        raw = backproject(depth, k, mask)
        if raw.shape[0] == 0:
            continue  # mask covers only invalid depth
        cloud = SegmentedCloud.from_raw(raw, cid, -1, fine)
        if person is not None and cid == person and detections:
            mb = _bbox_of_mask(mask)
            best = max(((_bbox_iou(mb, d.bbox), i) for i, d in enumerate(detections)
                        if i not in claimed), default=(0.0, -1))
            if best[0] > 0.25:
                claimed.add(best[1])
                humans.append((track_of_det[best[1]], cloud))
            # person masks with no matching detection are transient: dropped
            continue
        statics.append(cloud)

    merge_frame(scene, statics, pose)
    for track_id, cloud in humans:
        merge_human(scene, cloud, track_id, pose)


def export_scene(scene: SceneModel, out_dir, class_names: dict | None = None,
                 reset_frames: list | None = None):
    """Write per-object PLYs, the JSON manifest, and the USD scene.

    On any failure the partially written files are removed so a bad export
    never looks like a finished one.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = class_names or {}
    created = []
    try:
        for o in sorted(scene.objects, key=lambda o: o.instance_id):
            p = out / f"obj_{o.instance_id}.ply"
            dataio.write_ply(p, o.points)
            created.append(p)
        human_of = {iid: tid for tid, iid in scene.human_instances.items()}
        manifest = {
            "frame_count": scene.frame_count,
            "fusion_params": {
                "alpha": scene.params.alpha,
                "correspondence_voxel_mm": scene.params.voxels.correspondence_voxel_mm,
                "final_voxel_mm": scene.params.voxels.final_voxel_mm,
                "correspondence_cutoff_mm": scene.params.correspondence_cutoff_mm,
                "use_labels": scene.params.use_labels,
            },
            "objects": [{
                "instance_id": o.instance_id,
                "class_label": o.class_label,
                "class_name": names.get(o.class_label),
                "point_count": int(o.points.shape[0]),
                "frame_last_updated": o.last_updated_frame,
                **({"human_track_id": human_of[o.instance_id]}
                   if o.instance_id in human_of else {}),
            } for o in sorted(scene.objects, key=lambda o: o.instance_id)],
            "stats": [{
                "frame": s.frame_index,
                "scene_points": s.scene_points,
                "frame_points": s.frame_points,
                "pairs_evaluated": s.pairs_evaluated,
                "computations_with_labels": s.with_labels,
                "computations_without_labels": s.without_labels,
            } for s in scene.stats],
            "reset_frames": reset_frames or [],
        }
        mp = out / MANIFEST_NAME
        mp.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        created.append(mp)
        up = out / "scene.usda"
        export_usda(scene, up, names)
        created.append(up)
    except BaseException:
        for p in created:
            p.unlink(missing_ok=True)
        raise
