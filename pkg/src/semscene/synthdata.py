"""Deterministic synthetic RGB-D scene generation.

Rooms are built from analytic primitives (axis-aligned boxes, bounded
axis-aligned planes, spheres) and rendered by per-pixel ray casting, which
keeps the generator dependency-free and gives every output an exact
geometric oracle: each primitive knows its distance to any query point.
Depth noise follows the usual consumer-sensor approximation (Gaussian with
a quadratic-in-depth sigma, then quantization), followed by a hard maximum
range filter. Everything is keyed by counter-based RNG streams, so a
(spec, seed) pair always reproduces the same bytes.

Scripted tracking scenarios (subjects moving along bbox lanes, leaving and
re-entering) produce detection sequences with ground-truth subject ids for
scoring the tracker.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import CameraIntrinsics, DepthImage, Pose
from .semvote import LabelImage
from .tracker import Detection, PcaProjector, project_pointer

_EPS = 1e-9


@dataclass(frozen=True)
class Box:
    """Axis-aligned box given by its min and max corners (mm)."""

    lo: np.ndarray
    hi: np.ndarray
    class_label: int
    instance_id: int
    kind = "box"

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=np.float64).reshape(3)
        hi = np.asarray(self.hi, dtype=np.float64).reshape(3)
        if not (hi > lo).all():
            raise ValueError(f"box must have positive extent: lo={lo.tolist()} hi={hi.tolist()}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def ray_t(self, origin, dirs) -> np.ndarray:
        o = np.asarray(origin, dtype=np.float64)
        d = np.asarray(dirs, dtype=np.float64)
        inv = 1.0 / np.where(d == 0, 1e-30, d)
        t0 = (self.lo - o) * inv
        t1 = (self.hi - o) * inv
        tmin = np.minimum(t0, t1).max(axis=1)
        tmax = np.maximum(t0, t1).min(axis=1)
        t = np.where(tmin > _EPS, tmin, tmax)
        hit = (tmax >= tmin) & (t > _EPS)
        return np.where(hit, t, np.inf)

    def surface_distance(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=np.float64)
        outside = np.maximum(np.maximum(self.lo - p, p - self.hi), 0.0)
        d_out = np.sqrt((outside * outside).sum(axis=1))
        inside = np.minimum(p - self.lo, self.hi - p).min(axis=1)
        return np.where(d_out > 0, d_out, np.abs(inside))

    def sample_surface(self, spacing_mm: float) -> np.ndarray:
        faces = []
        for axis in range(3):
            a, b = [x for x in range(3) if x != axis]
            ga = np.arange(self.lo[a], self.hi[a] + spacing_mm / 2, spacing_mm)
            gb = np.arange(self.lo[b], self.hi[b] + spacing_mm / 2, spacing_mm)
            aa, bb = np.meshgrid(ga, gb, indexing="ij")
            for level in (self.lo[axis], self.hi[axis]):
                face = np.empty((aa.size, 3))
                face[:, axis] = level
                face[:, a] = aa.ravel()
                face[:, b] = bb.ravel()
                faces.append(face)
        return np.concatenate(faces)

    def to_dict(self) -> dict:
        return {"kind": "box", "lo": self.lo.tolist(), "hi": self.hi.tolist(),
                "label": self.class_label, "instance_id": self.instance_id}


@dataclass(frozen=True)
class Plane:
    """Bounded axis-aligned plane: normal along ``axis``, at ``level`` (mm).

    ``lo``/``hi`` bound the two remaining axes in ascending axis order.
    """

    axis: int
    level: float
    lo: np.ndarray
    hi: np.ndarray
    class_label: int
    instance_id: int
    kind = "plane"

    def __post_init__(self):
        if self.axis not in (0, 1, 2):
            raise ValueError("plane axis must be 0, 1, or 2")
        lo = np.asarray(self.lo, dtype=np.float64).reshape(2)
        hi = np.asarray(self.hi, dtype=np.float64).reshape(2)
        if not (hi > lo).all():
            raise ValueError(f"plane must have positive extent: lo={lo.tolist()} hi={hi.tolist()}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def _in_plane_axes(self) -> tuple:
        return tuple(a for a in range(3) if a != self.axis)

    def ray_t(self, origin, dirs) -> np.ndarray:
        o = np.asarray(origin, dtype=np.float64)
        d = np.asarray(dirs, dtype=np.float64)
        dn = d[:, self.axis]
        t = (self.level - o[self.axis]) / np.where(dn == 0, 1e-30, dn)
        hit = t > _EPS
        for k, a in enumerate(self._in_plane_axes):
            q = o[a] + t * d[:, a]
            hit &= (q >= self.lo[k]) & (q <= self.hi[k])
        return np.where(hit, t, np.inf)

    def surface_distance(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=np.float64)
        dn = p[:, self.axis] - self.level
        d2 = dn * dn
        for k, a in enumerate(self._in_plane_axes):
            excess = np.maximum(np.maximum(self.lo[k] - p[:, a], p[:, a] - self.hi[k]), 0.0)
            d2 = d2 + excess * excess
        return np.sqrt(d2)

    def sample_surface(self, spacing_mm: float) -> np.ndarray:
        ga = np.arange(self.lo[0], self.hi[0] + spacing_mm / 2, spacing_mm)
        gb = np.arange(self.lo[1], self.hi[1] + spacing_mm / 2, spacing_mm)
        aa, bb = np.meshgrid(ga, gb, indexing="ij")
        pts = np.empty((aa.size, 3))
        pts[:, self.axis] = self.level
        a, b = self._in_plane_axes
        pts[:, a] = aa.ravel()
        pts[:, b] = bb.ravel()
        return pts

    def to_dict(self) -> dict:
        return {"kind": "plane", "axis": self.axis, "level": self.level,
                "lo": self.lo.tolist(), "hi": self.hi.tolist(),
                "label": self.class_label, "instance_id": self.instance_id}


@dataclass(frozen=True)
class Sphere:
    center: np.ndarray
    radius: float
    class_label: int
    instance_id: int
    kind = "sphere"

    def __post_init__(self):
        c = np.asarray(self.center, dtype=np.float64).reshape(3)
        if self.radius <= 0:
            raise ValueError("sphere radius must be positive")
        object.__setattr__(self, "center", c)

    def ray_t(self, origin, dirs) -> np.ndarray:
        o = np.asarray(origin, dtype=np.float64)
        d = np.asarray(dirs, dtype=np.float64)
        oc = o - self.center
        a = (d * d).sum(axis=1)
        b = 2.0 * (d @ oc)
        c = oc @ oc - self.radius * self.radius
        disc = b * b - 4 * a * c
        sq = np.sqrt(np.maximum(disc, 0.0))
        t_near = (-b - sq) / (2 * a)
        t_far = (-b + sq) / (2 * a)
        t = np.where(t_near > _EPS, t_near, t_far)
        return np.where((disc >= 0) & (t > _EPS), t, np.inf)

    def surface_distance(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=np.float64)
        return np.abs(np.sqrt(((p - self.center) ** 2).sum(axis=1)) - self.radius)

    def sample_surface(self, spacing_mm: float) -> np.ndarray:
        n = max(16, int(np.ceil(4 * np.pi * self.radius ** 2 / spacing_mm ** 2)))
        i = np.arange(n)
        golden = np.pi * (3 - np.sqrt(5))
        y = 1 - 2 * (i + 0.5) / n
        r = np.sqrt(1 - y * y)
        theta = golden * i
        unit = np.column_stack([r * np.cos(theta), y, r * np.sin(theta)])
        return self.center + self.radius * unit

    def to_dict(self) -> dict:
        return {"kind": "sphere", "center": self.center.tolist(), "radius": self.radius,
                "label": self.class_label, "instance_id": self.instance_id}


# the primitive kinds share the ray_t / surface_distance / sample_surface /
# to_dict protocol; anything accepting a ScenePrimitive takes any of them
ScenePrimitive = Box | Plane | Sphere


def primitive_from_dict(d: dict):
    kinds = {"box", "plane", "sphere"}
    kind = d.get("kind")
    if kind not in kinds:
        raise ValueError(f"unknown primitive kind: {kind!r}")
    common = {"class_label": int(d["label"]), "instance_id": int(d["instance_id"])}
    known = {"box": {"kind", "lo", "hi", "label", "instance_id"},
             "plane": {"kind", "axis", "level", "lo", "hi", "label", "instance_id"},
             "sphere": {"kind", "center", "radius", "label", "instance_id"}}[kind]
    unknown = set(d) - known
    if unknown:
        raise ValueError(f"unknown primitive keys: {sorted(unknown)}")
    if kind == "box":
        return Box(d["lo"], d["hi"], **common)
    if kind == "plane":
        return Plane(int(d["axis"]), float(d["level"]), d["lo"], d["hi"], **common)
    return Sphere(d["center"], float(d["radius"]), **common)


def surface_distances(points, primitives) -> np.ndarray:
    """Per-point distance to the nearest primitive surface (analytic oracle)."""
    pts = np.asarray(points, dtype=np.float64)
    if not primitives:
        raise ValueError("need at least one primitive")
    return np.min([p.surface_distance(pts) for p in primitives], axis=0)


def sample_surfaces(primitives, spacing_mm: float) -> np.ndarray:
    """Dense ground-truth cloud: all primitive surfaces gridded at ``spacing_mm``."""
    return np.concatenate([p.sample_surface(spacing_mm) for p in primitives])


def render_depth(primitives, pose: Pose, k: CameraIntrinsics,
                 unlabeled_id: int = 0) -> tuple:
    """Ray-cast the primitives into (DepthImage, LabelImage, instance raster).

    The ray through pixel (u, v) has camera-frame direction
    ((u-cx)/fx, (v-cy)/fy, 1); with that scaling the hit parameter equals the
    camera-frame z, so depth values back-project exactly. Pixels that hit
    nothing get depth 0, the unlabeled class, and instance 0.
    """
    u, v = np.meshgrid(np.arange(k.width), np.arange(k.height), indexing="xy")
    dirs_cam = np.stack([(u - k.cx) / k.fx, (v - k.cy) / k.fy,
                         np.ones_like(u, dtype=np.float64)], axis=-1)
    dirs = dirs_cam.reshape(-1, 3) @ pose.rotation.T
    origin = pose.translation

    t_best = np.full(dirs.shape[0], np.inf)
    labels = np.full(dirs.shape[0], unlabeled_id, dtype=np.int32)
    inst = np.zeros(dirs.shape[0], dtype=np.int32)
    for prim in primitives:
        t = prim.ray_t(origin, dirs)
        closer = t < t_best
        t_best[closer] = t[closer]
        labels[closer] = prim.class_label
        inst[closer] = prim.instance_id
    depth = np.where(np.isfinite(t_best), t_best, 0.0).reshape(k.height, k.width)
    return (DepthImage(depth),
            LabelImage(labels.reshape(k.height, k.width), unlabeled_id=unlabeled_id),
            inst.reshape(k.height, k.width))


@dataclass(frozen=True)
class NoiseModel:
    """Depth corruption: z' = quantize(z + N(0, sigma(z)), step), then range gate.

    sigma(z) = sigma_base_mm + sigma_quadratic_mm * (z in meters)^2. Values
    quantize to the nearest multiple of quantization_step_mm (0 disables).
    Anything beyond max_depth_mm afterwards becomes invalid (0), the hard
    4-meter-class cutoff of consumer depth sensors. Invalid input pixels stay
    invalid.
    """

    sigma_base_mm: float = 0.0
    sigma_quadratic_mm: float = 0.0
    quantization_step_mm: float = 0.0
    seed: int = 0
    max_depth_mm: float = 4000.0

    def __post_init__(self):
        if min(self.sigma_base_mm, self.sigma_quadratic_mm,
               self.quantization_step_mm, self.max_depth_mm) < 0:
            raise ValueError("noise parameters must be non-negative")


def apply_noise(depth: DepthImage, model: NoiseModel, frame_index: int = 0) -> DepthImage:
    """Corrupt a depth raster; deterministic given (model.seed, frame_index)."""
    z = depth.data.copy()
    valid = z > 0
    # One full-raster draw per frame keeps the stream independent of which
    # pixels happen to be valid.
    rng = np.random.Generator(np.random.Philox(key=[model.seed, frame_index]))
    noise = rng.standard_normal(z.shape)
    sigma = model.sigma_base_mm + model.sigma_quadratic_mm * (z / 1000.0) ** 2
    z = np.where(valid, z + noise * sigma, 0.0)
    if model.quantization_step_mm > 0:
        step = model.quantization_step_mm
        z = np.where(valid, np.round(z / step) * step, 0.0)
    z = np.maximum(z, 0.0)
    z[z > model.max_depth_mm] = 0.0
    return DepthImage(z)


def look_at(eye, target, up=(0.0, 1.0, 0.0)) -> Pose:
    """Camera-to-world pose looking from ``eye`` toward ``target`` (+z forward)."""
    eye = np.asarray(eye, dtype=np.float64).reshape(3)
    fwd = np.asarray(target, dtype=np.float64).reshape(3) - eye
    n = np.linalg.norm(fwd)
    if n < _EPS:
        raise ValueError("eye and target coincide")
    fwd = fwd / n
    up = np.asarray(up, dtype=np.float64).reshape(3)
    if np.linalg.norm(np.cross(up, fwd)) < _EPS:
        up = np.array([0.0, 0.0, 1.0])
    right = np.cross(up, fwd)
    right /= np.linalg.norm(right)
    down = np.cross(fwd, right)
    return Pose(np.column_stack([right, down, fwd]), eye)


def orbit_path(target, radius_mm: float, height_mm: float, n_frames: int,
               start_deg: float = 0.0, end_deg: float = 360.0) -> list:
    """Poses on a horizontal circle around ``target``, all looking at it."""
    if n_frames < 1:
        raise ValueError("need at least one frame")
    target = np.asarray(target, dtype=np.float64).reshape(3)
    angles = np.deg2rad(np.linspace(start_deg, end_deg, n_frames, endpoint=False))
    poses = []
    for a in angles:
        eye = target + np.array([radius_mm * np.cos(a), height_mm, radius_mm * np.sin(a)])
        poses.append(look_at(eye, target))
    return poses


@dataclass(frozen=True)
class SubjectScript:
    """One scripted subject: a bbox lane plus a pointer cluster.

    The bbox translates by ``velocity`` pixels per frame. ``present`` holds
    [start, end) frame intervals (end None = rest of the sequence). Pointers
    are drawn uniformly from a ball of radius ``pointer_spread`` around
    ``pointer_center3`` in projected space and lifted back through the
    projector; subjects without a center emit pointerless detections.
    """

    subject_id: int
    bbox0: tuple
    velocity: tuple = (0.0, 0.0)
    present: tuple = ((0, None),)
    pointer_center3: tuple | None = None
    pointer_spread: float = 0.0

    def present_at(self, frame: int) -> bool:
        return any(s <= frame and (e is None or frame < e) for s, e in self.present)


@dataclass(frozen=True)
class TrackingScenario:
    subjects: tuple
    n_frames: int

    def __post_init__(self):
        if self.n_frames < 1:
            raise ValueError("scenario needs at least one frame")
        ids = [s.subject_id for s in self.subjects]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate subject ids")
        for f in range(1, self.n_frames):
            left = any(s.present_at(f - 1) and not s.present_at(f) for s in self.subjects)
            entered = any(not s.present_at(f - 1) and s.present_at(f) for s in self.subjects)
            if left and entered:
                raise ValueError(
                    f"frame {f}: a subject leaves while another enters; "
                    "simultaneous leave+enter keeps the detection count constant "
                    "and is outside the tracking model's assumptions")


def _ball_sample(rng, radius: float) -> np.ndarray:
    v = rng.standard_normal(3)
    n = np.linalg.norm(v)
    if n < _EPS:
        return np.zeros(3)
    return v / n * radius * rng.random() ** (1.0 / 3.0)


def gen_tracking_sequence(scenario: TrackingScenario, projector: PcaProjector | None,
                          seed: int = 0) -> list:
    """Per-frame lists of (Detection, true_subject_id), deterministic in ``seed``."""
    frames = []
    for f in range(scenario.n_frames):
        rng = np.random.Generator(np.random.Philox(key=[seed, f]))
        dets = []
        for subj in scenario.subjects:
            # Draw per subject regardless of presence so one subject's exits
            # cannot shift another's pointer stream.
            jitter = _ball_sample(rng, subj.pointer_spread)
            if not subj.present_at(f):
                continue
            x0, y0, x1, y1 = subj.bbox0
            dx, dy = subj.velocity
            bbox = (x0 + dx * f, y0 + dy * f, x1 + dx * f, y1 + dy * f)
            pointer = None
            if subj.pointer_center3 is not None:
                if projector is None:
                    raise ValueError("pointer clusters need a projector to lift through")
                v3 = np.asarray(subj.pointer_center3, dtype=np.float64) + jitter
                pointer = projector.mean + projector.components.T @ v3
            dets.append((Detection(bbox, pointer, frame_index=f), subj.subject_id))
        frames.append(dets)
    return frames


def _interp_keyframes(keyframes, frame: int) -> np.ndarray:
    ks = sorted(keyframes, key=lambda k: k["frame"])
    if frame <= ks[0]["frame"]:
        return np.asarray(ks[0]["center"], dtype=np.float64)
    if frame >= ks[-1]["frame"]:
        return np.asarray(ks[-1]["center"], dtype=np.float64)
    for a, b in zip(ks, ks[1:]):
        if a["frame"] <= frame <= b["frame"]:
            span = b["frame"] - a["frame"]
            w = (frame - a["frame"]) / span if span else 0.0
            ca = np.asarray(a["center"], dtype=np.float64)
            cb = np.asarray(b["center"], dtype=np.float64)
            return ca + w * (cb - ca)
    raise AssertionError("unreachable: keyframes are sorted and bracketing")


@dataclass(frozen=True)
class Actor:
    """A moving box subject rendered into the rasters and emitted as detections."""

    size: np.ndarray
    keyframes: tuple
    class_label: int
    instance_id: int
    present: tuple = ((0, None),)
    pointer_center3: tuple | None = None
    pointer_spread: float = 0.0

    def __post_init__(self):
        s = np.asarray(self.size, dtype=np.float64).reshape(3)
        if not (s > 0).all():
            raise ValueError("actor size must be positive")
        object.__setattr__(self, "size", s)
        if not self.keyframes:
            raise ValueError("actor needs at least one keyframe")

    def present_at(self, frame: int) -> bool:
        return any(s <= frame and (e is None or frame < e) for s, e in self.present)

    def box_at(self, frame: int) -> Box:
        c = _interp_keyframes(self.keyframes, frame)
        return Box(c - self.size / 2, c + self.size / 2,
                   self.class_label, self.instance_id)


def _check_keys(d: dict, known: set, context: str):
    unknown = set(d) - known
    if unknown:
        raise ValueError(f"{context}: unknown keys {sorted(unknown)}")


def _actor_from_dict(d: dict) -> Actor:
    _check_keys(d, {"size", "keyframes", "label", "instance_id", "present",
                    "pointer_center3", "pointer_spread"}, "actor")
    present = tuple((int(s), None if e is None else int(e))
                    for s, e in d.get("present", [[0, None]]))
    center3 = d.get("pointer_center3")
    return Actor(size=d["size"], keyframes=tuple(d["keyframes"]),
                 class_label=int(d["label"]), instance_id=int(d["instance_id"]),
                 present=present,
                 pointer_center3=None if center3 is None else tuple(center3),
                 pointer_spread=float(d.get("pointer_spread", 0.0)))


def _camera_path(cam: dict) -> list:
    kind = cam.get("kind")
    if kind == "orbit":
        _check_keys(cam, {"kind", "target", "radius_mm", "height_mm", "frames",
                          "start_deg", "end_deg"}, "camera")
        return orbit_path(cam["target"], float(cam["radius_mm"]),
                          float(cam["height_mm"]), int(cam["frames"]),
                          float(cam.get("start_deg", 0.0)),
                          float(cam.get("end_deg", 360.0)))
    if kind == "poses":
        _check_keys(cam, {"kind", "matrices"}, "camera")
        return [Pose.from_matrix(np.asarray(m, dtype=np.float64).reshape(4, 4))
                for m in cam["matrices"]]
    raise ValueError(f"camera.kind must be 'orbit' or 'poses', got {kind!r}")


def make_projector(seed: int, dim: int = 256) -> PcaProjector:
    """A reproducible random orthonormal 3-row projector for synthetic pointers."""
    rng = np.random.Generator(np.random.Philox(key=[seed, 2 ** 33]))
    q, _ = np.linalg.qr(rng.standard_normal((dim, 3)))
    return PcaProjector(q.T, rng.standard_normal(dim) * 0.1)


def generate_dataset(spec: dict, out_dir, seed: int = 0):
    """Render a scripted scene into the on-disk dataset layout the CLI ingests.

    Layout: frames/NNNNNN.{depth.png,labels.png,inst.png,pose.txt[,det.txt]}
    plus intrinsics.txt, classes.txt, and projector.txt when actors carry
    pointer clusters. Byte-reproducible for a given (spec, seed).
    """
    from pathlib import Path
    import json

    from . import dataio

    _check_keys(spec, {"image", "intrinsics", "classes", "unlabeled_id",
                       "primitives", "camera", "noise", "actors"}, "scene spec")
    img = spec["image"]
    _check_keys(img, {"width", "height"}, "image")
    intr = spec["intrinsics"]
    _check_keys(intr, {"fx", "fy", "cx", "cy"}, "intrinsics")
    k = CameraIntrinsics(fx=float(intr["fx"]), fy=float(intr["fy"]),
                         cx=float(intr["cx"]), cy=float(intr["cy"]),
                         width=int(img["width"]), height=int(img["height"]))
    unlabeled = int(spec.get("unlabeled_id", 0))
    classes = {int(i): str(n) for i, n in spec.get("classes", {}).items()}
    statics = [primitive_from_dict(p) for p in spec.get("primitives", [])]
    actors = [_actor_from_dict(a) for a in spec.get("actors", [])]
    poses = _camera_path(spec["camera"])

    noise_spec = dict(spec.get("noise", {}))
    _check_keys(noise_spec, {"sigma_base_mm", "sigma_quadratic_mm",
                             "quantization_step_mm", "max_depth_mm"}, "noise")
    model = NoiseModel(seed=seed, **{k_: float(v) for k_, v in noise_spec.items()})

    ids = [p.instance_id for p in statics] + [a.instance_id for a in actors]
    if len(set(ids)) != len(ids) or any(i < 1 for i in ids):
        raise ValueError("instance ids must be unique and >= 1 (0 is background)")
    used_labels = {p.class_label for p in statics} | {a.class_label for a in actors}
    missing = used_labels - set(classes) - {unlabeled}
    if missing:
        raise ValueError(f"labels without class names: {sorted(missing)}")

    projector = None
    if any(a.pointer_center3 is not None for a in actors):
        projector = make_projector(seed)

    out = Path(out_dir)
    frames_dir = out / "frames"
    frames_dir.mkdir(parents=True, exist_ok=True)

    for f, pose in enumerate(poses):
        prims = statics + [a.box_at(f) for a in actors if a.present_at(f)]
        depth, labels, inst = render_depth(prims, pose, k, unlabeled)
        noisy = apply_noise(depth, model, frame_index=f)
        stem = frames_dir / f"{f:06d}"
        dataio.write_depth_png(f"{stem}.depth.png", noisy)
        dataio.write_label_png(f"{stem}.labels.png", labels.data)
        dataio.write_label_png(f"{stem}.inst.png", inst)
        dataio.write_pose(f"{stem}.pose.txt", pose)

        if actors:
            rng = np.random.Generator(np.random.Philox(key=[seed, 2 ** 32 + f]))
            dets = []
            for a in actors:
                jitter = _ball_sample(rng, a.pointer_spread)
                if not a.present_at(f):
                    continue
                vs, us = np.nonzero(inst == a.instance_id)
                if vs.size == 0:
                    continue  # fully occluded or out of view this frame
                bbox = (float(us.min()), float(vs.min()),
                        float(us.max() + 1), float(vs.max() + 1))
                pointer = None
                if a.pointer_center3 is not None:
                    v3 = np.asarray(a.pointer_center3, dtype=np.float64) + jitter
                    pointer = projector.mean + projector.components.T @ v3
                dets.append(Detection(bbox, pointer, frame_index=f))
            dataio.write_detections(f"{stem}.det.txt", dets)

    dataio.write_intrinsics(out / "intrinsics.txt", k)
    if classes:
        dataio.write_classes(out / "classes.txt", classes)
    if projector is not None:
        dataio.write_projector(out / "projector.txt", projector)
    (out / "scene_spec.json").write_text(
        json.dumps({"seed": seed, "spec": spec}, indent=2, sort_keys=True) + "\n")
    return out
