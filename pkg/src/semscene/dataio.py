"""File formats for datasets and scene checkpoints.

Rasters are PNG: depth in millimeters, class labels, and instance ids as
16-bit grayscale; binary masks as 8-bit 0/255. Poses, intrinsics, detections,
and projectors are small text files with floats written as %.17g so values
round-trip exactly and outputs are byte-stable. Point clouds are binary
little-endian PLY with float32 xyz in millimeters.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .geometry import CameraIntrinsics, DepthImage, Pose
from .tracker import POINTER_DIM, Detection, PcaProjector


def _fmt(x: float) -> str:
    return "%.17g" % float(x)


def _read_raster(path) -> np.ndarray:
    try:
        with Image.open(path) as img:
            arr = np.asarray(img)
    except Exception as e:
        raise ValueError(f"cannot read raster {path}: {e}") from e
    if arr.ndim != 2:
        raise ValueError(f"{path}: expected single-channel raster, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        raise ValueError(f"{path}: expected integer raster, got dtype {arr.dtype}")
    return arr


def _write_u16(path, arr: np.ndarray):
    a = np.asarray(arr)
    if a.ndim != 2:
        raise ValueError(f"raster must be 2-D, got shape {a.shape}")
    if a.min() < 0 or a.max() > 65535:
        raise ValueError("raster values must fit in uint16")
    Image.fromarray(a.astype(np.uint16)).save(path)


def raster_size(path) -> tuple:
    """(width, height) from the image header, without decoding pixel data."""
    try:
        with Image.open(path) as img:
            return img.size
    except Exception as e:
        raise ValueError(f"cannot read raster {path}: {e}") from e


def write_depth_png(path, depth: DepthImage):
    # mm are stored rounded to integers; keep synthetic depth in that range
    _write_u16(path, np.round(depth.data))


def read_depth_png(path) -> DepthImage:
    return DepthImage(_read_raster(path).astype(np.float64))


def write_label_png(path, labels: np.ndarray):
    _write_u16(path, labels)


def read_label_png(path) -> np.ndarray:
    return _read_raster(path).astype(np.int32)


def write_mask_png(path, mask: np.ndarray):
    m = np.asarray(mask, dtype=bool)
    Image.fromarray((m * np.uint8(255)), mode="L").save(path)


def read_mask_png(path) -> np.ndarray:
    arr = _read_raster(path)
    return arr > 0


def write_pose(path, pose: Pose):
    m = pose.matrix()
    lines = [" ".join(_fmt(x) for x in row) for row in m]
    Path(path).write_text("\n".join(lines) + "\n")


def read_pose(path) -> Pose:
    try:
        vals = [float(x) for x in Path(path).read_text().split()]
    except (OSError, ValueError) as e:
        raise ValueError(f"cannot read pose {path}: {e}") from e
    if len(vals) != 16:
        raise ValueError(f"{path}: pose must have 16 values, got {len(vals)}")
    m = np.array(vals).reshape(4, 4)
    if np.abs(m[3] - [0, 0, 0, 1]).max() > 1e-9:
        raise ValueError(f"{path}: last pose row must be 0 0 0 1")
    try:
        return Pose.from_matrix(m)
    except ValueError as e:
        raise ValueError(f"{path}: {e}") from e


def write_intrinsics(path, k: CameraIntrinsics):
    text = "".join(f"{name}={_fmt(getattr(k, name))}\n" for name in ("fx", "fy", "cx", "cy"))
    text += f"width={k.width}\nheight={k.height}\n"
    Path(path).write_text(text)


def read_intrinsics(path) -> CameraIntrinsics:
    fields = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as e:
        raise ValueError(f"cannot read intrinsics {path}: {e}") from e
    for line in lines:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}: expected key=value, got {line!r}")
        key, val = line.split("=", 1)
        fields[key.strip()] = val.strip()
    try:
        return CameraIntrinsics(fx=float(fields["fx"]), fy=float(fields["fy"]),
                                cx=float(fields["cx"]), cy=float(fields["cy"]),
                                width=int(fields["width"]), height=int(fields["height"]))
    except (KeyError, ValueError) as e:
        raise ValueError(f"{path}: bad intrinsics: {e}") from e


def write_detections(path, detections):
    lines = []
    for d in detections:
        parts = [str(int(d.frame_index))] + [_fmt(v) for v in d.bbox]
        if d.pointer is not None:
            parts += [_fmt(v) for v in d.pointer]
        lines.append(" ".join(parts))
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def read_detections(path) -> list:
    dets = []
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as e:
        raise ValueError(f"cannot read detections {path}: {e}") from e
    for ln, line in enumerate(lines, 1):
        line = line.strip()
        if not line:
            continue
        vals = line.split()
        if len(vals) not in (5, 5 + POINTER_DIM):
            raise ValueError(f"{path}:{ln}: expected 5 or {5 + POINTER_DIM} values, "
                             f"got {len(vals)}")
        try:
            frame = int(vals[0])
            bbox = tuple(float(v) for v in vals[1:5])
            pointer = np.array([float(v) for v in vals[5:]]) if len(vals) > 5 else None
            dets.append(Detection(bbox, pointer, frame_index=frame))
        except ValueError as e:
            raise ValueError(f"{path}:{ln}: {e}") from e
    return dets


def write_projector(path, proj: PcaProjector):
    rows = [proj.mean] + list(proj.components)
    Path(path).write_text("\n".join(" ".join(_fmt(v) for v in row) for row in rows) + "\n")


def read_projector(path) -> PcaProjector:
    try:
        lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    except OSError as e:
        raise ValueError(f"cannot read projector {path}: {e}") from e
    if len(lines) < 2:
        raise ValueError(f"{path}: projector needs a mean row and component rows")
    try:
        rows = [np.array([float(v) for v in ln.split()]) for ln in lines]
    except ValueError as e:
        raise ValueError(f"{path}: {e}") from e
    mean, comps = rows[0], rows[1:]
    if any(c.shape != mean.shape for c in comps):
        raise ValueError(f"{path}: component rows must match the mean's length")
    try:
        return PcaProjector(np.vstack(comps), mean)
    except ValueError as e:
        raise ValueError(f"{path}: {e}") from e


def write_classes(path, names: dict):
    lines = [f"{int(i)}\t{names[i]}" for i in sorted(names)]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def read_classes(path) -> dict:
    names = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as e:
        raise ValueError(f"cannot read class table {path}: {e}") from e
    for ln, line in enumerate(lines, 1):
        if not line.strip():
            continue
        if "\t" not in line:
            raise ValueError(f"{path}:{ln}: expected id<TAB>name")
        ident, name = line.split("\t", 1)
        try:
            names[int(ident)] = name
        except ValueError as e:
            raise ValueError(f"{path}:{ln}: {e}") from e
    return names


_PLY_HEADER = ("ply\n"
               "format binary_little_endian 1.0\n"
               "element vertex {n}\n"
               "property float x\n"
               "property float y\n"
               "property float z\n"
               "end_header\n")


def write_ply(path, points: np.ndarray):
    pts = np.asarray(points, dtype="<f4")
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"expected an (n, 3) cloud, got shape {np.asarray(points).shape}")
    with open(path, "wb") as f:
        f.write(_PLY_HEADER.format(n=pts.shape[0]).encode("ascii"))
        f.write(np.ascontiguousarray(pts).tobytes())


def read_ply(path) -> np.ndarray:
    with open(path, "rb") as f:
        data = f.read()
    end = data.find(b"end_header\n")
    if not data.startswith(b"ply\n") or end < 0:
        raise ValueError(f"{path}: not a PLY file")
    header = data[:end].decode("ascii", errors="replace").splitlines()
    if "format binary_little_endian 1.0" not in header:
        raise ValueError(f"{path}: only binary little-endian PLY is supported")
    n = None
    for line in header:
        if line.startswith("element vertex"):
            n = int(line.split()[-1])
    if n is None:
        raise ValueError(f"{path}: missing vertex element")
    body = data[end + len(b"end_header\n"):]
    expected = n * 3 * 4
    if len(body) < expected:
        raise ValueError(f"{path}: truncated vertex data "
                         f"({len(body)} bytes, expected {expected})")
    pts = np.frombuffer(body[:expected], dtype="<f4").reshape(n, 3)
    return pts.astype(np.float64)
