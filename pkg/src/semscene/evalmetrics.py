"""Evaluation: segmentation metrics, cloud error, tracking identity, benchmarks.

Conventions that vary across the literature are pinned here so the numbers
are interpretable: mIoU averages over classes present in either raster, mAcc
over classes present in the truth, and pixels the truth leaves unlabeled are
excluded everywhere. Cloud error is the one-directional cloud-to-cloud
convention (estimated point to nearest truth point); pass symmetric=True for
the Chamfer-style both-ways variant.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import kernels
from .fusion import FusionParams, SceneModel, merge_frame
from .geometry import as_points
from .semvote import LabelImage
from .tracker import PcaProjector


@dataclass(frozen=True)
class SegMetrics:
    miou: float
    macc: float
    pacc: float
    per_class_iou: dict


@dataclass(frozen=True)
class CloudError:
    mean_mm: float
    std_mm: float
    max_mm: float
    per_point: np.ndarray


def seg_metrics(pred: LabelImage, truth: LabelImage) -> SegMetrics:
    """mIoU / mAcc / pAcc between two label rasters.

    Pixels unlabeled in the truth are ignored. A prediction of the unlabeled
    id on a labeled pixel counts as wrong but never as a class of its own.
    """
    if pred.data.shape != truth.data.shape:
        raise ValueError(f"raster shapes differ: {pred.data.shape} vs {truth.data.shape}")
    if pred.unlabeled_id != truth.unlabeled_id:
        raise ValueError("prediction and truth must agree on the unlabeled id")
    keep = truth.data != truth.unlabeled_id
    if not keep.any():
        raise ValueError("truth raster has no labeled pixels")
    p = pred.data[keep]
    t = truth.data[keep]
    pacc = float((p == t).mean())
    classes = sorted((set(np.unique(p).tolist()) | set(np.unique(t).tolist()))
                     - {truth.unlabeled_id})
    per_class_iou = {}
    recalls = []
    for c in classes:
        pc, tc = p == c, t == c
        inter = int((pc & tc).sum())
        union = int((pc | tc).sum())
        per_class_iou[c] = inter / union if union else 0.0
        if tc.any():
            recalls.append(inter / int(tc.sum()))
    miou = float(np.mean(list(per_class_iou.values()))) if per_class_iou else 0.0
    macc = float(np.mean(recalls)) if recalls else 0.0
    return SegMetrics(miou, macc, pacc, per_class_iou)


def cloud_error(estimated, truth, symmetric: bool = False) -> CloudError:
    """Nearest-neighbor distances from estimated points into the truth cloud.

    symmetric=True pools both directions (Chamfer style) before summarizing.
    """
    est, tru = as_points(estimated), as_points(truth)
    if est.shape[0] == 0 or tru.shape[0] == 0:
        raise ValueError("cloud error requires two nonempty clouds")
    _, d2 = kernels.nn_directed(est, tru)
    per_point = np.sqrt(d2)
    if symmetric:
        _, d2_back = kernels.nn_directed(tru, est)
        per_point = np.concatenate([per_point, np.sqrt(d2_back)])
    return CloudError(float(per_point.mean()), float(per_point.std()),
                      float(per_point.max()), per_point)


def tracking_score(predicted, truth) -> float:
    """Identity accuracy under the best one-to-one predicted-to-truth id map.

    Both arguments are per-frame sequences of ids, aligned detection by
    detection. The optimal bijection is found by Hungarian assignment on the
    id co-occurrence matrix, so any consistent relabeling scores 1.0.
    """
    pred_flat, true_flat = [], []
    for f, (pf, tf) in enumerate(zip(predicted, truth, strict=True)):
        pf, tf = list(pf), list(tf)
        if len(pf) != len(tf):
            raise ValueError(f"frame {f}: {len(pf)} predicted ids vs {len(tf)} truth ids")
        pred_flat += pf
        true_flat += tf
    if not pred_flat:
        raise ValueError("no detections to score")
    pids = {p: i for i, p in enumerate(sorted(set(pred_flat)))}
    tids = {t: i for i, t in enumerate(sorted(set(true_flat)))}
    counts = np.zeros((len(pids), len(tids)), dtype=np.int64)
    for p, t in zip(pred_flat, true_flat):
        counts[pids[p], tids[t]] += 1
    rows, cols = linear_sum_assignment(-counts)
    return float(counts[rows, cols].sum()) / len(pred_flat)


def fit_pca(samples, dims: int = 3) -> PcaProjector:
    """Top principal directions of mean-centered samples, as a projector.

    Components are orthonormal, ordered by descending variance, with each
    row's sign fixed so its largest-magnitude entry is positive. If the data
    has rank below ``dims``, the missing rows are filled with a deterministic
    orthonormal completion (and a warning is emitted) so the projector stays
    full height. Intended for building test fixtures, not production fitting.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"samples must be 2-D, got shape {x.shape}")
    n, d = x.shape
    if dims < 1 or dims > d:
        raise ValueError(f"dims must be in [1, {d}]")
    if n < dims + 1:
        raise ValueError(f"need at least {dims + 1} samples, got {n}")
    mean = x.mean(axis=0)
    _, s, vt = np.linalg.svd(x - mean, full_matrices=False)
    rank = int((s > max(1e-12 * (s[0] if s.size else 0.0), 1e-12)).sum())
    comps = [vt[i] for i in range(min(dims, rank))]
    if rank < dims:
        warnings.warn(f"sample rank {rank} < {dims}; padding with an "
                      "orthonormal completion", RuntimeWarning, stacklevel=2)
        for i in range(d):
            if len(comps) == dims:
                break
            v = np.zeros(d)
            v[i] = 1.0
            for c in comps:
                v -= (v @ c) * c
            norm = np.linalg.norm(v)
            if norm > 1e-6:
                comps.append(v / norm)
    comps = np.array(comps)
    lead = np.abs(comps).argmax(axis=1)
    signs = np.sign(comps[np.arange(dims), lead])
    comps *= signs[:, None]
    return PcaProjector(comps, mean)


def _timed_pass(frames, params: FusionParams) -> tuple:
    scene = SceneModel(params=params)
    times = []
    for clouds, pose in frames:
        t0 = time.perf_counter()
        merge_frame(scene, clouds, pose)
        times.append(time.perf_counter() - t0)
    return scene, times


def runtime_report(frames, params: FusionParams, trials: int = 10) -> tuple:
    """Paired gated/ungated merge benchmark over a frame sequence.

    ``frames`` is a list of (frame_clouds, pose) in order. Each variant runs
    ``trials`` times from scratch; per-frame wall-clock is the median across
    trials. Returns (text_table, rows) where rows are JSON-ready dicts, one
    per frame plus an "average" row. Counts come from the label-gated run's
    stats, which record both the gated cost and the all-pairs cost on the
    same scene state.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    frames = list(frames)
    medians = {}
    scenes = {}
    for flag in (True, False):
        p = replace(params, use_labels=flag)
        per_trial = []
        for _ in range(trials):
            scene, times = _timed_pass(frames, p)
            per_trial.append(times)
        scenes[flag] = scene
        medians[flag] = np.median(np.array(per_trial), axis=0) if frames else np.array([])

    rows = []
    for i, st in enumerate(scenes[True].stats):
        tw, tn = float(medians[True][i]), float(medians[False][i])
        rows.append({
            "frame": st.frame_index,
            "scene_points": st.scene_points,
            "frame_points": st.frame_points,
            "computations_with_labels": st.with_labels,
            "computations_without_labels": st.without_labels,
            "count_factor": st.reduction_factor,
            "time_with_labels_s": tw,
            "time_without_labels_s": tn,
            "time_factor": tn / tw if tw > 0 else float("inf"),
        })
    if rows:
        finite = [r["count_factor"] for r in rows if np.isfinite(r["count_factor"])]
        rows.append({
            "frame": "average",
            "scene_points": "",
            "frame_points": "",
            "computations_with_labels": sum(r["computations_with_labels"] for r in rows),
            "computations_without_labels": sum(r["computations_without_labels"] for r in rows),
            "count_factor": float(np.mean(finite)) if finite else float("inf"),
            "time_with_labels_s": float(sum(r["time_with_labels_s"] for r in rows)),
            "time_without_labels_s": float(sum(r["time_without_labels_s"] for r in rows)),
            "time_factor": float(np.mean([r["time_factor"] for r in rows
                                          if np.isfinite(r["time_factor"])])),
        })

    header = ["frame", "scene_pts", "frame_pts", "comp_with", "comp_without",
              "count_factor", "t_with_s", "t_without_s", "time_factor"]
    keys = ["frame", "scene_points", "frame_points", "computations_with_labels",
            "computations_without_labels", "count_factor", "time_with_labels_s",
            "time_without_labels_s", "time_factor"]
    table = [header]
    for r in rows:
        cells = []
        for k in keys:
            v = r[k]
            if isinstance(v, float):
                cells.append(f"{v:.6g}" if k.startswith("time") or k.endswith("factor")
                             else f"{v:.0f}")
            else:
                cells.append(str(v))
        table.append(cells)
    widths = [max(len(row[j]) for row in table) for j in range(len(header))]
    text = "\n".join("  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in table)
    return text, rows
