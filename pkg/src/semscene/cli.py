"""Command-line driver.

Subcommands: synth (generate a dataset), run (pipeline over a dataset),
eval (segmentation or cloud metrics), bench (paired gated/ungated merge
timing), inspect (summarize an exported scene). Exit codes: 0 success,
1 input error, 2 internal failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import dataio
from .evalmetrics import cloud_error, runtime_report, seg_metrics
from .fusion import SegmentedCloud
from .geometry import backproject
from .pipeline import (MANIFEST_NAME, PipelineConfig, _frame_semantics, load_dataset,
                       run_pipeline)
from .semvote import LabelImage
from .synthdata import generate_dataset


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="semscene",
                                description="semantic RGB-D scene pipeline")
    sub = p.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("synth", help="generate a synthetic dataset")
    s.add_argument("--config", required=True, help="scene spec JSON")
    s.add_argument("--out", required=True, help="output dataset directory")
    s.add_argument("--seed", type=int, default=0)

    r = sub.add_parser("run", help="run the pipeline over a dataset")
    r.add_argument("--dataset", required=True)
    r.add_argument("--config", help="pipeline config JSON (defaults apply if omitted)")
    r.add_argument("--out", help="export directory (overrides config export_dir)")
    r.add_argument("--no-labels", action="store_true",
                   help="disable label gating during fusion")

    e = sub.add_parser("eval", help="compute metrics")
    esub = e.add_subparsers(dest="kind", required=True)
    eseg = esub.add_parser("seg", help="label-raster metrics")
    eseg.add_argument("--pred", required=True)
    eseg.add_argument("--truth", required=True)
    eseg.add_argument("--unlabeled-id", type=int, default=0)
    ecl = esub.add_parser("cloud", help="cloud-to-cloud error")
    ecl.add_argument("--est", required=True)
    ecl.add_argument("--truth", required=True)
    ecl.add_argument("--symmetric", action="store_true")

    b = sub.add_parser("bench", help="time label-gated vs ungated merging")
    b.add_argument("--dataset", required=True)
    b.add_argument("--config")
    b.add_argument("--trials", type=int, default=10)
    b.add_argument("--out", help="directory for bench.txt / bench.jsonl")

    i = sub.add_parser("inspect", help="summarize an exported scene")
    i.add_argument("path", help="export directory containing the manifest")
    return p


def _load_config(path) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    return PipelineConfig.from_json(path)


def _cmd_synth(args) -> int:
    try:
        spec = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ValueError(f"cannot read scene spec {args.config}: {e}") from e
    out = generate_dataset(spec, args.out, seed=args.seed)
    n = len(list((Path(out) / "frames").glob("*.depth.png")))
    print(f"wrote {n} frames to {out}")
    return 0


def _cmd_run(args) -> int:
    config = _load_config(args.config)
    if args.no_labels:
        config = replace(config, fusion=replace(config.fusion, use_labels=False))
    out = args.out or config.export_dir
    scene = run_pipeline(config, args.dataset, out)
    where = f", exported to {out}" if out else ""
    print(f"merged {scene.frame_count} frames into "
          f"{len(scene.objects)} objects{where}")
    return 0


def _cmd_eval(args) -> int:
    if args.kind == "seg":
        pred = LabelImage(dataio.read_label_png(args.pred), args.unlabeled_id)
        truth = LabelImage(dataio.read_label_png(args.truth), args.unlabeled_id)
        m = seg_metrics(pred, truth)
        out = {"miou": m.miou, "macc": m.macc, "pacc": m.pacc,
               "per_class_iou": {str(k): v for k, v in m.per_class_iou.items()}}
    else:
        err = cloud_error(dataio.read_ply(args.est), dataio.read_ply(args.truth),
                          symmetric=args.symmetric)
        out = {"mean_mm": err.mean_mm, "std_mm": err.std_mm,
               "max_mm": err.max_mm, "points": int(err.per_point.shape[0])}
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


def _cmd_bench(args) -> int:
    config = _load_config(args.config)
    ds = load_dataset(args.dataset, config)
    frames = []
    for rec in ds.records:
        try:
            depth = dataio.read_depth_png(rec.depth_path)
            labels = None
            if rec.labels_path is not None:
                labels = LabelImage(dataio.read_label_png(rec.labels_path),
                                    unlabeled_id=config.unlabeled_id)
            pose = dataio.read_pose(rec.pose_path)
            clouds = []
            for cid, mask in _frame_semantics(rec, labels, config):
                raw = backproject(depth, ds.intrinsics, mask)
                if raw.shape[0]:
                    clouds.append(SegmentedCloud.from_raw(
                        raw, cid, -1, config.fusion.voxels.final_voxel_mm))
            frames.append((clouds, pose))
        except (ValueError, OSError) as e:
            raise ValueError(f"frame {rec.index}: {e}") from e
    text, rows = runtime_report(frames, config.fusion, trials=args.trials)
    print(text)
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "bench.txt").write_text(text + "\n")
        with open(outdir / "bench.jsonl", "w") as f:
            for row in rows:
                f.write(json.dumps(row, sort_keys=True) + "\n")
    return 0


def _cmd_inspect(args) -> int:
    mpath = Path(args.path) / MANIFEST_NAME
    try:
        manifest = json.loads(mpath.read_text())
    except FileNotFoundError:
        raise ValueError(f"{args.path}: no {MANIFEST_NAME}; not an export directory")
    except json.JSONDecodeError as e:
        raise ValueError(f"{mpath}: corrupt manifest: {e}") from e
    objs = manifest.get("objects", [])
    print(f"frames: {manifest.get('frame_count')}   objects: {len(objs)}   "
          f"resets: {len(manifest.get('reset_frames', []))}")
    header = f"{'id':>5}  {'class':>6}  {'name':<12}  {'points':>8}  {'updated':>7}  track"
    print(header)
    for o in objs:
        name = o.get("class_name") or "-"
        track = o.get("human_track_id")
        print(f"{o['instance_id']:>5}  {o['class_label']:>6}  {name:<12}  "
              f"{o['point_count']:>8}  {o['frame_last_updated']:>7}  "
              f"{track if track is not None else '-'}")
    total = sum(o["point_count"] for o in objs)
    print(f"total points: {total}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage problems; those are input errors here
        return 0 if e.code == 0 else 1
    try:
        if args.cmd == "synth":
            return _cmd_synth(args)
        if args.cmd == "run":
            return _cmd_run(args)
        if args.cmd == "eval":
            return _cmd_eval(args)
        if args.cmd == "bench":
            return _cmd_bench(args)
        return _cmd_inspect(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # pragma: no cover - defensive
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
