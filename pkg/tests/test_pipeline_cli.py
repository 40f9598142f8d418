import json

import numpy as np
import pytest

from semscene import cli, dataio
from semscene.fusion import FusionParams
from semscene.geometry import CameraIntrinsics, DepthImage, Pose
from semscene.pipeline import (MANIFEST_NAME, PipelineConfig, export_scene,
                               ingest, load_dataset, run_pipeline)
from semscene.synthdata import generate_dataset

K = CameraIntrinsics(fx=60.0, fy=60.0, cx=32.0, cy=24.0, width=64, height=48)


def room_spec():
    return {
        "image": {"width": 64, "height": 48},
        "intrinsics": {"fx": 60.0, "fy": 60.0, "cx": 32.0, "cy": 24.0},
        "classes": {"1": "floor", "2": "crate", "9": "person"},
        "primitives": [
            {"kind": "plane", "axis": 1, "level": 600.0,
             "lo": [-3000.0, -3000.0], "hi": [3000.0, 3000.0],
             "label": 1, "instance_id": 1},
            {"kind": "box", "lo": [-300.0, 0.0, -300.0],
             "hi": [300.0, 600.0, 300.0], "label": 2, "instance_id": 2},
        ],
        "camera": {"kind": "orbit", "target": [0.0, 0.0, 0.0],
                   "radius_mm": 2500.0, "height_mm": -800.0, "frames": 3,
                   "start_deg": 0.0, "end_deg": 90.0},
        "noise": {"sigma_base_mm": 2.0},
        "actors": [{"size": [400.0, 1400.0, 400.0],
                    "keyframes": [{"frame": 0, "center": [-900.0, -100.0, 900.0]},
                                  {"frame": 2, "center": [-1100.0, -100.0, 900.0]}],
                    "label": 9, "instance_id": 3,
                    "pointer_center3": [4.0, 0.0, -1.0],
                    "pointer_spread": 0.1}],
    }


RUN_CONFIG = {"tracker": {"tau": 2.0}, "person_class_id": 9}


@pytest.fixture(scope="module")
def ds_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("data") / "room"
    generate_dataset(room_spec(), out, seed=11)
    return out


@pytest.fixture()
def labelless_dir(tmp_path):
    root = tmp_path / "bare"
    (root / "frames").mkdir(parents=True)
    dataio.write_depth_png(root / "frames" / "000000.depth.png",
                           DepthImage(np.full((48, 64), 2000.0)))
    dataio.write_pose(root / "frames" / "000000.pose.txt", Pose.identity())
    dataio.write_intrinsics(root / "intrinsics.txt", K)
    return root


def test_ingest_reads_generated_layout(ds_dir):
    records = ingest(ds_dir)
    assert [r.index for r in records] == [0, 1, 2]
    for r in records:
        assert r.depth_path.is_file() and r.pose_path.is_file()
        assert r.labels_path is not None and r.instances_path is not None
        assert r.detections_path is not None
        assert r.mask_paths == () and r.timestamp is None


def test_ingest_sorts_sparse_indices(tmp_path):
    root = tmp_path / "sparse"
    (root / "frames").mkdir(parents=True)
    for idx in (5, 2):
        dataio.write_depth_png(root / "frames" / f"{idx:06d}.depth.png",
                               DepthImage(np.full((4, 4), 100.0)))
        dataio.write_pose(root / "frames" / f"{idx:06d}.pose.txt", Pose.identity())
    assert [r.index for r in ingest(root)] == [2, 5]


def test_ingest_reads_timestamps(labelless_dir):
    (labelless_dir / "frames" / "000000.time.txt").write_text("12.5\n")
    assert ingest(labelless_dir)[0].timestamp == 12.5
    (labelless_dir / "frames" / "000000.time.txt").write_text("noon\n")
    with pytest.raises(ValueError, match="frame 0"):
        ingest(labelless_dir)


def test_ingest_error_cases(tmp_path, labelless_dir):
    with pytest.raises(ValueError, match="frames/"):
        ingest(tmp_path / "nowhere")
    empty = tmp_path / "empty"
    (empty / "frames").mkdir(parents=True)
    with pytest.raises(ValueError, match="no frames"):
        ingest(empty)

    (labelless_dir / "frames" / "000000.pose.txt").unlink()
    with pytest.raises(ValueError, match="missing pose"):
        ingest(labelless_dir)


def test_ingest_rejects_bad_names_and_rasters(tmp_path):
    root = tmp_path / "bad"
    (root / "frames").mkdir(parents=True)
    dataio.write_depth_png(root / "frames" / "abc.depth.png",
                           DepthImage(np.full((4, 4), 100.0)))
    with pytest.raises(ValueError, match="<index>.depth.png"):
        ingest(root)
    (root / "frames" / "abc.depth.png").unlink()

    (root / "frames" / "000000.depth.png").write_bytes(b"garbage")
    (root / "frames" / "000000.pose.txt").write_text("")
    with pytest.raises(ValueError, match="000000.depth.png"):
        ingest(root)


def test_ingest_rejects_dimension_mismatch(labelless_dir):
    dataio.write_label_png(labelless_dir / "frames" / "000000.labels.png",
                           np.zeros((10, 10), dtype=np.int32))
    with pytest.raises(ValueError, match="frame 0.*labels.png"):
        ingest(labelless_dir)


def test_config_defaults():
    c = PipelineConfig.from_dict({})
    assert c.fusion == FusionParams()
    assert c.tau is None and c.person_class_id is None
    assert c.enable_semvote and c.resolve_overlaps and c.enable_tracker
    assert c.intrinsics is None and c.export_dir is None


def test_config_cutoff_follows_voxel():
    c = PipelineConfig.from_dict({"fusion": {"correspondence_voxel_mm": 80.0}})
    assert c.fusion.correspondence_cutoff_mm == 160.0
    c = PipelineConfig.from_dict({"fusion": {"correspondence_voxel_mm": 80.0,
                                             "correspondence_cutoff_mm": 500.0}})
    assert c.fusion.correspondence_cutoff_mm == 500.0


def test_config_rejects_unknown_keys_at_every_level():
    for cfg in ({"mystery": 1},
                {"fusion": {"beta": 0.5}},
                {"tracker": {"kalman": True}},
                {"semvote": {"mode": "strict"}},
                {"intrinsics": {"fx": 1, "fy": 1, "cx": 0, "cy": 0,
                                "width": 2, "height": 2, "skew": 0}}):
        with pytest.raises(ValueError, match="unknown"):
            PipelineConfig.from_dict(cfg)


def test_config_parses_full_dict():
    c = PipelineConfig.from_dict({
        "fusion": {"alpha": 0.4, "use_labels": False, "final_voxel_mm": 25.0},
        "tracker": {"tau": 1.5, "memory_size": 4, "enabled": False},
        "semvote": {"enabled": False, "resolve_overlaps": False},
        "person_class_id": 9,
        "unlabeled_id": 7,
        "export_dir": "/tmp/x",
        "intrinsics": {"fx": 60, "fy": 60, "cx": 32, "cy": 24,
                       "width": 64, "height": 48},
    })
    assert c.fusion.alpha == 0.4 and not c.fusion.use_labels
    assert c.fusion.voxels.final_voxel_mm == 25.0
    assert c.tau == 1.5 and c.memory_size == 4 and not c.enable_tracker
    assert not c.enable_semvote and not c.resolve_overlaps
    assert c.person_class_id == 9 and c.unlabeled_id == 7
    assert c.intrinsics == K


def test_config_from_json(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text('{"tracker": {"tau": 2.0}}')
    assert PipelineConfig.from_json(p).tau == 2.0
    p.write_text("{broken")
    with pytest.raises(ValueError, match="cfg.json"):
        PipelineConfig.from_json(p)
    p.write_text("[1, 2]")
    with pytest.raises(ValueError, match="JSON object"):
        PipelineConfig.from_json(p)
    with pytest.raises(ValueError, match="missing.json"):
        PipelineConfig.from_json(tmp_path / "missing.json")


def test_load_dataset_intrinsics_priority(ds_dir, labelless_dir):
    ds = load_dataset(ds_dir, PipelineConfig())
    assert ds.intrinsics == K
    assert ds.class_names == {1: "floor", 2: "crate", 9: "person"}
    assert ds.projector_path is not None

    override = CameraIntrinsics(fx=1.0, fy=1.0, cx=0.0, cy=0.0, width=64, height=48)
    ds = load_dataset(ds_dir, PipelineConfig(intrinsics=override))
    assert ds.intrinsics == override

    (labelless_dir / "intrinsics.txt").unlink()
    with pytest.raises(ValueError, match="intrinsics"):
        load_dataset(labelless_dir, PipelineConfig())


def test_run_pipeline_builds_scene_with_human(ds_dir):
    config = PipelineConfig.from_dict(RUN_CONFIG)
    scene = run_pipeline(config, ds_dir)
    assert scene.frame_count == 3
    labels = sorted(o.class_label for o in scene.objects)
    assert labels == [1, 2, 9]  # floor, crate, person
    assert len(scene.human_instances) == 1
    human_iid = next(iter(scene.human_instances.values()))
    human = next(o for o in scene.objects if o.instance_id == human_iid)
    assert human.class_label == 9
    assert all(o.instance_id != human_iid for o in scene.static_objects())


def test_run_pipeline_requires_tau_for_detections(ds_dir):
    with pytest.raises(ValueError, match="tau"):
        run_pipeline(PipelineConfig.from_dict({"person_class_id": 9}), ds_dir)
    # disabling the tracker lifts the requirement
    cfg = PipelineConfig.from_dict({"tracker": {"enabled": False}})
    scene = run_pipeline(cfg, ds_dir)
    assert scene.frame_count == 3


def test_run_pipeline_without_semantic_sources(labelless_dir):
    with pytest.raises(ValueError, match="use_labels=false"):
        run_pipeline(PipelineConfig(), labelless_dir)
    cfg = PipelineConfig.from_dict({"fusion": {"use_labels": False}})
    scene = run_pipeline(cfg, labelless_dir)
    assert len(scene.objects) == 1
    assert scene.objects[0].class_label == 0


def test_run_pipeline_names_failing_frame(labelless_dir):
    cfg = PipelineConfig.from_dict({"fusion": {"use_labels": False}})
    (labelless_dir / "frames" / "000000.pose.txt").write_text(
        "1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 2\n")
    with pytest.raises(ValueError, match="frame 0"):
        run_pipeline(cfg, labelless_dir)


def test_export_scene_files(ds_dir, tmp_path):
    config = PipelineConfig.from_dict(RUN_CONFIG)
    out = tmp_path / "export"
    scene = run_pipeline(config, ds_dir, out)

    manifest = json.loads((out / MANIFEST_NAME).read_text())
    assert manifest["frame_count"] == 3
    assert manifest["fusion_params"]["alpha"] == 0.3
    assert len(manifest["objects"]) == len(scene.objects)
    assert manifest["reset_frames"] == [0]
    assert len(manifest["stats"]) == 3
    human_rows = [o for o in manifest["objects"] if "human_track_id" in o]
    assert len(human_rows) == 1 and human_rows[0]["human_track_id"] == 0
    assert human_rows[0]["class_name"] == "person"

    for o in scene.objects:
        ply = out / f"obj_{o.instance_id}.ply"
        assert ply.is_file()
        np.testing.assert_allclose(dataio.read_ply(ply), o.points, atol=0.01)
    assert (out / "scene.usda").is_file()
    text = (out / "scene.usda").read_text()
    assert text.startswith("#usda 1.0")
    assert 'custom string label = "person"' in text


def test_export_scene_cleans_up_after_failure(ds_dir, tmp_path):
    config = PipelineConfig.from_dict(RUN_CONFIG)
    scene = run_pipeline(config, ds_dir)
    out = tmp_path / "export"
    out.mkdir()
    (out / "scene.usda").mkdir()  # writing the USD file will fail
    with pytest.raises(OSError):
        export_scene(scene, out, {}, [])
    assert not (out / MANIFEST_NAME).exists()
    assert not list(out.glob("obj_*.ply"))


def test_cli_synth_and_run_round_trip(tmp_path, capsys):
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(room_spec()))
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(RUN_CONFIG))
    ds = tmp_path / "ds"

    assert cli.main(["synth", "--config", str(spec_path), "--out", str(ds),
                     "--seed", "11"]) == 0
    assert "wrote 3 frames" in capsys.readouterr().out

    out1, out2 = tmp_path / "out1", tmp_path / "out2"
    for out in (out1, out2):
        assert cli.main(["run", "--dataset", str(ds), "--config", str(cfg_path),
                         "--out", str(out)]) == 0
        assert "merged 3 frames" in capsys.readouterr().out
    assert (out1 / MANIFEST_NAME).read_bytes() == (out2 / MANIFEST_NAME).read_bytes()
    for ply in sorted(out1.glob("*.ply")):
        assert ply.read_bytes() == (out2 / ply.name).read_bytes()

    assert cli.main(["inspect", str(out1)]) == 0
    shown = capsys.readouterr().out
    assert "objects: " in shown and "total points:" in shown


def test_cli_run_no_labels_flag(labelless_dir, capsys):
    assert cli.main(["run", "--dataset", str(labelless_dir)]) == 1
    assert "use_labels" in capsys.readouterr().err
    assert cli.main(["run", "--dataset", str(labelless_dir), "--no-labels"]) == 0


def test_cli_eval_seg(tmp_path, capsys):
    rng = np.random.default_rng(1)
    truth = rng.integers(0, 4, (20, 20)).astype(np.int32)
    dataio.write_label_png(tmp_path / "truth.png", truth)
    dataio.write_label_png(tmp_path / "pred.png", truth)
    assert cli.main(["eval", "seg", "--pred", str(tmp_path / "pred.png"),
                     "--truth", str(tmp_path / "truth.png")]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["miou"] == 1.0 and out["pacc"] == 1.0


def test_cli_eval_cloud(tmp_path, capsys):
    rng = np.random.default_rng(2)
    pts = rng.uniform(0, 1000, (50, 3)).astype(np.float32).astype(np.float64)
    dataio.write_ply(tmp_path / "a.ply", pts)
    dataio.write_ply(tmp_path / "b.ply", pts)
    assert cli.main(["eval", "cloud", "--est", str(tmp_path / "a.ply"),
                     "--truth", str(tmp_path / "b.ply"), "--symmetric"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["mean_mm"] == 0.0 and out["points"] == 100


def test_cli_bench(ds_dir, tmp_path, capsys):
    bdir = tmp_path / "bench"
    assert cli.main(["bench", "--dataset", str(ds_dir), "--trials", "1",
                     "--out", str(bdir)]) == 0
    assert "count_factor" in capsys.readouterr().out
    assert (bdir / "bench.txt").is_file()
    rows = [json.loads(ln) for ln in (bdir / "bench.jsonl").read_text().splitlines()]
    assert rows[-1]["frame"] == "average"
    assert all("time_factor" in r for r in rows)


def test_cli_exit_codes(tmp_path, capsys):
    assert cli.main(["--help"]) == 0
    capsys.readouterr()
    assert cli.main([]) == 1  # usage error: no subcommand
    assert cli.main(["run", "--dataset", str(tmp_path / "missing")]) == 1
    assert "error:" in capsys.readouterr().err
    assert cli.main(["inspect", str(tmp_path)]) == 1

    bad_spec = tmp_path / "bad.json"
    bad_spec.write_text("{nope")
    assert cli.main(["synth", "--config", str(bad_spec),
                     "--out", str(tmp_path / "x")]) == 1


def test_cli_internal_errors_exit_two(monkeypatch, tmp_path, capsys):
    def boom(*a, **k):
        raise RuntimeError("wires crossed")

    monkeypatch.setattr("semscene.cli.run_pipeline", boom)
    assert cli.main(["run", "--dataset", str(tmp_path)]) == 2
    assert "internal error" in capsys.readouterr().err
