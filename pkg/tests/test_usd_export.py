import numpy as np
import pytest

from semscene.fusion import SceneModel, SegmentedCloud
from semscene.usd_export import export_usda


def cloud(pts, label, iid):
    return SegmentedCloud(np.asarray(pts, dtype=float), label, iid,
                          np.asarray(pts, dtype=float))


def test_export_usda_structure(tmp_path):
    scene = SceneModel()
    scene.objects = [cloud([[1000.0, 0.0, -500.0]], 2, 4),
                     cloud([[0.0, 250.0, 0.0], [50.0, 0.0, 0.0]], 7, 1)]
    path = tmp_path / "scene.usda"
    export_usda(scene, path, {2: "crate"})
    text = path.read_text()

    assert text.startswith("#usda 1.0\n")
    assert 'upAxis = "Y"' in text and "metersPerUnit = 1" in text
    # objects come out ordered by instance id, mm converted to meters
    assert text.index('"obj_1"') < text.index('"obj_4"')
    assert "point3f[] points = [(0, 0.25, 0), (0.05, 0, 0)]" in text
    assert "point3f[] points = [(1, 0, -0.5)]" in text
    assert 'custom string label = "crate"' in text
    assert 'custom string label = "7"' in text  # unnamed classes fall back to the id
    assert "custom int instanceId = 4" in text
    assert "\r" not in text


def test_export_usda_rejects_empty_scene(tmp_path):
    with pytest.raises(ValueError):
        export_usda(SceneModel(), tmp_path / "x.usda")
