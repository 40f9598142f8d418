"""Minimal USD-ASCII export of a scene model.

Writes a hand-rolled `.usda` subset: one Xform per object holding a Points
primitive plus custom `label` / `instanceId` attributes. Coordinates convert
from millimeters to meters. The subset opens in standard USD viewers and
needs no USD runtime.
"""

from __future__ import annotations

from .fusion import SceneModel


def _pt(x: float, y: float, z: float) -> str:
    return "(%.6g, %.6g, %.6g)" % (x / 1000.0, y / 1000.0, z / 1000.0)


def export_usda(scene: SceneModel, path, class_names: dict | None = None):
    """Write the scene's objects to ``path``; objects ordered by instance id."""
    objs = sorted(scene.objects, key=lambda o: o.instance_id)
    if not objs:
        raise ValueError("cannot export an empty scene")
    names = class_names or {}
    lines = [
        "#usda 1.0",
        "(",
        '    defaultPrim = "scene"',
        "    metersPerUnit = 1",
        '    upAxis = "Y"',
        ")",
        "",
        'def Xform "scene"',
        "{",
    ]
    for o in objs:
        label = names.get(o.class_label, str(o.class_label))
        pts = ", ".join(_pt(*p) for p in o.points)
        lines += [
            f'    def Xform "obj_{o.instance_id}"',
            "    {",
            f'        custom string label = "{label}"',
            f"        custom int instanceId = {o.instance_id}",
            "",
            '        def Points "points"',
            "        {",
            f"            point3f[] points = [{pts}]",
            "        }",
            "    }",
        ]
    lines += ["}", ""]
    with open(path, "w", newline="\n") as f:
        f.write("\n".join(lines))
