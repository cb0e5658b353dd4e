from __future__ import annotations

import json
import math
import re
import xml.etree.ElementTree as ET

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roomforge.constraints import ConstraintSpec, PlacementTarget
from roomforge.export import (
    Provenance,
    SceneError,
    export_scene,
    generate,
    import_scene,
    regenerate,
    scene_catalog,
)
from roomforge.render import render_svg
from roomforge.report import class_stats, format_report
from roomforge.scene import Layout, Opening, PlacedInstance, rect_boundary

SVG = "{http://www.w3.org/2000/svg}"


def test_empty_room_document():
    doc = json.loads(export_scene(Layout("bedroom", rect_boundary(3, 3))))
    assert doc["objects"] == [] and doc["type"] == "bedroom" and doc["provenance"] is None


def test_export_import_export_is_stable(params):
    layout, prov = generate(params, 3)
    first = export_scene(layout, params.catalog, prov)
    again, prov2 = import_scene(first)
    assert export_scene(again, params.catalog, prov2) == first


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_idempotence_property(params, seed):
    layout, prov = generate(params, seed)
    first = export_scene(layout, params.catalog, prov)
    assert export_scene(import_scene(first)[0], params.catalog, import_scene(first)[1]) == first


def test_regenerate_reproduces_bytes(params):
    spec = ConstraintSpec(room_type="office", placements=(PlacementTarget("desk", (1.0, 0.5), 0.3),))
    layout, prov = generate(params, 17, spec)
    data = export_scene(layout, params.catalog, prov)
    _, prov_back = import_scene(data)
    assert export_scene(regenerate(params, prov_back), params.catalog, prov_back) == data


def test_regenerate_rejects_other_params(params):
    with pytest.raises(SceneError, match="digest"):
        regenerate(params, Provenance("0" * 64, 1))


def test_yaw_near_full_turn_written_as_zero():
    lay = Layout("bedroom", rect_boundary(3, 3), (PlacedInstance("x", (1, 0, 1), 2 * math.pi - 1e-6),))
    assert json.loads(export_scene(lay))["objects"][0]["yaw"] == 0.0


@pytest.mark.parametrize("data, needle", [(b"{", "parse error"), (b'{"format": "other"}', "not a scene"),
                                          (b'{"format": "roomforge-scene", "version": 9}', "version")])
def test_bad_scene_documents(data, needle):
    with pytest.raises(SceneError, match=needle):
        import_scene(data)


def test_scene_catalog_from_embedded_dims(params):
    layout, prov = generate(params, 4)
    cat = scene_catalog(export_scene(layout, params.catalog, prov))
    for inst in layout.instances:
        assert cat[inst.model_id] == params.catalog[inst.model_id]


# --- rendering --------------------------------------------------------------------------------


def test_empty_room_renders_outline_and_legend(catalog):
    root = ET.fromstring(render_svg(Layout("bedroom", rect_boundary(4, 3)), catalog))
    assert len(root.findall(f"{SVG}polygon")) == 1
    assert root.findall(f"{SVG}rect[@class='instance']") == []
    assert any(t.text == "bedroom" for t in root.iter(f"{SVG}text"))


def test_rotated_bed_transform(catalog):
    bed = PlacedInstance("bed_double", (2.0, 0.0, 1.5), math.pi / 6)
    root = ET.fromstring(render_svg(Layout("bedroom", rect_boundary(4, 3), (bed,)), catalog, scale=50))
    (rect,) = root.findall(f"{SVG}rect[@class='instance']")
    m = re.fullmatch(r"translate\(([-\d.]+) ([-\d.]+)\) rotate\(([-\d.]+)\)", rect.get("transform"))
    tx, tz, deg = map(float, m.groups())
    assert (tx, tz) == pytest.approx((20 + 2.0 * 50, 20 + 1.5 * 50))
    assert deg == pytest.approx(30.0)
    assert float(rect.get("width")) == pytest.approx(2.0 * 50)


def test_render_deterministic_and_complete(params):
    layout, _ = generate(params, 5)
    a, b = render_svg(layout, params.catalog), render_svg(layout, params.catalog)
    assert a == b
    root = ET.fromstring(a)
    assert len(root.findall(f"{SVG}rect[@class='instance']")) == len(layout.instances)


def test_render_draws_doors_and_windows(catalog):
    lay = Layout("bedroom", rect_boundary(4, 3), (), (Opening("door", 0, 1.0, 0.9), Opening("window", 1, 1.5, 1.0, 0.9, 1.2)))
    root = ET.fromstring(render_svg(lay, catalog))
    assert root.findall(f"{SVG}path[@class='door-swing']")
    assert root.findall(f"{SVG}line[@class='window']")


def test_render_rejects_bad_scale(catalog):
    with pytest.raises(ValueError):
        render_svg(Layout("bedroom", rect_boundary(4, 3)), catalog, scale=0)


# --- report -----------------------------------------------------------------------------------------


def test_report_values(params):
    stats = {s.cls: s for s in class_stats(params)}
    assert stats["toilet"].p_edge == pytest.approx(1.0)
    assert stats["plant"].p_edge == pytest.approx(0.0)
    assert stats["coffee_table"].p_aligned == pytest.approx(0.9, abs=0.05)
    text = format_report(list(stats.values()))
    assert text.splitlines()[0].startswith("class")
    assert "toilet" in text
