import numpy as np
import pytest

from sarforge import (
    InvalidSpecError,
    PrimitiveSpec,
    build_cone,
    build_cylinder,
    build_primitive,
    build_target,
    build_wall_on_ground,
)


def test_prism_facets_and_area():
    m = build_primitive(PrimitiveSpec.prism(1, 1, 10))
    assert m.facet_count == 12
    assert m.total_area() == pytest.approx(42.0)


def test_plate_two_facets_unit_area():
    m = build_primitive(PrimitiveSpec.plate(1, 1))
    assert m.facet_count == 2
    assert m.total_area() == pytest.approx(1.0)
    assert np.allclose(m.normals, [[0, 0, 1], [0, 0, 1]])


def test_plate_subdivision():
    m = build_primitive(PrimitiveSpec.plate(10, 10, max_edge=0.5))
    assert m.facet_count == 20 * 20 * 2
    assert m.total_area() == pytest.approx(100.0)


def test_wall_on_ground_union():
    m = build_wall_on_ground(4, 0.2, 2, 10, 10, max_edge=0.5)
    gidx = m.part_facets("ground")
    widx = m.part_facets("wall")
    assert len(gidx) == 800 and len(widx) == 12
    assert np.allclose(m.normals[gidx], [0, 0, 1])
    # recompute normals constructively from vertices
    v0, v1, v2 = m.triangles()
    cr = np.cross(v1 - v0, v2 - v0)
    n = cr / np.linalg.norm(cr, axis=1)[:, None]
    assert np.allclose(n[gidx], [0, 0, 1], atol=1e-12)
    # wall stands on the ground plane
    assert m.vertices[:, 2].min() == 0.0
    assert m.vertices[m.faces[widx]].reshape(-1, 3)[:, 2].max() == pytest.approx(2.0)


def test_nonpositive_dimension_rejected():
    with pytest.raises(InvalidSpecError):
        build_primitive(PrimitiveSpec.box(1, -1, 1))
    with pytest.raises(InvalidSpecError):
        build_primitive(PrimitiveSpec.plate(0, 1))
    with pytest.raises(InvalidSpecError):
        build_cylinder(0.5, 1.0, sections=2)


def test_unknown_primitive_rejected():
    with pytest.raises(InvalidSpecError):
        build_primitive(PrimitiveSpec("sphere", {}))


def test_cylinder_cone_closure():
    for m in (build_cylinder(0.4, 2.0, 16, axis="x"),
              build_cone(0.3, 1.0, 16, axis="z")):
        closure = (m.normals * m.areas[:, None]).sum(axis=0)
        assert np.linalg.norm(closure) <= 1e-9 * m.total_area()


def test_msl_bounding_box_under_8m():
    m = build_target("MSL", "coarse")
    lo, hi = m.bounding_box()
    assert np.all(hi - lo <= 8.0)


def test_msl_missile_subsolid_dimensions():
    m = build_target("MSL", "coarse")
    assert "missile" in m.parts
    idx = m.part_facets("missile")
    verts = m.vertices[m.faces[idx]].reshape(-1, 3)
    length = verts[:, 0].max() - verts[:, 0].min()
    diameter = verts[:, 1].max() - verts[:, 1].min()
    assert length == pytest.approx(4.0, abs=1e-9)
    assert diameter == pytest.approx(0.5, abs=1e-9)


def test_msl_base_dimensions():
    m = build_target("MSL")
    idx = m.part_facets("base")
    verts = m.vertices[m.faces[idx]].reshape(-1, 3)
    dims = verts.max(axis=0) - verts.min(axis=0)
    assert np.allclose(dims, [6.5, 3.0, 1.0])


def test_mbt_vs_apc_distinct():
    mbt = build_target("MBT", "coarse")
    apc = build_target("APC", "coarse")
    assert mbt.facet_count != apc.facet_count
    assert "canon" in mbt.parts
    assert "canon" not in apc.parts


@pytest.mark.parametrize("kind", ["APC", "MBT", "STR", "MSL"])
def test_all_targets_build_and_have_antenna(kind):
    m = build_target(kind, "coarse")
    assert m.facet_count > 10
    assert "antenna" in m.parts
    assert m.vertices[:, 2].min() >= -1e-12   # nothing below the ground plane


def test_str_has_battery_and_array():
    m = build_target("STR")
    assert "stinger_battery" in m.parts
    assert "guidance_array" in m.parts


def test_detail_levels_change_faceting():
    coarse = build_target("MSL", "coarse")
    fine = build_target("MSL", "fine")
    assert fine.facet_count > coarse.facet_count


def test_unknown_target_rejected():
    with pytest.raises(InvalidSpecError):
        build_target("TANKETTE")
