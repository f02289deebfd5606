import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sarforge import (
    DegenerateFacetError,
    Mesh,
    MeshError,
    PrimitiveSpec,
    StlParseError,
    build_primitive,
    direction_from_angles,
    load_mesh_stl,
    merge_meshes,
    mesh_quality,
    save_mesh_stl,
)
from sarforge.constants import SPEED_OF_LIGHT


def test_direction_axis_cases():
    np.testing.assert_allclose(direction_from_angles(0, 0), [1, 0, 0], atol=1e-15)
    np.testing.assert_allclose(direction_from_angles(90, 0), [0, 1, 0], atol=1e-15)
    np.testing.assert_allclose(direction_from_angles(0, 90), [0, 0, 1], atol=1e-15)


def test_direction_wraps_azimuth():
    np.testing.assert_allclose(direction_from_angles(360 + 45, 10),
                               direction_from_angles(45, 10), atol=1e-12)


def test_direction_elevation_range():
    with pytest.raises(ValueError):
        direction_from_angles(0, 91)
    with pytest.raises(ValueError):
        direction_from_angles(0, -90.5)


@settings(max_examples=200, deadline=None)
@given(az=st.floats(-720, 720), el=st.floats(-90, 90))
def test_direction_unit_norm(az, el):
    d = direction_from_angles(az, el)
    assert abs(np.linalg.norm(d) - 1.0) <= 1e-12


def test_mesh_derived_quantities_consistent():
    m = build_primitive(PrimitiveSpec.prism(1, 2, 3))
    v0, v1, v2 = m.triangles()
    cr = np.cross(v1 - v0, v2 - v0)
    areas = 0.5 * np.linalg.norm(cr, axis=1)
    normals = cr / (2 * areas[:, None])
    cents = (v0 + v1 + v2) / 3
    assert np.allclose(areas, m.areas, rtol=1e-9)
    assert np.allclose(normals, m.normals, rtol=1e-9)
    assert np.allclose(cents, m.centroids, rtol=1e-9)
    assert np.allclose(np.linalg.norm(m.normals, axis=1), 1.0, atol=1e-12)


@pytest.mark.parametrize("spec", [
    PrimitiveSpec.box(1, 1, 10),
    PrimitiveSpec.box(0.3, 2, 0.7),
])
def test_closed_solid_divergence_closure(spec):
    m = build_primitive(spec)
    closure = (m.normals * m.areas[:, None]).sum(axis=0)
    assert np.linalg.norm(closure) <= 1e-9 * m.total_area()


def test_mesh_rejects_bad_input():
    with pytest.raises(MeshError):
        Mesh(np.zeros((2, 3)), np.array([[0, 1, 5]]))
    with pytest.raises(DegenerateFacetError) as ei:
        Mesh(np.array([[0., 0, 0], [1, 0, 0], [2, 0, 0]]), np.array([[0, 1, 2]]))
    assert ei.value.indices == [0]


def test_mesh_immutable():
    m = build_primitive(PrimitiveSpec.plate(1, 1))
    with pytest.raises(ValueError):
        m.vertices[0, 0] = 5.0


def test_translate_rotate():
    m = build_primitive(PrimitiveSpec.box(1, 2, 3))
    t = m.translated([1, -2, 0.5])
    assert np.allclose(t.centroids, m.centroids + [1, -2, 0.5])
    r = m.rotated_z(90)
    assert np.allclose(r.bounding_box()[0], [-1, -0.5, -1.5], atol=1e-12)
    assert np.allclose(sorted(r.areas), sorted(m.areas))


def test_mesh_quality_prism():
    m = build_primitive(PrimitiveSpec.prism(1, 1, 10))
    q = mesh_quality(m, 1e9)
    assert q.max_edge_m == pytest.approx(np.sqrt(101), rel=1e-12)
    assert q.max_edge_over_lambda == pytest.approx(33.5, abs=0.1)
    assert q.facet_count == 12
    assert q.exceeds_wavelength


def test_mesh_quality_plate_at_one_meter_wavelength():
    m = build_primitive(PrimitiveSpec.plate(1, 1))
    q = mesh_quality(m, 299.792458e6)   # lambda = 1 m exactly
    assert q.max_edge_over_lambda == pytest.approx(np.sqrt(2), rel=1e-12)


def test_mesh_quality_linear_in_frequency():
    m = build_primitive(PrimitiveSpec.box(0.4, 1.1, 2.2))
    r1 = mesh_quality(m, 1e9).max_edge_over_lambda
    r2 = mesh_quality(m, 2e9).max_edge_over_lambda
    assert r2 == pytest.approx(2 * r1, rel=1e-12)


def test_mesh_quality_errors():
    m = build_primitive(PrimitiveSpec.plate(1, 1))
    with pytest.raises(ValueError):
        mesh_quality(m, 0)


def test_content_hash_ignores_name_tracks_geometry():
    a = build_primitive(PrimitiveSpec.box(1, 1, 1))
    b = Mesh(a.vertices, a.faces, name="other")
    assert a.content_hash() == b.content_hash()
    assert a.content_hash() != a.translated([0, 0, 1e-9]).content_hash()


# ---------------------------------------------------------------------------
# STL
# ---------------------------------------------------------------------------

def test_stl_unit_right_triangle():
    stl = """solid tri
  facet normal 0 0 1
    outer loop
      vertex 0 0 0
      vertex 1 0 0
      vertex 0 1 0
    endloop
  endfacet
endsolid tri
"""
    m = load_mesh_stl(stl)
    assert m.facet_count == 1
    assert m.areas[0] == pytest.approx(0.5)
    assert np.allclose(m.normals[0], [0, 0, 1])


def test_stl_roundtrip_counts_and_bytes():
    m = build_primitive(PrimitiveSpec.prism(1, 1, 10))
    buf = io.StringIO()
    save_mesh_stl(m, buf)
    loaded = load_mesh_stl(buf.getvalue())
    assert loaded.facet_count == m.facet_count
    assert len(loaded.vertices) == len(m.vertices)
    assert np.array_equal(loaded.vertices, m.vertices)
    assert np.array_equal(loaded.faces, m.faces)
    buf2 = io.StringIO()
    save_mesh_stl(loaded, buf2)
    assert buf2.getvalue() == buf.getvalue()


def test_stl_roundtrip_preserves_awkward_floats(tmp_path):
    m = build_primitive(PrimitiveSpec.box(0.1, 1 / 3, np.pi)).rotated_z(13.7)
    p = tmp_path / "m.stl"
    save_mesh_stl(m, str(p))
    loaded = load_mesh_stl(str(p))
    assert np.array_equal(loaded.vertices, m.vertices)


def test_stl_truncated_file_errors_with_line():
    stl = "solid t\n  facet normal 0 0 1\n    outer loop\n      vertex 0 0 0\n"
    with pytest.raises(StlParseError) as ei:
        load_mesh_stl(stl)
    assert "truncated" in str(ei.value)


def test_stl_bad_coordinate_reports_line():
    stl = ("solid t\n  facet normal 0 0 1\n    outer loop\n"
           "      vertex 0 0 zero\n      vertex 1 0 0\n      vertex 0 1 0\n"
           "    endloop\n  endfacet\nendsolid t\n")
    with pytest.raises(StlParseError) as ei:
        load_mesh_stl(stl)
    assert ei.value.line == 4


def test_stl_degenerate_facet_listed():
    stl = ("solid t\n  facet normal 0 0 1\n    outer loop\n"
           "      vertex 0 0 0\n      vertex 1 0 0\n      vertex 2 0 0\n"
           "    endloop\n  endfacet\nendsolid t\n")
    with pytest.raises(DegenerateFacetError):
        load_mesh_stl(stl)


def test_merge_records_parts():
    a = build_primitive(PrimitiveSpec.plate(1, 1))
    b = build_primitive(PrimitiveSpec.box(1, 1, 1))
    m = merge_meshes([a, b], name="scene")
    assert m.parts["plate"] == (0, 2)
    assert m.parts["box"] == (2, 12)
    assert m.facet_count == 14
