"""Parametric construction of PEC primitives and ground-target models.

Targets are composed from boxes, N-gon faceted cylinders and cones
(no CAD assets), sized close to real-life vehicles.  Every classifiable
feature of a target class is a named sub-solid recorded in Mesh.parts.
Exact proportions are not dictated by anything upstream, so they live in
TARGET_DIMENSIONS where scene files can record them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Mesh, MeshError, merge_meshes


class InvalidSpecError(MeshError):
    """Primitive/target specification rejected (non-positive dims, unknown kind)."""


class _MeshBuilder:
    """Accumulates triangles, welding exactly-equal vertices in first-use
    order (keeps STL save/load round trips byte-stable)."""

    def __init__(self):
        self.vertices = []
        self._index = {}
        self.faces = []

    def _vid(self, p):
        key = (float(p[0]), float(p[1]), float(p[2]))
        idx = self._index.get(key)
        if idx is None:
            idx = len(self.vertices)
            self.vertices.append(key)
            self._index[key] = idx
        return idx

    def tri(self, a, b, c):
        self.faces.append((self._vid(a), self._vid(b), self._vid(c)))

    def quad(self, a, b, c, d):
        # split along the a-c diagonal, consistent winding
        self.tri(a, b, c)
        self.tri(a, c, d)

    def mesh(self, name):
        return Mesh(np.array(self.vertices, float), np.array(self.faces, int), name)


def _check_positive(**dims):
    for k, v in dims.items():
        if not v > 0:
            raise InvalidSpecError(f"dimension {k}={v} must be positive")


def build_plate(width, length, max_edge=None, z=0.0, name="plate"):
    """Single-sided rectangular plate in the z-plane, normal +z, centered
    on the origin.  Subdivided to max_edge when given (else 2 facets)."""
    _check_positive(width=width, length=length)
    if max_edge is not None:
        _check_positive(max_edge=max_edge)
        nx = max(1, int(np.ceil(width / max_edge)))
        ny = max(1, int(np.ceil(length / max_edge)))
    else:
        nx = ny = 1
    b = _MeshBuilder()
    xs = np.linspace(-width / 2, width / 2, nx + 1)
    ys = np.linspace(-length / 2, length / 2, ny + 1)
    for i in range(nx):
        for j in range(ny):
            b.quad(
                (xs[i], ys[j], z),
                (xs[i + 1], ys[j], z),
                (xs[i + 1], ys[j + 1], z),
                (xs[i], ys[j + 1], z),
            )
    return b.mesh(name)


def build_box(width, length, height, center=(0.0, 0.0, 0.0), name="box"):
    """Closed rectangular box (12 facets) with outward normals.

    width, length, height extend along x, y, z; centered on `center`.
    """
    _check_positive(width=width, length=length, height=height)
    cx, cy, cz = center
    x0, x1 = cx - width / 2, cx + width / 2
    y0, y1 = cy - length / 2, cy + length / 2
    z0, z1 = cz - height / 2, cz + height / 2
    b = _MeshBuilder()
    b.quad((x0, y0, z0), (x0, y0, z1), (x0, y1, z1), (x0, y1, z0))  # -x
    b.quad((x1, y0, z0), (x1, y1, z0), (x1, y1, z1), (x1, y0, z1))  # +x
    b.quad((x0, y0, z0), (x1, y0, z0), (x1, y0, z1), (x0, y0, z1))  # -y
    b.quad((x0, y1, z0), (x0, y1, z1), (x1, y1, z1), (x1, y1, z0))  # +y
    b.quad((x0, y0, z0), (x0, y1, z0), (x1, y1, z0), (x1, y0, z0))  # -z
    b.quad((x0, y0, z1), (x1, y0, z1), (x1, y1, z1), (x0, y1, z1))  # +z
    return b.mesh(name)


_AXES = {
    "x": (np.array([0.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0])),
    "y": (np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])),
    "z": (np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0])),
}


def build_cylinder(radius, length, sections=16, axis="z", center=(0.0, 0.0, 0.0),
                   name="cylinder"):
    """Closed N-gon faceted cylinder, axis through `center`."""
    _check_positive(radius=radius, length=length)
    if sections < 3:
        raise InvalidSpecError(f"sections={sections} must be >= 3")
    u, v, w = _AXES[axis]
    c = np.asarray(center, float)
    ang = 2 * np.pi * np.arange(sections) / sections
    rim = c + radius * (np.outer(np.cos(ang), u) + np.outer(np.sin(ang), v))
    lo = rim - (length / 2) * w
    hi = rim + (length / 2) * w
    b = _MeshBuilder()
    for i in range(sections):
        j = (i + 1) % sections
        b.quad(lo[i], lo[j], hi[j], hi[i])  # outward side
    for i in range(1, sections - 1):
        b.tri(hi[0], hi[i], hi[i + 1])       # top cap (+w)
        b.tri(lo[0], lo[i + 1], lo[i])       # bottom cap (-w)
    return b.mesh(name)


def build_cone(radius, length, sections=16, axis="z", base_center=(0.0, 0.0, 0.0),
               name="cone"):
    """Closed cone: N-gon base at base_center, apex at base_center + length*axis."""
    _check_positive(radius=radius, length=length)
    if sections < 3:
        raise InvalidSpecError(f"sections={sections} must be >= 3")
    u, v, w = _AXES[axis]
    c = np.asarray(base_center, float)
    apex = c + length * w
    ang = 2 * np.pi * np.arange(sections) / sections
    rim = c + radius * (np.outer(np.cos(ang), u) + np.outer(np.sin(ang), v))
    b = _MeshBuilder()
    for i in range(sections):
        j = (i + 1) % sections
        b.tri(rim[i], rim[j], apex)
    for i in range(1, sections - 1):
        b.tri(rim[0], rim[i + 1], rim[i])    # base cap (-w)
    return b.mesh(name)


def build_strip_antenna(height, width=0.02, base=(0.0, 0.0, 0.0), name="antenna"):
    """Whip antenna modeled as a thin vertical rectangular strip (PO is a
    surface method; wires are out of reach).  Single-sided, normal +x."""
    _check_positive(height=height, width=width)
    bx, by, bz = base
    b = _MeshBuilder()
    b.quad(
        (bx, by - width / 2, bz),
        (bx, by + width / 2, bz),
        (bx, by + width / 2, bz + height),
        (bx, by - width / 2, bz + height),
    )
    return b.mesh(name)


def build_wall_on_ground(wall_length, wall_thickness, wall_height,
                         ground_x, ground_y, max_edge=0.5, name="wall_on_ground"):
    """Wall box standing on a finite PEC ground patch at z = 0.

    The wall's long side extends along y and faces the +x direction, so a
    transmitter near azimuth 0 illuminates it broadside and casts a
    shadow toward -x.
    """
    _check_positive(wall_length=wall_length, wall_thickness=wall_thickness,
                    wall_height=wall_height, ground_x=ground_x, ground_y=ground_y)
    ground = build_plate(ground_x, ground_y, max_edge=max_edge, name="ground")
    wall = build_box(wall_thickness, wall_length, wall_height,
                     center=(0.0, 0.0, wall_height / 2), name="wall")
    return merge_meshes([ground, wall], name)


@dataclass(frozen=True)
class PrimitiveSpec:
    """Specification for build_primitive: kind in {plate, box, wall_on_ground}
    with dims in meters."""

    kind: str
    dims: dict = field(default_factory=dict)

    @classmethod
    def plate(cls, width, length, max_edge=None):
        d = {"width": width, "length": length}
        if max_edge is not None:
            d["max_edge"] = max_edge
        return cls("plate", d)

    @classmethod
    def box(cls, width, length, height):
        return cls("box", {"width": width, "length": length, "height": height})

    # the paper's long rectangular prism is just a box
    prism = box

    @classmethod
    def wall_on_ground(cls, wall_length, wall_thickness, wall_height,
                       ground_x, ground_y, max_edge=0.5):
        return cls("wall_on_ground", {
            "wall_length": wall_length, "wall_thickness": wall_thickness,
            "wall_height": wall_height, "ground_x": ground_x,
            "ground_y": ground_y, "max_edge": max_edge,
        })


def build_primitive(spec):
    if spec.kind == "plate":
        return build_plate(**spec.dims)
    if spec.kind in ("box", "prism"):
        return build_box(**spec.dims, name=spec.kind)
    if spec.kind == "wall_on_ground":
        return build_wall_on_ground(**spec.dims)
    raise InvalidSpecError(f"unknown primitive kind {spec.kind!r}")


# ---------------------------------------------------------------------------
# Ground-target classes
# ---------------------------------------------------------------------------

TARGET_KINDS = ("APC", "MBT", "STR", "MSL")

#: Plausible vehicle dimensions (m) used by the builders; recorded in
#: scene sidecars so datasets are self-describing.
TARGET_DIMENSIONS = {
    "APC": {"hull": (5.2, 2.7, 1.2), "cab": (3.0, 2.3, 0.7), "antenna_height": 1.6},
    "MBT": {"hull": (6.8, 3.4, 1.1), "turret_radius": 1.3, "turret_height": 0.7,
            "canon_radius": 0.09, "canon_length": 4.2,
            "wheel_radius": 0.38, "wheel_width": 0.3, "wheels_per_side": 5,
            "antenna_height": 1.4},
    "STR": {"hull": (5.0, 2.6, 1.3), "turret_radius": 0.9, "turret_height": 0.5,
            "missile_radius": 0.07, "missile_length": 1.5,
            "array_panel": (1.2, 1.2, 0.08), "antenna_height": 1.5},
    "MSL": {"base": (6.5, 3.0, 1.0), "cab": (1.4, 2.8, 1.0),
            "missile_length": 4.0, "missile_diameter": 0.5,
            "cone_fraction": 0.2, "antenna_height": 1.5},
}


def _sections(detail):
    if detail == "coarse":
        return 16
    if detail == "fine":
        return 32
    raise InvalidSpecError(f"unknown detail level {detail!r}")


def _build_apc(detail):
    d = TARGET_DIMENSIONS["APC"]
    hw, hl, hh = d["hull"]
    cw, cl, ch = d["cab"]
    hull = build_box(hw, hl, hh, center=(0, 0, hh / 2), name="hull")
    cab = build_box(cw, cl, ch, center=(-0.6, 0, hh + ch / 2), name="body_top")
    antenna = build_strip_antenna(d["antenna_height"],
                                  base=(hw / 2 - 0.2, hl / 2 - 0.3, hh),
                                  name="antenna")
    return [hull, cab, antenna]


def _build_mbt(detail):
    d = TARGET_DIMENSIONS["MBT"]
    n = _sections(detail)
    hw, hl, hh = d["hull"]
    clearance = 2 * d["wheel_radius"] * 0.8
    parts = [build_box(hw, hl, hh, center=(0, 0, clearance + hh / 2), name="hull")]
    parts.append(build_cylinder(d["turret_radius"], d["turret_height"], n, axis="z",
                                center=(-0.3, 0, clearance + hh + d["turret_height"] / 2),
                                name="turret"))
    z_canon = clearance + hh + d["turret_height"] / 2
    parts.append(build_cylinder(d["canon_radius"], d["canon_length"], n, axis="x",
                                center=(d["turret_radius"] + d["canon_length"] / 2 - 0.3,
                                        0, z_canon),
                                name="canon"))
    k = d["wheels_per_side"]
    xs = np.linspace(-hw / 2 + 0.6, hw / 2 - 0.6, k)
    wheels = []
    for side in (-1, 1):
        for x in xs:
            wheels.append(build_cylinder(
                d["wheel_radius"], d["wheel_width"], max(12, n // 2), axis="y",
                center=(x, side * (hl / 2 + d["wheel_width"] / 2), d["wheel_radius"]),
                name="wheel"))
    parts.append(merge_meshes(wheels, name="wheels"))
    parts.append(build_strip_antenna(d["antenna_height"],
                                     base=(-hw / 2 + 0.3, hl / 2 - 0.2, clearance + hh),
                                     name="antenna"))
    return parts


def _build_str(detail):
    d = TARGET_DIMENSIONS["STR"]
    n = _sections(detail)
    hw, hl, hh = d["hull"]
    parts = [build_box(hw, hl, hh, center=(0, 0, hh / 2), name="hull")]
    zt = hh + d["turret_height"] / 2
    parts.append(build_cylinder(d["turret_radius"], d["turret_height"], n, axis="z",
                                center=(0.5, 0, zt), name="turret"))
    # battery of four stinger missiles in a 2x2 pack on the turret
    tubes = []
    z0 = hh + d["turret_height"]
    for dy in (-0.22, 0.22):
        for dz in (0.15, 0.45):
            body = build_cylinder(d["missile_radius"], d["missile_length"] * 0.8,
                                  max(8, n // 2), axis="x",
                                  center=(0.5, dy, z0 + dz), name="tube")
            tip = build_cone(d["missile_radius"], d["missile_length"] * 0.2,
                             max(8, n // 2), axis="x",
                             base_center=(0.5 + d["missile_length"] * 0.4, dy, z0 + dz),
                             name="tip")
            tubes.extend([body, tip])
    parts.append(merge_meshes(tubes, name="stinger_battery"))
    pw, pl, pt = d["array_panel"]
    panel = build_box(pt, pw, pl,
                      center=(-hw / 2 + 0.4, 0, hh + pl / 2 + 0.1),
                      name="guidance_array")
    parts.append(panel)
    parts.append(build_strip_antenna(d["antenna_height"],
                                     base=(hw / 2 - 0.2, -hl / 2 + 0.2, hh),
                                     name="antenna"))
    return parts


def _build_msl(detail):
    d = TARGET_DIMENSIONS["MSL"]
    n = _sections(detail)
    bw, bl, bh = d["base"]
    cw, cl, ch = d["cab"]
    parts = [build_box(bw, bl, bh, center=(0, 0, bh / 2), name="base")]
    cab_x = bw / 2 - cw / 2
    parts.append(build_box(cw, cl, ch, center=(cab_x, 0, bh + ch / 2), name="cab"))
    # big missile on the trolley: cylinder + nose cone, total length 4.0 m
    r = d["missile_diameter"] / 2
    lc = d["missile_length"] * (1 - d["cone_fraction"])
    ln = d["missile_length"] * d["cone_fraction"]
    zm = bh + r + 0.15
    x_tail = -bw / 2 + 0.6
    body = build_cylinder(r, lc, n, axis="x",
                          center=(x_tail + lc / 2, 0, zm), name="missile_body")
    nose = build_cone(r, ln, n, axis="x",
                      base_center=(x_tail + lc, 0, zm), name="missile_nose")
    parts.append(merge_meshes([body, nose], name="missile"))
    # communication antenna on a cab corner
    parts.append(build_strip_antenna(d["antenna_height"],
                                     base=(bw / 2 - 0.15, cl / 2 - 0.1, bh + ch),
                                     name="antenna"))
    return parts


_BUILDERS = {"APC": _build_apc, "MBT": _build_mbt, "STR": _build_str,
             "MSL": _build_msl}


def build_target(kind, detail="coarse"):
    """Composite faceted PEC model of one of the four target classes.

    kind in {APC, MBT, STR, MSL}; detail in {coarse, fine} controls the
    cylinder/cone faceting.  Classifiable features are recorded as named
    parts of the returned mesh.
    """
    kind = str(kind).upper()
    if kind not in _BUILDERS:
        raise InvalidSpecError(f"unknown target kind {kind!r}; expected one of {TARGET_KINDS}")
    return merge_meshes(_BUILDERS[kind](detail), name=kind)
