"""Triangular-facet PEC surface meshes.

Coordinate frame: x-y is the ground plane, z points up.  Azimuth is
measured counter-clockwise from +x in the ground plane, elevation from
the ground plane toward +z.  Directions ("Vector3") are plain numpy
arrays of shape (3,); all lengths are meters, frequencies Hz.

A Mesh stores shared vertices plus int index triples per facet; facet
normals, areas and centroids are derived on construction and are always
consistent with the vertices.  Meshes are immutable after construction
(transforms return new meshes), so they are safe to share across
workers.
"""

from __future__ import annotations

import hashlib
import io
from dataclasses import dataclass, field

import numpy as np

from .constants import SPEED_OF_LIGHT


class MeshError(Exception):
    """Invalid mesh topology or geometry."""


class StlParseError(MeshError):
    """Malformed ASCII STL input; carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DegenerateFacetError(MeshError):
    """One or more facets have (near-)zero area."""

    def __init__(self, indices):
        self.indices = list(indices)
        super().__init__(f"degenerate (zero-area) facets at indices {self.indices}")


_DEGENERATE_AREA = 1e-14  # m^2


def direction_from_angles(azimuth_deg, elevation_deg):
    """Unit direction for (azimuth, elevation) in degrees.

    Returns (cos el * cos az, cos el * sin az, sin el).  Azimuth wraps
    mod 360; elevation must lie in [-90, 90].
    """
    el = np.asarray(elevation_deg, dtype=float)
    if np.any(el < -90.0) or np.any(el > 90.0):
        raise ValueError(f"elevation {elevation_deg} outside [-90, 90]")
    az = np.deg2rad(np.asarray(azimuth_deg, dtype=float))
    el = np.deg2rad(el)
    out = np.stack(
        [np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)], axis=-1
    )
    return out


@dataclass(frozen=True)
class Facet:
    """Per-facet view: vertex indices plus derived quantities."""

    vertex_indices: tuple
    normal: np.ndarray
    area: float
    centroid: np.ndarray


@dataclass
class MeshQualityReport:
    max_edge_m: float
    max_edge_over_lambda: float
    facet_count: int
    exceeds_wavelength: bool


class Mesh:
    """Immutable triangular surface mesh.

    Parameters
    ----------
    vertices : (n, 3) float array
    faces : (m, 3) int array of vertex indices
    name : str
    parts : optional dict part_name -> (start_facet, facet_count), used
        by the parametric target builders to record sub-solids.
    """

    def __init__(self, vertices, faces, name="mesh", parts=None):
        vertices = np.ascontiguousarray(vertices, dtype=np.float64)
        faces = np.ascontiguousarray(faces, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != 3:
            raise MeshError(f"vertices must be (n, 3), got {vertices.shape}")
        if faces.ndim != 2 or faces.shape[1] != 3:
            raise MeshError(f"faces must be (m, 3), got {faces.shape}")
        if not np.all(np.isfinite(vertices)):
            raise MeshError("non-finite vertex coordinates")
        if faces.size and (faces.min() < 0 or faces.max() >= len(vertices)):
            raise MeshError("facet vertex index out of range")

        self.vertices = vertices
        self.faces = faces
        self.name = name
        self.parts = dict(parts) if parts else {}

        v0 = vertices[faces[:, 0]]
        v1 = vertices[faces[:, 1]]
        v2 = vertices[faces[:, 2]]
        cr = np.cross(v1 - v0, v2 - v0)
        two_area = np.linalg.norm(cr, axis=1)
        bad = np.nonzero(two_area < 2 * _DEGENERATE_AREA)[0]
        if bad.size:
            raise DegenerateFacetError(bad)
        self.areas = 0.5 * two_area
        self.normals = cr / two_area[:, None]
        self.centroids = (v0 + v1 + v2) / 3.0

        self.vertices.flags.writeable = False
        self.faces.flags.writeable = False
        self.areas.flags.writeable = False
        self.normals.flags.writeable = False
        self.centroids.flags.writeable = False

    @property
    def facet_count(self):
        return len(self.faces)

    def facet(self, i):
        return Facet(
            vertex_indices=tuple(int(k) for k in self.faces[i]),
            normal=self.normals[i],
            area=float(self.areas[i]),
            centroid=self.centroids[i],
        )

    def triangles(self):
        """Corner coordinates as three (m, 3) arrays (v0, v1, v2)."""
        return (
            self.vertices[self.faces[:, 0]],
            self.vertices[self.faces[:, 1]],
            self.vertices[self.faces[:, 2]],
        )

    def total_area(self):
        return float(self.areas.sum())

    def bounding_box(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def max_edge_length(self):
        v0, v1, v2 = self.triangles()
        e = np.concatenate(
            [
                np.linalg.norm(v1 - v0, axis=1),
                np.linalg.norm(v2 - v1, axis=1),
                np.linalg.norm(v0 - v2, axis=1),
            ]
        )
        return float(e.max())

    def content_hash(self):
        """Digest of the geometry (vertices + faces), independent of name."""
        h = hashlib.sha256()
        h.update(self.vertices.tobytes())
        h.update(self.faces.astype("<i8").tobytes())
        return h.hexdigest()[:16]

    def translated(self, offset, name=None):
        off = np.asarray(offset, dtype=float)
        return Mesh(self.vertices + off, self.faces, name or self.name, self.parts)

    def rotated_z(self, angle_deg, name=None):
        """Rotate about the +z axis through the origin (CCW, degrees)."""
        a = np.deg2rad(angle_deg)
        r = np.array(
            [[np.cos(a), -np.sin(a), 0.0], [np.sin(a), np.cos(a), 0.0], [0.0, 0.0, 1.0]]
        )
        return Mesh(self.vertices @ r.T, self.faces, name or self.name, self.parts)

    def part_facets(self, part):
        start, count = self.parts[part]
        return np.arange(start, start + count)

    def submesh(self, facet_indices, name=None):
        """New mesh keeping only the given facets (vertices re-welded)."""
        faces = self.faces[facet_indices]
        used, inverse = np.unique(faces, return_inverse=True)
        return Mesh(self.vertices[used], inverse.reshape(faces.shape),
                    name or self.name)


def merge_meshes(meshes, name="merged"):
    """Concatenate meshes into one, recording each input as a part.

    Part names come from the input mesh names; duplicates get a numeric
    suffix.
    """
    if not meshes:
        raise MeshError("cannot merge an empty list of meshes")
    verts, faces, parts = [], [], {}
    v_off = f_off = 0
    for m in meshes:
        verts.append(m.vertices)
        faces.append(m.faces + v_off)
        pname = m.name
        k = 2
        while pname in parts:
            pname = f"{m.name}_{k}"
            k += 1
        parts[pname] = (f_off, m.facet_count)
        v_off += len(m.vertices)
        f_off += m.facet_count
    return Mesh(np.vstack(verts), np.vstack(faces), name, parts)


def mesh_quality(mesh, frequency_hz):
    """Edge length relative to the wavelength at frequency_hz.

    PO with analytic facet phase integrals tolerates facets much larger
    than a wavelength on flat faces; the report flags
    max_edge_over_lambda > 1 anyway since curvature approximation
    degrades there.
    """
    if frequency_hz <= 0:
        raise ValueError("frequency must be positive")
    if mesh.facet_count == 0:
        raise MeshError("empty mesh")
    max_edge = mesh.max_edge_length()
    ratio = max_edge * frequency_hz / SPEED_OF_LIGHT
    return MeshQualityReport(
        max_edge_m=max_edge,
        max_edge_over_lambda=ratio,
        facet_count=mesh.facet_count,
        exceeds_wavelength=ratio > 1.0,
    )


# ---------------------------------------------------------------------------
# ASCII STL
# ---------------------------------------------------------------------------

def _fmt(x):
    return repr(float(x))


def save_mesh_stl(mesh, path_or_file):
    """Write ASCII STL.  Coordinates use shortest round-trip formatting,
    so save -> load -> save is byte-stable."""
    own = False
    if isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__"):
        f = open(path_or_file, "w", newline="\n")
        own = True
    else:
        f = path_or_file
    try:
        f.write(f"solid {mesh.name}\n")
        v0, v1, v2 = mesh.triangles()
        for i in range(mesh.facet_count):
            n = mesh.normals[i]
            f.write(f"  facet normal {_fmt(n[0])} {_fmt(n[1])} {_fmt(n[2])}\n")
            f.write("    outer loop\n")
            for v in (v0[i], v1[i], v2[i]):
                f.write(f"      vertex {_fmt(v[0])} {_fmt(v[1])} {_fmt(v[2])}\n")
            f.write("    endloop\n")
            f.write("  endfacet\n")
        f.write(f"endsolid {mesh.name}\n")
    finally:
        if own:
            f.close()


def load_mesh_stl(source):
    """Parse ASCII STL into a Mesh.

    Accepts a path, file object, str or bytes.  Stored facet normals are
    ignored (recomputed from vertices); duplicate vertices are welded by
    exact coordinate match in first-seen order, so meshes built by this
    package round-trip with identical vertex/facet counts and order.

    Raises StlParseError with a line number on malformed input and
    DegenerateFacetError listing zero-area facets.
    """
    import os

    if isinstance(source, bytes):
        text = source.decode("ascii", errors="replace")
    elif isinstance(source, str) and "\n" not in source and (
            os.path.exists(source) or not source.lstrip().startswith("solid")):
        with open(source, "r") as f:
            text = f.read()
    elif hasattr(source, "read"):
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("ascii", errors="replace")
    elif hasattr(source, "__fspath__"):
        with open(source, "r") as f:
            text = f.read()
    else:
        text = source

    lines = text.splitlines()
    name = "mesh"
    vertices = []
    vertex_index = {}
    faces = []
    cur = None
    in_loop = False
    saw_endsolid = False

    def vert_id(xyz, lineno):
        key = xyz
        idx = vertex_index.get(key)
        if idx is None:
            idx = len(vertices)
            vertices.append(xyz)
            vertex_index[key] = idx
        return idx

    for lineno, raw in enumerate(lines, start=1):
        tokens = raw.split()
        if not tokens:
            continue
        kw = tokens[0]
        if kw == "solid":
            name = tokens[1] if len(tokens) > 1 else "mesh"
        elif kw == "facet":
            if cur is not None:
                raise StlParseError("nested 'facet'", lineno)
            cur = []
        elif kw == "outer":
            if cur is None:
                raise StlParseError("'outer loop' outside facet", lineno)
            in_loop = True
        elif kw == "vertex":
            if not in_loop:
                raise StlParseError("'vertex' outside loop", lineno)
            if len(tokens) != 4:
                raise StlParseError("vertex needs 3 coordinates", lineno)
            try:
                xyz = (float(tokens[1]), float(tokens[2]), float(tokens[3]))
            except ValueError:
                raise StlParseError(f"bad coordinate in {raw.strip()!r}", lineno)
            if len(cur) >= 3:
                raise StlParseError("more than 3 vertices in facet", lineno)
            cur.append(vert_id(xyz, lineno))
        elif kw == "endloop":
            in_loop = False
        elif kw == "endfacet":
            if cur is None or len(cur) != 3:
                raise StlParseError("endfacet without 3 vertices", lineno)
            faces.append(cur)
            cur = None
        elif kw == "endsolid":
            saw_endsolid = True
        # unknown keywords (e.g. attribute noise) are tolerated

    if cur is not None:
        raise StlParseError("unterminated facet (truncated file?)", len(lines))
    if not saw_endsolid:
        raise StlParseError("missing 'endsolid' (truncated file?)", len(lines))
    if not faces:
        raise StlParseError("no facets found", len(lines))
    return Mesh(np.array(vertices, float), np.array(faces, int), name)
