"""Project configuration: JSON schema, validation with path-level
diagnostics, and scene assembly."""

from __future__ import annotations

import json
import os

import numpy as np

from . import targets as tg
from .geometry import load_mesh_stl, merge_meshes
from .sweep import SweepConfig


class ConfigError(Exception):
    """Invalid project configuration; message carries the JSON path."""


_DIMS = {"type": "number", "exclusiveMinimum": 0}

PROJECT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "sarforge project configuration",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "scene": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "objects": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["kind"],
                        "properties": {
                            "kind": {"enum": ["target", "primitive", "stl"]},
                            "target": {"enum": list(tg.TARGET_KINDS)},
                            "detail": {"enum": ["coarse", "fine"]},
                            "primitive": {"enum": ["plate", "box", "prism",
                                                   "wall_on_ground"]},
                            "dims": {"type": "object",
                                     "additionalProperties": {"type": "number"}},
                            "path": {"type": "string"},
                            "translate": {"type": "array", "items": {"type": "number"},
                                          "minItems": 3, "maxItems": 3},
                            "rotate_z_deg": {"type": "number"},
                        },
                    },
                },
                "ground": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "size": {"type": "array", "items": _DIMS,
                                 "minItems": 2, "maxItems": 2},
                        "max_edge": _DIMS,
                    },
                },
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "rx_elevation_deg": {"type": "number"},
                "tx_azimuth_deg": {"type": "number"},
                "tx_elevation_deg": {"type": "number"},
                "tx_polarization": {"enum": ["H", "V"]},
                "center_frequency_hz": _DIMS,
                "bandwidth_hz": {"type": "number", "minimum": 0},
                "frequency_step_hz": _DIMS,
                "rx_azimuth_start_deg": {"type": "number"},
                "rx_azimuth_end_deg": {"type": "number"},
                "rx_azimuth_step_deg": _DIMS,
                "amplitude": _DIMS,
            },
        },
        "imaging": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "swath_deg": _DIMS,
                "stride_steps": {"type": "integer", "minimum": 1},
                "window": {"enum": ["rectangular", "raised_cosine"]},
                "grid": {"type": "integer", "minimum": 8},
                "image_grid": {"type": "integer", "minimum": 8},
                "oversample": {"type": "integer", "minimum": 1},
                "floor_db": _DIMS,
            },
        },
        "dataset": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "targets": {"type": "array",
                            "items": {"enum": list(tg.TARGET_KINDS)}},
                "detail": {"enum": ["coarse", "fine"]},
                "tx_azimuths_deg": {"type": "array", "items": {"type": "number"},
                                    "minItems": 1},
                "elevations_deg": {"type": "array", "items": {"type": "number"},
                                   "minItems": 1},
                "polarizations": {"type": "array", "items": {"enum": ["H", "V"]},
                                  "minItems": 1},
            },
        },
        "rcs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "frequency_hz": _DIMS,
                "tx_azimuth_deg": {"type": "number"},
                "tx_elevation_deg": {"type": "number"},
                "polarization": {"enum": ["H", "V"]},
                "rx_elevation_deg": {"type": "number"},
                "rx_azimuth_step_deg": _DIMS,
            },
        },
        "shadowmap": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "frequency_hz": _DIMS,
                "tx_azimuth_deg": {"type": "number"},
                "tx_elevation_deg": {"type": "number"},
                "polarization": {"enum": ["H", "V"]},
            },
        },
        "output_dir": {"type": "string"},
    },
}

DEFAULT_IMAGING = {
    "swath_deg": 36.0,
    "stride_steps": 10,
    "window": "rectangular",
    "grid": 64,
    "image_grid": 128,
    "oversample": 8,
    "floor_db": 40.0,
}


def _json_path(error):
    parts = ["config"]
    for p in error.absolute_path:
        parts.append(f"[{p}]" if isinstance(p, int) else f".{p}")
    return "".join(parts)


def validate_config(cfg, base_dir="."):
    """Schema-validate a configuration dict; raise ConfigError naming the
    offending field."""
    import jsonschema

    clean = {k: v for k, v in cfg.items() if not k.startswith("_")}
    validator = jsonschema.Draft202012Validator(PROJECT_SCHEMA)
    errors = sorted(validator.iter_errors(clean), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ConfigError(f"{_json_path(e)}: {e.message}")
    # cross-field checks the schema cannot express
    for i, obj in enumerate(clean.get("scene", {}).get("objects", [])):
        kind = obj.get("kind")
        if kind == "target" and "target" not in obj:
            raise ConfigError(f"config.scene.objects[{i}].target: required for kind 'target'")
        if kind == "primitive" and "primitive" not in obj:
            raise ConfigError(f"config.scene.objects[{i}].primitive: required for kind 'primitive'")
        if kind == "stl":
            path = obj.get("path")
            if not path:
                raise ConfigError(f"config.scene.objects[{i}].path: required for kind 'stl'")
            if not os.path.exists(os.path.join(base_dir, path)):
                raise ConfigError(f"config.scene.objects[{i}].path: mesh file not found: {path}")
    return cfg


def load_config(path):
    try:
        with open(path) as f:
            cfg = json.load(f)
    except OSError as e:
        raise ConfigError(f"config: cannot read {path}: {e}")
    except ValueError as e:
        raise ConfigError(f"config: invalid JSON in {path}: {e}")
    if not isinstance(cfg, dict):
        raise ConfigError("config: top level must be a JSON object")
    cfg["_base_dir"] = os.path.dirname(os.path.abspath(path))
    validate_config(cfg, base_dir=cfg["_base_dir"])
    return cfg


def build_scene(cfg, extra_target=None, detail=None, name=None):
    """Assemble the scene mesh from the config's scene section.

    extra_target, when given, is a target kind added to the scene (the
    dataset generator calls this once per target in the plan).
    """
    scene = cfg.get("scene", {})
    meshes = []
    base = cfg.get("_base_dir", ".")
    for obj in scene.get("objects", []):
        kind = obj["kind"]
        if kind == "target":
            m = tg.build_target(obj["target"], obj.get("detail", "coarse"))
        elif kind == "primitive":
            m = tg.build_primitive(tg.PrimitiveSpec(obj["primitive"],
                                                    obj.get("dims", {})))
        else:
            m = load_mesh_stl(os.path.join(base, obj["path"]))
        if obj.get("rotate_z_deg"):
            m = m.rotated_z(obj["rotate_z_deg"])
        if obj.get("translate"):
            m = m.translated(obj["translate"])
        meshes.append(m)
    if extra_target is not None:
        meshes.append(tg.build_target(extra_target, detail or "coarse"))
    ground = scene.get("ground")
    if ground:
        gx, gy = ground.get("size", [10.0, 10.0])
        meshes.append(tg.build_plate(gx, gy, max_edge=ground.get("max_edge", 0.5),
                                     name="ground"))
    if not meshes:
        raise ConfigError("config.scene: no objects and no ground; nothing to simulate")
    return merge_meshes(meshes, name=name or extra_target or "scene")


def sweep_config_from(cfg, **overrides):
    """SweepConfig from the config's sweep section plus overrides."""
    d = dict(cfg.get("sweep", {}))
    d.update(overrides)
    d.setdefault("rx_elevation_deg", d.get("tx_elevation_deg", 15.0))
    d.setdefault("tx_azimuth_deg", 0.0)
    d.setdefault("tx_elevation_deg", 15.0)
    try:
        return SweepConfig(**d)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"config.sweep: {e}")


def imaging_params(cfg):
    d = dict(DEFAULT_IMAGING)
    d.update(cfg.get("imaging", {}))
    return d
