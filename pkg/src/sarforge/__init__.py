"""sarforge: bistatic SAR image clips of faceted PEC ground targets by
simulation - a physical-optics solver feeding a keystone polar-format
imaging chain."""

from . import demos
from .constants import ETA0, SPEED_OF_LIGHT
from .geometry import (
    DegenerateFacetError,
    Mesh,
    MeshError,
    MeshQualityReport,
    StlParseError,
    direction_from_angles,
    load_mesh_stl,
    merge_meshes,
    mesh_quality,
    save_mesh_stl,
)
from .imaging import (
    GeometryPrediction,
    KSpacePatch,
    SarImage,
    SupportCollapsedError,
    UnboundedResolutionError,
    clip_series,
    extract_patch,
    form_clip,
    form_image,
    keystone_resample,
    kspace_coords,
    load_image,
    predict_geometry,
    save_image,
    save_png,
    save_pgm,
)
from .oracle import (
    PointScatterer,
    circular_peaks,
    find_peak,
    mainlobe_width_m,
    plate_rcs_analytic,
    specular_peaks,
    synth_run,
)
from .po import (
    CurrentMap,
    FieldSample,
    FrequencyMismatchError,
    PlaneWaveExcitation,
    RcsSample,
    bistatic_rcs_sweep,
    current_map_to_csv,
    facet_phase_integral,
    far_field,
    far_field_batch,
    illuminate,
    illuminate_call_count,
    polarization_basis,
    reset_illuminate_call_count,
)
from .sweep import (
    PlannedRun,
    RunData,
    SweepConfig,
    load_run,
    load_run_header,
    plan_dataset,
    run_sweep,
    save_run,
)
from .targets import (
    InvalidSpecError,
    PrimitiveSpec,
    TARGET_DIMENSIONS,
    TARGET_KINDS,
    build_box,
    build_cone,
    build_cylinder,
    build_plate,
    build_primitive,
    build_strip_antenna,
    build_target,
    build_wall_on_ground,
)

__version__ = "0.1.0"
