"""Native geometry kernel: profiles, extruded CSG solids, meshing, sampling."""

from .mesh import DEFAULT_MAX_EDGE, Mesh, tessellate, triangulate_ring, write_obj
from .profile import (
    AREA_EPSILON,
    CLOSURE_EPSILON,
    DEFAULT_ARC_SEGMENTS,
    Region,
    RegionDefect,
    arc_polyline,
    build_profile,
    build_region,
    chain_ring,
    circle_ring,
    shoelace_area,
    sketch_rings,
)
from .sample import PointCloud, sample_mesh, sample_point_cloud, write_ply
from .solid import (
    BOUNDARY_EPSILON,
    CompiledModel,
    Frame,
    PointClass,
    Prism,
    Transform,
    classify_point,
    classify_points,
    compile_sequence,
    euler_zyx_angles,
    euler_zyx_matrix,
    normalize,
)

__all__ = [
    "AREA_EPSILON",
    "BOUNDARY_EPSILON",
    "CLOSURE_EPSILON",
    "DEFAULT_ARC_SEGMENTS",
    "DEFAULT_MAX_EDGE",
    "CompiledModel",
    "Frame",
    "Mesh",
    "PointClass",
    "PointCloud",
    "Prism",
    "Region",
    "RegionDefect",
    "Transform",
    "arc_polyline",
    "build_profile",
    "build_region",
    "chain_ring",
    "circle_ring",
    "classify_point",
    "classify_points",
    "compile_sequence",
    "euler_zyx_angles",
    "euler_zyx_matrix",
    "normalize",
    "sample_mesh",
    "sample_point_cloud",
    "shoelace_area",
    "sketch_rings",
    "tessellate",
    "triangulate_ring",
    "write_obj",
    "write_ply",
]
