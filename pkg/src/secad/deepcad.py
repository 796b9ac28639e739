"""Importer for minimal DeepCAD-style JSON construction documents.

Supported schema (anything else is rejected with diagnostics)::

    {
      "entities": { "<id>": <entity>, ... },
      "sequence": [ {"type": "Sketch"|"ExtrudeFeature", "entity": "<id>"}, ... ]
    }

Sketch entity::

    {
      "type": "Sketch",
      "transform": {                      # optional, defaults to identity
        "origin": {"x": .., "y": .., "z": ..},
        "x_axis": {"x": .., "y": .., "z": ..},
        "y_axis": {...}, "z_axis": {...}
      },
      "profiles": {
        "<pid>": {
          "loops": [
            {"is_outer": true|false,      # optional; first loop defaults true
             "profile_curves": [ <curve>, ... ]}
          ]
        }
      }
    }

Curves (coordinates are 2D sketch-plane coordinates; a ``z`` component, when
present, is ignored)::

    {"type": "Line3D",   "start_point": <pt>, "end_point": <pt>}
    {"type": "Arc3D",    "start_point": <pt>, "end_point": <pt>,
                         "center_point": <pt>, "ccw": true|false}
    {"type": "Circle3D", "center_point": <pt>, "radius": <number>}

(The bare names ``Line``/``Arc``/``Circle`` are accepted as aliases.)

Extrude entity::

    {
      "type": "ExtrudeFeature",
      "profiles": [ {"sketch": "<id>", "profile": "<pid>"} ],   # first used
      "operation": "NewBodyFeatureOperation" | "JoinFeatureOperation" |
                   "CutFeatureOperation" | "IntersectFeatureOperation",
      "extent_type": "OneSideFeatureExtentType" |
                     "TwoSidesFeatureExtentType" |
                     "SymmetricFeatureExtentType",
      "extent_one": {"distance": {"value": <number>}},
      "extent_two": {"distance": {"value": <number>}}           # TwoSides only
    }

Extent conventions: one-sided extrusion sweeps ``extent_one`` along the plane
normal (negative values sweep the other way); two-sided sweeps ``|extent_one|``
forward and ``|extent_two|`` backward; symmetric sweeps ``|extent_one| / 2``
each way.

Import rescales the whole document uniformly so its world-space bounding box
fits in ``[-0.75, 0.75]^3``, then quantizes. Per profile, 2D coordinates are
recentred on the profile's bounding box — the shift is folded into the plane
origin — and divided by the box's half-extent, which becomes the extrusion's
``sketch_scale``. Values the 8-bit grid cannot carry after normalization
(profile scales or extents above 1) are reported as ``OutOfRangeParam``.

The importer mirrors the text parser's contract: it never raises on bad
documents but returns a :class:`~secad.grammar.ParseResult` whose diagnostics
use span ``(0, 0)`` and a message naming the offending entity (JSON carries
no token positions).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .diagnostics import Diagnostic, ErrorCode
from .grammar import ParseResult
from .kernel.profile import arc_polyline
from .kernel.solid import euler_zyx_angles
from .model import (
    Arc,
    BoolKind,
    CadSequence,
    Circle,
    Curve,
    ExtrudeOp,
    Line,
    Loop,
    Sketch,
    SketchPlane,
)
from .quant import quantize, quantize_angle, quantize_sweep, quantize_unit

#: Half-edge of the world box documents are normalized into. Strictly inside
#: the representable [-1, 1] so quantization round-off keeps values in range.
NORM_HALF_EXTENT = 0.75

_OPERATIONS = {
    "NewBodyFeatureOperation": BoolKind.NEW_BODY,
    "JoinFeatureOperation": BoolKind.JOIN,
    "CutFeatureOperation": BoolKind.CUT,
    "IntersectFeatureOperation": BoolKind.INTERSECT,
}

_ONE_SIDE = "OneSideFeatureExtentType"
_TWO_SIDES = "TwoSidesFeatureExtentType"
_SYMMETRIC = "SymmetricFeatureExtentType"


class _ImportProblem(Exception):
    def __init__(self, code: ErrorCode, message: str):
        super().__init__(message)
        self.diagnostic = Diagnostic(code, (0, 0), message)


def _vec3(obj, what: str) -> np.ndarray:
    if not isinstance(obj, dict) or not {"x", "y", "z"} <= obj.keys():
        raise _ImportProblem(ErrorCode.UNKNOWN_TOKEN, f"{what} is not an x/y/z mapping")
    try:
        return np.array([float(obj["x"]), float(obj["y"]), float(obj["z"])])
    except (TypeError, ValueError):
        raise _ImportProblem(ErrorCode.UNKNOWN_TOKEN, f"{what} has non-numeric components") from None


def _point2(obj, what: str) -> tuple[float, float]:
    if not isinstance(obj, dict):
        raise _ImportProblem(ErrorCode.UNKNOWN_TOKEN, f"{what} is not a point mapping")
    v = _vec3({"z": 0.0, **obj}, what)
    return float(v[0]), float(v[1])


# Parsed real-coordinate curve descriptors:
#   ("line", start, end)
#   ("arc", start, end, sweep, ccw)     sweep in (0, 2*pi]
#   ("circle", center, radius)
_RealCurve = tuple


@dataclass
class _RawExtrude:
    loops: list[list[_RealCurve]]  # outer loop first
    origin: np.ndarray
    rotation: np.ndarray
    extent_pos: float
    extent_neg: float
    boolean: BoolKind
    profile_key: tuple  # (sketch id, profile id), for sketch sharing


def _orthonormalize(x_axis: np.ndarray, y_axis: np.ndarray, z_axis: np.ndarray) -> np.ndarray:
    """Columns x/y/z, Gram-Schmidt cleaned; left-handed triples are rejected."""
    norm_x = np.linalg.norm(x_axis)
    if norm_x < 1e-12:
        raise _ImportProblem(ErrorCode.UNKNOWN_TOKEN, "sketch transform x_axis is zero")
    x = x_axis / norm_x
    y = y_axis - np.dot(y_axis, x) * x
    norm_y = np.linalg.norm(y)
    if norm_y < 1e-12:
        raise _ImportProblem(ErrorCode.UNKNOWN_TOKEN, "sketch transform axes are collinear")
    y = y / norm_y
    z = np.cross(x, y)
    if np.linalg.norm(z_axis) > 1e-12 and float(np.dot(z, z_axis)) < 0.0:
        raise _ImportProblem(
            ErrorCode.UNKNOWN_TOKEN, "sketch transform is left-handed (mirrors are not representable)"
        )
    return np.column_stack([x, y, z])


def _signed_sweep(start, end, center, ccw: bool, what: str) -> float:
    """Positive sweep angle of the arc traced in the requested direction."""
    u = np.subtract(start, center)
    v = np.subtract(end, center)
    ru = float(np.linalg.norm(u))
    rv = float(np.linalg.norm(v))
    if ru < 1e-12 or rv < 1e-12:
        raise _ImportProblem(ErrorCode.ZERO_AREA_PROFILE, f"{what}: endpoint coincides with arc center")
    if abs(ru - rv) > 0.01 * max(ru, rv):
        raise _ImportProblem(ErrorCode.UNKNOWN_TOKEN, f"{what}: endpoints are not equidistant from center")
    angle = math.atan2(float(u[0] * v[1] - u[1] * v[0]), float(np.dot(u, v)))
    sweep = angle if ccw else -angle
    if sweep < 0.0:
        sweep += 2.0 * math.pi
    if sweep < 1e-9:
        sweep = 2.0 * math.pi
    return sweep


def _parse_curves(raw_curves, where: str) -> list[_RealCurve]:
    curves: list[_RealCurve] = []
    for ci, curve in enumerate(raw_curves):
        ctype = curve.get("type") if isinstance(curve, dict) else None
        label = f"{where} curve {ci}"
        if ctype in ("Line3D", "Line"):
            curves.append(
                (
                    "line",
                    _point2(curve.get("start_point"), f"{label} start_point"),
                    _point2(curve.get("end_point"), f"{label} end_point"),
                )
            )
        elif ctype in ("Arc3D", "Arc"):
            start = _point2(curve.get("start_point"), f"{label} start_point")
            end = _point2(curve.get("end_point"), f"{label} end_point")
            center = _point2(curve.get("center_point"), f"{label} center_point")
            ccw = bool(curve.get("ccw", True))
            sweep = _signed_sweep(start, end, center, ccw, label)
            curves.append(("arc", start, end, sweep, ccw))
        elif ctype in ("Circle3D", "Circle"):
            try:
                radius = float(curve.get("radius"))
            except (TypeError, ValueError):
                raise _ImportProblem(ErrorCode.UNKNOWN_TOKEN, f"{label} has a non-numeric radius") from None
            if radius <= 0.0:
                raise _ImportProblem(ErrorCode.ZERO_AREA_PROFILE, f"{label} has non-positive radius {radius}")
            curves.append(("circle", _point2(curve.get("center_point"), f"{label} center_point"), radius))
        else:
            raise _ImportProblem(ErrorCode.UNKNOWN_TOKEN, f"{label} has unsupported type {ctype!r}")
    return curves


def _entity(entities: dict, key, what: str) -> dict:
    if not isinstance(key, str) or key not in entities:
        raise _ImportProblem(ErrorCode.BAD_REFERENCE, f"{what} references undefined entity {key!r}")
    value = entities[key]
    if not isinstance(value, dict):
        raise _ImportProblem(ErrorCode.UNKNOWN_TOKEN, f"entity {key!r} is not an object")
    return value


def _extent_distance(entity: dict, field_name: str, step_index: int) -> float:
    node = entity.get(field_name)
    try:
        return float(node["distance"]["value"])
    except (TypeError, KeyError, ValueError):
        raise _ImportProblem(
            ErrorCode.INVALID_EXTRUSION,
            f"extrude at step {step_index}: {field_name} lacks a numeric distance value",
        ) from None


def _collect_extrude(entities: dict, step_index: int, entity: dict) -> _RawExtrude:
    profiles = entity.get("profiles")
    if not isinstance(profiles, list) or not profiles:
        raise _ImportProblem(
            ErrorCode.BAD_REFERENCE, f"extrude at step {step_index} references no profile"
        )
    ref = profiles[0] if isinstance(profiles[0], dict) else {}
    sketch_id = ref.get("sketch")
    sketch_entity = _entity(entities, sketch_id, f"extrude at step {step_index}")
    if sketch_entity.get("type") != "Sketch":
        raise _ImportProblem(
            ErrorCode.BAD_REFERENCE, f"extrude at step {step_index} references non-sketch entity {sketch_id!r}"
        )
    pid = ref.get("profile")
    profile = (sketch_entity.get("profiles") or {}).get(pid)
    if not isinstance(profile, dict):
        raise _ImportProblem(
            ErrorCode.BAD_REFERENCE, f"extrude at step {step_index} references undefined profile {pid!r}"
        )

    raw_loops: list[tuple[bool, list[_RealCurve]]] = []
    for li, loop in enumerate(profile.get("loops") or []):
        if not isinstance(loop, dict) or not isinstance(loop.get("profile_curves"), list):
            raise _ImportProblem(
                ErrorCode.UNKNOWN_TOKEN, f"profile {pid!r} loop {li} lacks a profile_curves list"
            )
        curves = _parse_curves(loop["profile_curves"], f"profile {pid!r} loop {li}")
        if not curves:
            raise _ImportProblem(ErrorCode.ZERO_AREA_PROFILE, f"profile {pid!r} loop {li} has no curves")
        if len(curves) > 1 and any(c[0] == "circle" for c in curves):
            raise _ImportProblem(
                ErrorCode.UNCLOSED_LOOP,
                f"profile {pid!r} loop {li} mixes a circle with other curves",
            )
        raw_loops.append((bool(loop.get("is_outer", li == 0)), curves))
    if not raw_loops:
        raise _ImportProblem(ErrorCode.ZERO_AREA_PROFILE, f"profile {pid!r} has no loops")
    raw_loops.sort(key=lambda item: not item[0])  # outer loop first, stable

    transform = sketch_entity.get("transform") or {}
    origin = _vec3(transform.get("origin", {"x": 0.0, "y": 0.0, "z": 0.0}), "transform origin")
    axes = [
        _vec3(transform.get(name, default), f"transform {name}")
        for name, default in (
            ("x_axis", {"x": 1.0, "y": 0.0, "z": 0.0}),
            ("y_axis", {"x": 0.0, "y": 1.0, "z": 0.0}),
            ("z_axis", {"x": 0.0, "y": 0.0, "z": 1.0}),
        )
    ]
    rotation = _orthonormalize(*axes)

    operation = entity.get("operation")
    if operation not in _OPERATIONS:
        raise _ImportProblem(
            ErrorCode.UNKNOWN_TOKEN, f"unsupported operation {operation!r} at step {step_index}"
        )

    extent_type = entity.get("extent_type", _ONE_SIDE)
    if extent_type == _ONE_SIDE:
        d1 = _extent_distance(entity, "extent_one", step_index)
        extent_pos, extent_neg = (d1, 0.0) if d1 >= 0.0 else (0.0, -d1)
    elif extent_type == _TWO_SIDES:
        extent_pos = abs(_extent_distance(entity, "extent_one", step_index))
        extent_neg = abs(_extent_distance(entity, "extent_two", step_index))
    elif extent_type == _SYMMETRIC:
        half = abs(_extent_distance(entity, "extent_one", step_index)) / 2.0
        extent_pos = extent_neg = half
    else:
        raise _ImportProblem(
            ErrorCode.UNKNOWN_TOKEN, f"unsupported extent type {extent_type!r} at step {step_index}"
        )
    if extent_pos == 0.0 and extent_neg == 0.0:
        raise _ImportProblem(
            ErrorCode.INVALID_EXTRUSION, f"extrude at step {step_index} has zero total extent"
        )

    return _RawExtrude(
        loops=[curves for _, curves in raw_loops],
        origin=origin,
        rotation=rotation,
        extent_pos=extent_pos,
        extent_neg=extent_neg,
        boolean=_OPERATIONS[operation],
        profile_key=(sketch_id, pid),
    )


def _loop_control_points(curves: list[_RealCurve]) -> list[tuple[float, float]]:
    """2D points that bound the loop (arc bulges sampled, circle extremes added)."""
    points: list[tuple[float, float]] = []
    for curve in curves:
        if curve[0] == "line":
            points.extend([curve[1], curve[2]])
        elif curve[0] == "arc":
            _, start, end, sweep, ccw = curve
            points.extend([start, end])
            points.extend(arc_polyline(start, end, sweep, ccw, 16))
        else:
            _, center, radius = curve
            points.extend(
                [
                    (center[0] - radius, center[1]),
                    (center[0] + radius, center[1]),
                    (center[0], center[1] - radius),
                    (center[0], center[1] + radius),
                ]
            )
    return points


def _world_sample_points(raw: _RawExtrude) -> np.ndarray:
    """Coarse world-space occupancy of one extrusion, for global normalization."""
    planar = np.array([p for loop in raw.loops for p in _loop_control_points(loop)])
    local = np.column_stack([planar, np.zeros(len(planar))])
    world = local @ raw.rotation.T + raw.origin
    normal = raw.rotation[:, 2]
    return np.vstack([world + raw.extent_pos * normal, world - raw.extent_neg * normal])


def _quantize_loop(curves: list[_RealCurve], center: np.ndarray, half_extent: float) -> Loop:
    def level(point) -> tuple[int, int]:
        return (
            quantize((point[0] - center[0]) / half_extent),
            quantize((point[1] - center[1]) / half_extent),
        )

    first = curves[0]
    start = level(first[1])
    out: list[Curve] = []
    for curve in curves:
        if curve[0] == "line":
            out.append(Line(level(curve[2])))
        elif curve[0] == "arc":
            _, _, end, sweep, ccw = curve
            out.append(Arc(level(end), quantize_sweep(sweep), ccw))
        else:
            _, c, radius = curve
            return Loop(level((c[0], c[1] - radius)), (Circle(level(c), quantize_unit(radius / half_extent)),))
    return Loop(start, tuple(out))


def import_deepcad_json(document: dict) -> ParseResult:
    """Convert a JSON document (already deserialized) into a quantized sequence.

    See the module docstring for the accepted schema and the normalization
    scheme. All structural problems are reported as diagnostics in the result;
    partial imports are never returned.
    """
    if not isinstance(document, dict) or not isinstance(document.get("entities"), dict) or not isinstance(
        document.get("sequence"), list
    ):
        return ParseResult(
            None,
            (
                Diagnostic(
                    ErrorCode.UNKNOWN_TOKEN,
                    (0, 0),
                    "document must be an object with 'entities' and 'sequence' sections",
                ),
            ),
        )
    entities = document["entities"]
    diagnostics: list[Diagnostic] = []
    raw_extrudes: list[_RawExtrude] = []
    for step_index, step in enumerate(document["sequence"]):
        if not isinstance(step, dict):
            diagnostics.append(
                Diagnostic(ErrorCode.UNKNOWN_TOKEN, (0, 0), f"sequence step {step_index} is not an object")
            )
            continue
        step_type = step.get("type")
        if step_type == "Sketch":
            continue  # sketches are imported through the extrusions that use them
        if step_type != "ExtrudeFeature":
            diagnostics.append(
                Diagnostic(
                    ErrorCode.UNKNOWN_TOKEN,
                    (0, 0),
                    f"unsupported feature type {step_type!r} at sequence step {step_index}",
                )
            )
            continue
        try:
            raw_extrudes.append(_collect_extrude(entities, step_index, _entity(entities, step.get("entity"), f"step {step_index}")))
        except _ImportProblem as problem:
            diagnostics.append(problem.diagnostic)
    if not raw_extrudes and not diagnostics:
        diagnostics.append(
            Diagnostic(ErrorCode.EMPTY_RESULT, (0, 0), "document contains no extrude features")
        )
    if diagnostics:
        return ParseResult(None, tuple(diagnostics))

    # Global normalization: fit the document's coarse occupancy into the box.
    occupancy = np.vstack([_world_sample_points(raw) for raw in raw_extrudes])
    lo, hi = occupancy.min(axis=0), occupancy.max(axis=0)
    longest = float((hi - lo).max())
    if longest <= 0.0:
        return ParseResult(
            None,
            (Diagnostic(ErrorCode.ZERO_AREA_PROFILE, (0, 0), "document geometry has zero spatial extent"),),
        )
    world_scale = 2.0 * NORM_HALF_EXTENT / longest
    world_center = 0.5 * (lo + hi)

    sketches: list[Sketch] = []
    extrudes: list[ExtrudeOp] = []
    sketch_index_by_key: dict[tuple, int] = {}
    for raw in raw_extrudes:
        planar = np.array([p for loop in raw.loops for p in _loop_control_points(loop)])
        p_lo, p_hi = planar.min(axis=0), planar.max(axis=0)
        profile_center = 0.5 * (p_lo + p_hi)
        half_extent = float(np.abs(planar - profile_center).max())
        if half_extent <= 0.0:
            diagnostics.append(
                Diagnostic(ErrorCode.ZERO_AREA_PROFILE, (0, 0), "profile degenerates to a single point")
            )
            continue
        sketch_scale = half_extent * world_scale
        if sketch_scale > 1.0:
            diagnostics.append(
                Diagnostic(
                    ErrorCode.OUT_OF_RANGE_PARAM,
                    (0, 0),
                    f"profile scale {sketch_scale:.4f} exceeds the representable [0, 1]",
                )
            )
            continue
        extent_pos = raw.extent_pos * world_scale
        extent_neg = raw.extent_neg * world_scale
        if extent_pos > 1.0 or extent_neg > 1.0:
            diagnostics.append(
                Diagnostic(
                    ErrorCode.OUT_OF_RANGE_PARAM,
                    (0, 0),
                    f"extrusion extent {max(extent_pos, extent_neg):.4f} exceeds the representable [0, 1]",
                )
            )
            continue

        # Profile recentring shifts the plane origin by the rotated 2D center;
        # then the whole world is recentred and rescaled.
        origin_world = raw.origin + raw.rotation @ np.array([profile_center[0], profile_center[1], 0.0])
        origin_norm = (origin_world - world_center) * world_scale
        alpha, beta, gamma = euler_zyx_angles(raw.rotation)

        key = (raw.profile_key, tuple(np.round(origin_norm, 12)))
        if key in sketch_index_by_key:
            sketch_index = sketch_index_by_key[key]
        else:
            plane = SketchPlane(
                tuple(quantize(c) for c in origin_norm),
                (quantize_angle(alpha), quantize_angle(beta), quantize_angle(gamma)),
            )
            loops = tuple(_quantize_loop(loop, profile_center, half_extent) for loop in raw.loops)
            sketches.append(Sketch(plane, loops))
            sketch_index = len(sketches) - 1
            sketch_index_by_key[key] = sketch_index
        extrudes.append(
            ExtrudeOp(
                sketch_index,
                quantize_unit(extent_pos),
                quantize_unit(extent_neg),
                quantize_unit(sketch_scale),
                raw.boolean,
            )
        )
    if diagnostics:
        return ParseResult(None, tuple(diagnostics))
    return ParseResult(CadSequence(tuple(sketches), tuple(extrudes)), ())
