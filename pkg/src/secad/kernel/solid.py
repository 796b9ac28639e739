"""Extruded solids and their boolean combination.

A compiled model is an ordered list of :class:`Prism` (a planar region swept
along its plane normal) tagged with boolean kinds. Point membership and a
signed-distance-style field are evaluated by folding over the prisms:

* membership: NEW/JOIN union, CUT difference, INT intersection;
* field: ``min`` for union, ``max(d, -d_p)`` for cut, ``max`` for intersect.

The min/max field is exact for each prism and sign-correct for the
combination: its sign (and zero set, up to the usual CSG seam caveats) agrees
with the boolean fold, which is what classification and boundary tests use.

Coordinates are real; :func:`compile_sequence` adapts a quantized
:class:`~secad.model.CadSequence` onto this layer and normalizes the result
into a bounding box whose longest edge is 2, centered at the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..diagnostics import ErrorCode, KernelError
from ..model import BoolKind, CadSequence
from ..quant import dequantize, dequantize_angle, dequantize_unit
from .profile import AREA_EPSILON, DEFAULT_ARC_SEGMENTS, Region, build_profile

#: Half-width of the band classified as Boundary.
BOUNDARY_EPSILON = 1e-6

#: Per-axis resolution of the occupancy probe grid used for emptiness checks.
_PROBE_RESOLUTION = 16

#: Chunk size for point-batch evaluation, keeps broadcast temporaries small.
_CHUNK = 32768


def euler_zyx_matrix(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """Rotation matrix for intrinsic Z-Y-X Euler angles ``Rz(a) @ Ry(b) @ Rx(c)``."""
    ca, sa = math.cos(alpha), math.sin(alpha)
    cb, sb = math.cos(beta), math.sin(beta)
    cc, sc = math.cos(gamma), math.sin(gamma)
    return np.array(
        [
            [ca * cb, ca * sb * sc - sa * cc, ca * sb * cc + sa * sc],
            [sa * cb, sa * sb * sc + ca * cc, sa * sb * cc - ca * sc],
            [-sb, cb * sc, cb * cc],
        ]
    )


def euler_zyx_angles(rotation: np.ndarray) -> tuple[float, float, float]:
    """Inverse of :func:`euler_zyx_matrix` (gimbal-lock pinned to gamma=0)."""
    r = np.asarray(rotation, dtype=float)
    sb = -r[2, 0]
    sb = min(1.0, max(-1.0, sb))
    beta = math.asin(sb)
    if abs(sb) > 1.0 - 1e-12:
        alpha = math.atan2(-r[0, 1], r[1, 1])
        gamma = 0.0
    else:
        alpha = math.atan2(r[1, 0], r[0, 0])
        gamma = math.atan2(r[2, 1], r[2, 2])
    return alpha, beta, gamma


@dataclass(frozen=True)
class Frame:
    """Rigid placement: ``world = origin + rotation @ local``."""

    origin: np.ndarray
    rotation: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float).reshape(3))
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float).reshape(3, 3))

    def to_local(self, points: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(points) - self.origin) @ self.rotation

    def to_world(self, points: np.ndarray) -> np.ndarray:
        return np.atleast_2d(points) @ self.rotation.T + self.origin


IDENTITY_FRAME = Frame(np.zeros(3), np.eye(3))


@dataclass(frozen=True)
class Prism:
    """A region swept from ``-extent_neg`` to ``+extent_pos`` along local z."""

    region: Region
    frame: Frame
    extent_pos: float
    extent_neg: float
    boolean: BoolKind

    def contains(self, points: np.ndarray) -> np.ndarray:
        local = self.frame.to_local(points)
        in_slab = (local[:, 2] >= -self.extent_neg) & (local[:, 2] <= self.extent_pos)
        return in_slab & self.region.contains(local[:, :2])

    def signed_distance(self, points: np.ndarray) -> np.ndarray:
        """Exact signed Euclidean distance to the prism surface."""
        local = self.frame.to_local(points)
        planar = self.region.boundary_distance(local[:, :2])
        d_xy = np.where(self.region.contains(local[:, :2]), -planar, planar)
        d_z = np.maximum(local[:, 2] - self.extent_pos, -self.extent_neg - local[:, 2])
        outside = np.hypot(np.maximum(d_xy, 0.0), np.maximum(d_z, 0.0))
        inside = np.maximum(d_xy, d_z)
        return np.where((d_xy <= 0.0) & (d_z <= 0.0), inside, outside)

    def cap_corners(self) -> np.ndarray:
        """World positions of the outer ring on both caps (bounds the prism)."""
        outer = self.region.outer
        bottom = np.column_stack([outer, np.full(len(outer), -self.extent_neg)])
        top = np.column_stack([outer, np.full(len(outer), self.extent_pos)])
        return self.frame.to_world(np.vstack([bottom, top]))

    def centroid(self) -> np.ndarray:
        lo, hi = self.region.bounds()
        mid = 0.5 * (lo + hi)
        z = 0.5 * (self.extent_pos - self.extent_neg)
        return self.frame.to_world(np.array([[mid[0], mid[1], z]]))[0]


class PointClass(Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    BOUNDARY = "boundary"


@dataclass(frozen=True)
class Transform:
    """Similarity ``world' = scale * world + offset``."""

    scale: float
    offset: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "offset", np.asarray(self.offset, dtype=float).reshape(3))

    def apply(self, points: np.ndarray) -> np.ndarray:
        return np.atleast_2d(points) * self.scale + self.offset

    def is_identity(self, tolerance: float = 1e-12) -> bool:
        return abs(self.scale - 1.0) <= tolerance and bool((np.abs(self.offset) <= tolerance).all())


@dataclass(frozen=True)
class CompiledModel:
    prisms: tuple[Prism, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "prisms", tuple(self.prisms))

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Boolean-folded membership for an ``(N, 3)`` array."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.empty(len(points), dtype=bool)
        for lo in range(0, len(points), _CHUNK):
            chunk = points[lo : lo + _CHUNK]
            inside = np.zeros(len(chunk), dtype=bool)
            for prism in self.prisms:
                member = prism.contains(chunk)
                if prism.boolean in (BoolKind.NEW_BODY, BoolKind.JOIN):
                    inside |= member
                elif prism.boolean is BoolKind.CUT:
                    inside &= ~member
                else:
                    inside &= member
            out[lo : lo + _CHUNK] = inside
        return out

    def signed_distance(self, points: np.ndarray) -> np.ndarray:
        """Min/max fold of prism distances; sign-exact, magnitude a lower bound."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.empty(len(points), dtype=float)
        for lo in range(0, len(points), _CHUNK):
            chunk = points[lo : lo + _CHUNK]
            d = np.full(len(chunk), np.inf)
            for prism in self.prisms:
                dp = prism.signed_distance(chunk)
                if prism.boolean in (BoolKind.NEW_BODY, BoolKind.JOIN):
                    d = np.minimum(d, dp)
                elif prism.boolean is BoolKind.CUT:
                    d = np.maximum(d, -dp)
                else:
                    d = np.maximum(d, dp)
            out[lo : lo + _CHUNK] = d
        return out

    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        """Conservative world bounds: additive prisms expand, INT clamps, CUT skips."""
        lo = np.full(3, np.inf)
        hi = np.full(3, -np.inf)
        for prism in self.prisms:
            corners = prism.cap_corners()
            p_lo, p_hi = corners.min(axis=0), corners.max(axis=0)
            if prism.boolean in (BoolKind.NEW_BODY, BoolKind.JOIN):
                lo = np.minimum(lo, p_lo)
                hi = np.maximum(hi, p_hi)
            elif prism.boolean is BoolKind.INTERSECT:
                lo = np.maximum(lo, p_lo)
                hi = np.minimum(hi, p_hi)
        return lo, hi


def classify_points(
    model: CompiledModel, points: np.ndarray, boundary_epsilon: float = BOUNDARY_EPSILON
) -> np.ndarray:
    """Classify points: ``1`` inside, ``-1`` outside, ``0`` within the boundary band."""
    d = model.signed_distance(points)
    return np.where(np.abs(d) <= boundary_epsilon, 0, np.where(d < 0.0, 1, -1)).astype(np.int8)


def classify_point(
    model: CompiledModel, point, boundary_epsilon: float = BOUNDARY_EPSILON
) -> PointClass:
    code = int(classify_points(model, np.asarray(point, dtype=float).reshape(1, 3), boundary_epsilon)[0])
    if code == 0:
        return PointClass.BOUNDARY
    return PointClass.INSIDE if code > 0 else PointClass.OUTSIDE


def _occupancy_probes(model: CompiledModel) -> np.ndarray:
    lo, hi = model.bbox()
    if not np.isfinite(lo).all() or not np.isfinite(hi).all() or (hi <= lo).any():
        return np.array([prism.centroid() for prism in model.prisms])
    n = _PROBE_RESOLUTION
    axes = [lo[i] + (hi[i] - lo[i]) * (np.arange(n) + 0.5) / n for i in range(3)]
    gx, gy, gz = np.meshgrid(*axes, indexing="ij")
    grid = np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])
    centroids = np.array([prism.centroid() for prism in model.prisms])
    return np.vstack([grid, centroids])


def compile_sequence(
    seq: CadSequence,
    arc_segments: int = DEFAULT_ARC_SEGMENTS,
    *,
    normalized: bool = True,
) -> CompiledModel:
    """Compile a quantized sequence into a (by default normalized) model.

    Raises :class:`~secad.diagnostics.KernelError` for geometric failures:
    unclosed or degenerate profiles, zero total extents, boolean operations
    before any NEW body, and models whose occupancy probes find no interior
    (``EmptyResult``). References must be in range (run ``validate_syntax``
    first for untrusted input).
    """
    if not seq.extrudes:
        raise KernelError(ErrorCode.EMPTY_RESULT, "sequence has no extrusions", ("extrude", 0))
    prisms: list[Prism] = []
    for index, op in enumerate(seq.extrudes):
        if index == 0 and op.boolean is not BoolKind.NEW_BODY:
            raise KernelError(
                ErrorCode.BOOLEAN_VIOLATION,
                f"{op.boolean.value} operation precedes any NEW body",
                ("extrude", index),
            )
        if op.extent_pos == 0 and op.extent_neg == 0:
            raise KernelError(
                ErrorCode.INVALID_EXTRUSION, "both extrusion extents are zero", ("extrude", index)
            )
        if not 0 <= op.sketch_index < len(seq.sketches):
            raise ValueError(
                f"extrusion {index} references undefined sketch {op.sketch_index}; "
                "validate_syntax reports this as BadReference"
            )
        sketch = seq.sketches[op.sketch_index]
        region = build_profile(sketch, arc_segments, sketch_index=op.sketch_index)
        scale = dequantize_unit(op.sketch_scale)
        scaled = region.scaled(scale)
        if scaled.area() < AREA_EPSILON:
            raise KernelError(
                ErrorCode.ZERO_AREA_PROFILE,
                f"profile area vanishes at sketch scale {scale:.4f}",
                ("extrude", index),
            )
        origin = np.array([dequantize(c) for c in sketch.plane.origin])
        rotation = euler_zyx_matrix(*(dequantize_angle(a) for a in sketch.plane.orientation))
        prisms.append(
            Prism(
                scaled,
                Frame(origin, rotation),
                dequantize_unit(op.extent_pos),
                dequantize_unit(op.extent_neg),
                op.boolean,
            )
        )
    model = CompiledModel(tuple(prisms))
    if not model.contains(_occupancy_probes(model)).any():
        raise KernelError(
            ErrorCode.EMPTY_RESULT,
            "boolean operations leave no occupied volume",
            ("extrude", len(seq.extrudes) - 1),
        )
    if normalized:
        model, _ = normalize(model)
    return model


def normalize(model: CompiledModel) -> tuple[CompiledModel, Transform]:
    """Rescale and recenter so the bounding box has longest edge 2 at the origin.

    Returns the normalized model and the transform that was applied to world
    coordinates. Normalizing an already-normalized model yields the identity
    transform (within floating-point round-off).
    """
    lo, hi = model.bbox()
    if not np.isfinite(lo).all() or not np.isfinite(hi).all():
        raise ValueError("cannot normalize a model with no additive prisms")
    longest = float((hi - lo).max())
    if longest <= 0.0:
        raise ValueError("cannot normalize a degenerate (zero-size) model")
    scale = 2.0 / longest
    offset = -scale * 0.5 * (lo + hi)
    transform = Transform(scale, offset)
    prisms = tuple(
        Prism(
            prism.region.scaled(scale),
            Frame(transform.apply(prism.frame.origin)[0], prism.frame.rotation),
            prism.extent_pos * scale,
            prism.extent_neg * scale,
            prism.boolean,
        )
        for prism in model.prisms
    )
    return CompiledModel(prisms), transform
