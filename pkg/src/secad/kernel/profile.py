"""Planar profiles: curve discretization and polygonal region construction.

The kernel works on real coordinates. Curves are flattened to polylines (arcs
into chords, ``n = ceil(arc_segments * sweep / 2pi)`` of them, at least one;
circles into regular ``arc_segments``-gons), loops become rings, and a
profile becomes a :class:`Region`: an outer ring plus hole rings, with
even-odd membership. A thin adapter (:func:`build_profile`) dequantizes a
:class:`~secad.model.Sketch` and runs the same pipeline, raising
:class:`~secad.diagnostics.KernelError` for geometric defects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..diagnostics import ErrorCode, KernelError
from ..model import Arc, Circle, Line, Sketch
from ..quant import dequantize, dequantize_sweep, dequantize_unit

#: Maximum gap between a loop's last point and its start, in real units.
#: Two quantization steps: closures that survive 8-bit rounding stay closed.
CLOSURE_EPSILON = 2.0 / 255.0

#: Area below which a ring is considered degenerate.
AREA_EPSILON = 1e-6

#: Default chord count for a full turn.
DEFAULT_ARC_SEGMENTS = 64

_MIN_ARC_SEGMENTS = 8


def shoelace_area(ring: np.ndarray) -> float:
    """Signed area of an open ring (positive for counter-clockwise order)."""
    x = ring[:, 0]
    y = ring[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def arc_polyline(
    start: tuple[float, float],
    end: tuple[float, float],
    sweep: float,
    ccw: bool,
    arc_segments: int,
) -> list[tuple[float, float]]:
    """Points following ``start`` along the arc, ending exactly at ``end``.

    The chord count scales with the swept fraction of a full turn. Degenerate
    arcs (zero sweep or coincident endpoints) collapse to the straight chord.
    """
    p0 = np.asarray(start, dtype=float)
    p1 = np.asarray(end, dtype=float)
    chord = float(np.hypot(*(p1 - p0)))
    if sweep <= 1e-9 or chord <= 1e-12 or sweep >= 2.0 * math.pi - 1e-9:
        return [(float(p1[0]), float(p1[1]))]
    half = 0.5 * sweep
    radius = chord / (2.0 * math.sin(half))
    direction = (p1 - p0) / chord
    normal_ccw = np.array([-direction[1], direction[0]])
    midpoint = 0.5 * (p0 + p1)
    # cos(half) changes sign past a half turn, which is exactly the side flip
    # the center needs for major arcs.
    offset = radius * math.cos(half)
    center = midpoint + (offset if ccw else -offset) * normal_ccw
    a0 = math.atan2(p0[1] - center[1], p0[0] - center[0])
    n = max(1, math.ceil(arc_segments * sweep / (2.0 * math.pi)))
    step = sweep / n if ccw else -sweep / n
    points = [
        (
            float(center[0] + radius * math.cos(a0 + i * step)),
            float(center[1] + radius * math.sin(a0 + i * step)),
        )
        for i in range(1, n)
    ]
    points.append((float(p1[0]), float(p1[1])))
    return points


def circle_ring(center: tuple[float, float], radius: float, arc_segments: int) -> np.ndarray:
    """Regular ``arc_segments``-gon inscribed in the circle."""
    angles = 2.0 * math.pi * np.arange(arc_segments) / arc_segments
    return np.column_stack(
        [center[0] + radius * np.cos(angles), center[1] + radius * np.sin(angles)]
    )


def chain_ring(
    start: tuple[float, float],
    steps: list[tuple],
    arc_segments: int,
) -> tuple[np.ndarray, float]:
    """Trace a curve chain into an open ring.

    ``steps`` items are ``("line", end)`` or ``("arc", end, sweep, ccw)`` with
    real coordinates. Returns the ring (closing point dropped) and the gap
    between the chain's final point and its start; the caller decides whether
    the gap is acceptable.
    """
    points: list[tuple[float, float]] = [(float(start[0]), float(start[1]))]
    for step in steps:
        kind = step[0]
        if kind == "line":
            end = step[1]
            points.append((float(end[0]), float(end[1])))
        elif kind == "arc":
            _, end, sweep, ccw = step
            points.extend(arc_polyline(points[-1], end, sweep, ccw, arc_segments))
        else:
            raise ValueError(f"unknown chain step kind {kind!r}")
    gap = math.hypot(points[-1][0] - points[0][0], points[-1][1] - points[0][1])
    ring = np.asarray(points[:-1] if len(points) > 1 else points, dtype=float)
    return _dedupe_ring(ring), gap


def _dedupe_ring(ring: np.ndarray) -> np.ndarray:
    if len(ring) < 2:
        return ring
    diff = ring - np.roll(ring, 1, axis=0)
    keep = (np.abs(diff) > 1e-12).any(axis=1)
    keep[0] = True
    return ring[keep]


# ---------------------------------------------------------------------------
# region


@dataclass(frozen=True)
class Region:
    """A polygonal profile. ``rings[0]`` is the outer boundary, the rest holes.

    Membership is even-odd parity over all rings, so it is well defined for
    any ring set; :func:`build_region` is what enforces that holes nest
    properly. Rings are open (the closing edge is implicit).
    """

    rings: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "rings", tuple(np.asarray(r, dtype=float).reshape(-1, 2) for r in self.rings)
        )

    @property
    def outer(self) -> np.ndarray:
        return self.rings[0]

    @property
    def holes(self) -> tuple[np.ndarray, ...]:
        return self.rings[1:]

    def area(self) -> float:
        """Outer area minus hole areas."""
        total = abs(shoelace_area(self.rings[0]))
        for ring in self.rings[1:]:
            total -= abs(shoelace_area(ring))
        return total

    def scaled(self, factor: float) -> "Region":
        return Region(tuple(ring * float(factor) for ring in self.rings))

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.outer.min(axis=0), self.outer.max(axis=0)

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Even-odd membership for an ``(N, 2)`` array; boundary is unreliable."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        inside = np.zeros(len(points), dtype=bool)
        for ring in self.rings:
            inside ^= _crossing_parity(ring, points)
        return inside

    def boundary_distance(self, points: np.ndarray) -> np.ndarray:
        """Unsigned distance from each point to the nearest ring edge."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        best = np.full(len(points), np.inf)
        for ring in self.rings:
            np.minimum(best, _ring_distance(ring, points), out=best)
        return best


def _crossing_parity(ring: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Odd-crossing test of a horizontal ray against one ring, vectorized."""
    x = points[:, 0:1]
    y = points[:, 1:2]
    ax = ring[None, :, 0]
    ay = ring[None, :, 1]
    bx = np.roll(ring[:, 0], -1)[None, :]
    by = np.roll(ring[:, 1], -1)[None, :]
    straddles = (ay > y) != (by > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (y - ay) / (by - ay)
        x_hit = ax + t * (bx - ax)
        crossing = straddles & (x < x_hit)
    return (crossing.sum(axis=1) % 2).astype(bool)


def _ring_distance(ring: np.ndarray, points: np.ndarray) -> np.ndarray:
    a = ring
    d = np.roll(ring, -1, axis=0) - ring
    length_sq = (d * d).sum(axis=1)
    length_sq = np.where(length_sq < 1e-300, 1.0, length_sq)
    rel = points[:, None, :] - a[None, :, :]
    t = np.clip((rel * d[None, :, :]).sum(axis=2) / length_sq[None, :], 0.0, 1.0)
    closest = a[None, :, :] + t[..., None] * d[None, :, :]
    delta = points[:, None, :] - closest
    return np.sqrt((delta * delta).sum(axis=2)).min(axis=1)


def _has_proper_crossing(ring: np.ndarray) -> bool:
    """True when two non-adjacent edges cross transversally."""
    n = len(ring)
    if n < 4:
        return False
    p = ring
    q = np.roll(ring, -1, axis=0)
    i, j = np.triu_indices(n, k=2)
    adjacent_wrap = (i == 0) & (j == n - 1)
    i, j = i[~adjacent_wrap], j[~adjacent_wrap]

    def cross(o, a, b):
        return (a[:, 0] - o[:, 0]) * (b[:, 1] - o[:, 1]) - (a[:, 1] - o[:, 1]) * (b[:, 0] - o[:, 0])

    d1 = cross(p[i], q[i], p[j])
    d2 = cross(p[i], q[i], q[j])
    d3 = cross(p[j], q[j], p[i])
    d4 = cross(p[j], q[j], q[i])
    return bool(((d1 * d2 < 0) & (d3 * d4 < 0)).any())


class RegionDefect(ValueError):
    """Raised by :func:`build_region` with the matching kernel error code."""

    def __init__(self, code: ErrorCode, detail: str):
        super().__init__(detail)
        self.code = code
        self.detail = detail


def build_region(rings: list[np.ndarray], area_epsilon: float = AREA_EPSILON) -> Region:
    """Assemble checked rings into a region (first ring outer, rest holes).

    Raises :class:`RegionDefect` when a ring is degenerate, self-intersecting,
    or a hole is not strictly inside the outer ring / overlaps another hole.
    """
    if not rings:
        raise RegionDefect(ErrorCode.ZERO_AREA_PROFILE, "profile has no loops")
    cleaned = []
    for index, ring in enumerate(rings):
        ring = _dedupe_ring(np.asarray(ring, dtype=float).reshape(-1, 2))
        label = "outer loop" if index == 0 else f"hole loop {index}"
        if len(ring) < 3:
            raise RegionDefect(ErrorCode.ZERO_AREA_PROFILE, f"{label} degenerates to fewer than 3 points")
        if abs(shoelace_area(ring)) < area_epsilon:
            raise RegionDefect(ErrorCode.ZERO_AREA_PROFILE, f"{label} bounds (near) zero area")
        if _has_proper_crossing(ring):
            raise RegionDefect(ErrorCode.ZERO_AREA_PROFILE, f"{label} is self-intersecting")
        cleaned.append(ring)
    region = Region((cleaned[0],))
    for index, hole in enumerate(cleaned[1:], start=1):
        if not region.contains(hole).all():
            raise RegionDefect(
                ErrorCode.ZERO_AREA_PROFILE, f"hole loop {index} is not contained in the outer loop"
            )
        for other_index, other in enumerate(cleaned[1:index], start=1):
            if Region((other,)).contains(hole).any() or Region((hole,)).contains(other).any():
                raise RegionDefect(
                    ErrorCode.ZERO_AREA_PROFILE, f"hole loops {other_index} and {index} overlap"
                )
    result = Region(tuple(cleaned))
    if result.area() < area_epsilon:
        raise RegionDefect(ErrorCode.ZERO_AREA_PROFILE, "holes consume the whole outer area")
    return result


# ---------------------------------------------------------------------------
# quantized adapter


def sketch_rings(
    sketch: Sketch,
    arc_segments: int = DEFAULT_ARC_SEGMENTS,
    closure_epsilon: float = CLOSURE_EPSILON,
) -> list[np.ndarray]:
    """Dequantize and discretize every loop of a sketch.

    Raises :class:`RegionDefect` (`UnclosedLoop`) when a chain misses its
    start by more than ``closure_epsilon`` or mixes a circle with other
    curves.
    """
    rings: list[np.ndarray] = []
    for index, loop in enumerate(sketch.loops):
        if loop.is_circle:
            circle = loop.curves[0]
            center = (dequantize(circle.center[0]), dequantize(circle.center[1]))
            rings.append(circle_ring(center, dequantize_unit(circle.radius), arc_segments))
            continue
        steps: list[tuple] = []
        for curve in loop.curves:
            if isinstance(curve, Line):
                steps.append(("line", (dequantize(curve.end[0]), dequantize(curve.end[1]))))
            elif isinstance(curve, Arc):
                steps.append(
                    (
                        "arc",
                        (dequantize(curve.end[0]), dequantize(curve.end[1])),
                        dequantize_sweep(curve.sweep),
                        curve.ccw,
                    )
                )
            elif isinstance(curve, Circle):
                raise RegionDefect(
                    ErrorCode.UNCLOSED_LOOP,
                    f"loop {index} mixes a circle with other curves and cannot close",
                )
        start = (dequantize(loop.start[0]), dequantize(loop.start[1]))
        ring, gap = chain_ring(start, steps, arc_segments)
        if gap > closure_epsilon:
            raise RegionDefect(
                ErrorCode.UNCLOSED_LOOP,
                f"loop {index} ends {gap:.4f} away from its start (tolerance {closure_epsilon:.4f})",
            )
        rings.append(ring)
    return rings


def build_profile(
    sketch: Sketch,
    arc_segments: int = DEFAULT_ARC_SEGMENTS,
    *,
    sketch_index: int = 0,
    closure_epsilon: float = CLOSURE_EPSILON,
    area_epsilon: float = AREA_EPSILON,
) -> Region:
    """Dequantized, checked region of a sketch.

    ``sketch_index`` only labels errors: failures raise
    :class:`~secad.diagnostics.KernelError` located at ``("sketch", index)``.
    """
    if arc_segments < _MIN_ARC_SEGMENTS:
        raise ValueError(f"arc_segments must be at least {_MIN_ARC_SEGMENTS}, got {arc_segments}")
    try:
        rings = sketch_rings(sketch, arc_segments, closure_epsilon)
        return build_region(rings, area_epsilon)
    except RegionDefect as defect:
        raise KernelError(defect.code, defect.detail, ("sketch", sketch_index)) from defect
