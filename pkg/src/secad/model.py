"""In-memory data model for sketch-and-extrude CAD sequences.

All geometric parameters are stored as 8-bit quantization levels; see
:mod:`secad.quant` for the level-to-value mappings (coordinates in
``[-1, 1]``, magnitudes in ``[0, 1]``, plane angles in ``[-pi, pi]``, arc
sweeps in ``[0, 2*pi]``). Every dataclass here is frozen: sequences are
values, built once by a parser/importer and never mutated.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Union

from .quant import LEVEL_MAX


class BoolKind(Enum):
    """How an extrusion combines with the solid built so far."""

    NEW_BODY = "NEW"
    JOIN = "JOIN"
    CUT = "CUT"
    INTERSECT = "INT"


def _check_levels(owner: str, **fields: int) -> None:
    for name, value in fields.items():
        if not isinstance(value, int) or isinstance(value, bool):
            raise TypeError(f"{owner}.{name} must be an int level, got {type(value).__name__}")
        if not 0 <= value <= LEVEL_MAX:
            raise ValueError(f"{owner}.{name} level {value} outside [0, {LEVEL_MAX}]")


def _check_point(owner: str, name: str, point: tuple[int, ...], arity: int) -> None:
    if len(point) != arity:
        raise ValueError(f"{owner}.{name} must have {arity} components, got {len(point)}")
    for i, component in enumerate(point):
        _check_levels(owner, **{f"{name}[{i}]": component})


@dataclass(frozen=True)
class Line:
    """Straight segment from the running loop position to ``end``."""

    end: tuple[int, int]

    def __post_init__(self) -> None:
        _check_point("Line", "end", self.end, 2)


@dataclass(frozen=True)
class Arc:
    """Circular arc from the running loop position to ``end``.

    ``sweep`` is the subtended angle on the ``[0, 2*pi]`` grid and ``ccw``
    selects which of the two arcs through the endpoints is meant.
    """

    end: tuple[int, int]
    sweep: int
    ccw: bool

    def __post_init__(self) -> None:
        _check_point("Arc", "end", self.end, 2)
        _check_levels("Arc", sweep=self.sweep)
        if not isinstance(self.ccw, bool):
            raise TypeError("Arc.ccw must be a bool")


@dataclass(frozen=True)
class Circle:
    """Full circle; must be the only curve of its loop."""

    center: tuple[int, int]
    radius: int

    def __post_init__(self) -> None:
        _check_point("Circle", "center", self.center, 2)
        _check_levels("Circle", radius=self.radius)


Curve = Union[Line, Arc, Circle]


@dataclass(frozen=True)
class Loop:
    """A closed chain of curves starting (and ending) at ``start``."""

    start: tuple[int, int]
    curves: tuple[Curve, ...]

    def __post_init__(self) -> None:
        _check_point("Loop", "start", self.start, 2)
        object.__setattr__(self, "curves", tuple(self.curves))

    @property
    def is_circle(self) -> bool:
        return len(self.curves) == 1 and isinstance(self.curves[0], Circle)


@dataclass(frozen=True)
class SketchPlane:
    """Placement of a sketch in space.

    ``origin`` holds signed world coordinates; ``orientation`` holds intrinsic
    Z-Y-X Euler angles, both as levels.
    """

    origin: tuple[int, int, int]
    orientation: tuple[int, int, int]

    def __post_init__(self) -> None:
        _check_point("SketchPlane", "origin", self.origin, 3)
        _check_point("SketchPlane", "orientation", self.orientation, 3)


#: Plane at the world origin with zero Euler angles (level 128 is the grid
#: point closest to zero on the signed scale).
DEFAULT_PLANE = SketchPlane((128, 128, 128), (128, 128, 128))


@dataclass(frozen=True)
class Sketch:
    plane: SketchPlane
    loops: tuple[Loop, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "loops", tuple(self.loops))


@dataclass(frozen=True)
class ExtrudeOp:
    """Extrude sketch ``sketch_index`` symmetrically-or-not along its normal.

    ``extent_pos``/``extent_neg`` are the distances swept along the positive
    and negative plane normal; ``sketch_scale`` multiplies the profile before
    extrusion. All three live on the ``[0, 1]`` unit grid.
    """

    sketch_index: int
    extent_pos: int
    extent_neg: int
    sketch_scale: int
    boolean: BoolKind

    def __post_init__(self) -> None:
        if not isinstance(self.sketch_index, int) or isinstance(self.sketch_index, bool) or self.sketch_index < 0:
            raise ValueError(f"ExtrudeOp.sketch_index must be a non-negative int, got {self.sketch_index!r}")
        _check_levels(
            "ExtrudeOp",
            extent_pos=self.extent_pos,
            extent_neg=self.extent_neg,
            sketch_scale=self.sketch_scale,
        )
        if not isinstance(self.boolean, BoolKind):
            raise TypeError("ExtrudeOp.boolean must be a BoolKind")


@dataclass(frozen=True)
class CadSequence:
    """A complete modeling program: sketches plus the extrusions that use them.

    ``terminated`` records whether the source text carried its end marker;
    sequences built in memory default to terminated.
    """

    sketches: tuple[Sketch, ...]
    extrudes: tuple[ExtrudeOp, ...]
    terminated: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "sketches", tuple(self.sketches))
        object.__setattr__(self, "extrudes", tuple(self.extrudes))
