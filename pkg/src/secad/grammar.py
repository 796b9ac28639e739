"""Text grammar for sketch-and-extrude sequences.

Canonical form, one statement per line, single spaces, all numbers integer
quantization levels in ``[0, 255]``::

    SKETCH
    LOOP sx sy
    LINE ex ey
    ARC ex ey sweep ccw
    CIRCLE cx cy r
    ENDLOOP
    ENDSKETCH
    EXTRUDE k ox oy oz ta tb tc epos eneg scale bool
    END

An ``EXTRUDE`` line names the sketch it uses (``k``, zero-based) and carries
that sketch's plane placement: origin ``ox oy oz`` and intrinsic Z-Y-X Euler
angles ``ta tb tc``. ``epos``/``eneg`` are the two extrusion extents,
``scale`` the profile scale, and ``bool`` one of ``NEW JOIN CUT INT``. The
``ccw`` flag of an ``ARC`` is ``0`` or ``1``.

Parsing is whitespace-tokenized and recovers after errors so that a single
pass reports as many problems as possible, ordered by token position.
:func:`print_sequence` emits the canonical form; parsing a printed sequence
reproduces it exactly, and printing a parse of canonical text reproduces the
text.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .diagnostics import Diagnostic, ErrorCode
from .model import (
    DEFAULT_PLANE,
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

_KEYWORDS = {
    "SKETCH",
    "ENDSKETCH",
    "LOOP",
    "ENDLOOP",
    "LINE",
    "ARC",
    "CIRCLE",
    "EXTRUDE",
    "END",
}
_BOOL_TOKENS = {kind.value for kind in BoolKind}

#: Statement-leading tokens used to resynchronize after an error.
_SYNC_TOKENS = _KEYWORDS - {"END"} | {"END"}


def tokenize(text: str) -> list[str]:
    """Split source text into tokens (any whitespace separates)."""
    return text.split()


@dataclass(frozen=True)
class ParseResult:
    """Outcome of parsing: a sequence, or the diagnostics that prevented one.

    Exactly one of the two is meaningful: ``sequence`` is ``None`` iff
    ``diagnostics`` is non-empty.
    """

    sequence: CadSequence | None
    diagnostics: tuple[Diagnostic, ...]

    @property
    def ok(self) -> bool:
        return self.sequence is not None


@dataclass
class _RawExtrude:
    sketch_index: int
    index_pos: int  # token index of `k`, for reference diagnostics
    plane: tuple[int, ...]
    extent_pos: int
    extent_neg: int
    sketch_scale: int
    boolean: BoolKind


class _Parser:
    def __init__(self, tokens: list[str]):
        self.tokens = tokens
        self.pos = 0
        self.diags: list[Diagnostic] = []
        self.sketch_loops: list[tuple[Loop, ...]] = []
        self.raw_extrudes: list[_RawExtrude] = []

    # -- primitives --------------------------------------------------------

    def _error(self, code: ErrorCode, start: int, message: str, end: int | None = None) -> None:
        self.diags.append(Diagnostic(code, (start, start + 1 if end is None else end), message))

    def _at_end(self) -> bool:
        return self.pos >= len(self.tokens)

    def _level(self) -> int:
        """Consume one integer level; report and recover on anything else."""
        if self._at_end():
            # Truncated statement: the missing-END diagnostic covers it.
            return 0
        tok = self.tokens[self.pos]
        try:
            value = int(tok, 10)
        except ValueError:
            self._error(ErrorCode.UNKNOWN_TOKEN, self.pos, f"expected an integer level, found {tok!r}")
            if tok not in _SYNC_TOKENS and tok not in _BOOL_TOKENS:
                self.pos += 1
            return 0
        self.pos += 1
        if not 0 <= value <= 255:
            self._error(ErrorCode.OUT_OF_RANGE_PARAM, self.pos - 1, f"level {value} outside [0, 255]")
            return min(255, max(0, value))
        return value

    def _flag(self, name: str) -> bool:
        if self._at_end():
            return True
        before = len(self.diags)
        value = self._level()
        if value not in (0, 1) and len(self.diags) == before:
            self._error(ErrorCode.OUT_OF_RANGE_PARAM, self.pos - 1, f"{name} flag must be 0 or 1, got {value}")
        return value != 0

    def _bool_kind(self) -> BoolKind:
        if self._at_end():
            return BoolKind.NEW_BODY
        tok = self.tokens[self.pos]
        if tok in _BOOL_TOKENS:
            self.pos += 1
            return BoolKind(tok)
        self._error(
            ErrorCode.UNKNOWN_TOKEN,
            self.pos,
            f"expected a boolean kind (NEW, JOIN, CUT or INT), found {tok!r}",
        )
        if tok not in _SYNC_TOKENS:
            self.pos += 1
        return BoolKind.NEW_BODY

    # -- grammar productions ------------------------------------------------

    def run(self) -> None:
        saw_end = False
        while not self._at_end():
            tok = self.tokens[self.pos]
            if tok == "END":
                self.pos += 1
                saw_end = True
                break
            if tok == "SKETCH":
                self._sketch()
            elif tok == "EXTRUDE":
                self._extrude()
            else:
                self._error(ErrorCode.UNKNOWN_TOKEN, self.pos, f"expected SKETCH, EXTRUDE or END, found {tok!r}")
                self.pos += 1
        if not saw_end:
            n = len(self.tokens)
            self._error(ErrorCode.MISSING_END_TOKEN, max(0, n - 1), "sequence does not finish with END", end=n)
        elif not self._at_end():
            self._error(
                ErrorCode.UNKNOWN_TOKEN,
                self.pos,
                f"trailing content after END, starting with {self.tokens[self.pos]!r}",
                end=len(self.tokens),
            )
        for raw in self.raw_extrudes:
            if raw.sketch_index >= len(self.sketch_loops):
                self._error(
                    ErrorCode.BAD_REFERENCE,
                    raw.index_pos,
                    f"extrusion references sketch {raw.sketch_index} but only "
                    f"{len(self.sketch_loops)} sketch(es) are defined",
                )

    def _sketch(self) -> None:
        self.pos += 1  # SKETCH
        loops: list[Loop] = []
        while not self._at_end():
            tok = self.tokens[self.pos]
            if tok == "LOOP":
                loops.append(self._loop())
            elif tok == "ENDSKETCH":
                self.pos += 1
                break
            else:
                self._error(ErrorCode.UNKNOWN_TOKEN, self.pos, f"expected LOOP or ENDSKETCH, found {tok!r}")
                if tok in _SYNC_TOKENS:
                    break
                self.pos += 1
        self.sketch_loops.append(tuple(loops))

    def _loop(self) -> Loop:
        self.pos += 1  # LOOP
        sx = self._level()
        sy = self._level()
        curves: list[Curve] = []
        while not self._at_end():
            tok = self.tokens[self.pos]
            if tok == "LINE":
                self.pos += 1
                ex = self._level()
                ey = self._level()
                curves.append(Line((ex, ey)))
            elif tok == "ARC":
                self.pos += 1
                ex = self._level()
                ey = self._level()
                sweep = self._level()
                ccw = self._flag("ccw")
                curves.append(Arc((ex, ey), sweep, ccw))
            elif tok == "CIRCLE":
                self.pos += 1
                cx = self._level()
                cy = self._level()
                r = self._level()
                curves.append(Circle((cx, cy), r))
            elif tok == "ENDLOOP":
                self.pos += 1
                break
            else:
                self._error(
                    ErrorCode.UNKNOWN_TOKEN, self.pos, f"expected a curve (LINE, ARC, CIRCLE) or ENDLOOP, found {tok!r}"
                )
                if tok in _SYNC_TOKENS:
                    break
                self.pos += 1
        return Loop((sx, sy), tuple(curves))

    def _extrude(self) -> None:
        self.pos += 1  # EXTRUDE
        index_pos = self.pos
        k = self._level()
        plane = tuple(self._level() for _ in range(6))
        epos = self._level()
        eneg = self._level()
        scale = self._level()
        boolean = self._bool_kind()
        self.raw_extrudes.append(_RawExtrude(k, index_pos, plane, epos, eneg, scale, boolean))

    def build(self) -> CadSequence:
        planes: dict[int, SketchPlane] = {}
        for raw in self.raw_extrudes:
            if raw.sketch_index < len(self.sketch_loops):
                planes[raw.sketch_index] = SketchPlane(raw.plane[:3], raw.plane[3:])
        sketches = tuple(
            Sketch(planes.get(i, DEFAULT_PLANE), loops) for i, loops in enumerate(self.sketch_loops)
        )
        extrudes = tuple(
            ExtrudeOp(r.sketch_index, r.extent_pos, r.extent_neg, r.sketch_scale, r.boolean)
            for r in self.raw_extrudes
        )
        return CadSequence(sketches, extrudes, terminated=True)


def parse_sequence(text: str) -> ParseResult:
    """Parse source text into a :class:`CadSequence`.

    On failure the result carries every diagnostic found (error recovery keeps
    scanning), sorted by token position; on success the diagnostics tuple is
    empty. Sketch planes are taken from the extrusions that reference each
    sketch; a sketch no extrusion uses gets the default plane.
    """
    parser = _Parser(tokenize(text))
    parser.run()
    if parser.diags:
        ordered = sorted(parser.diags, key=lambda d: (d.span[0], d.span[1], d.code.value))
        return ParseResult(None, tuple(ordered))
    return ParseResult(parser.build(), ())


# ---------------------------------------------------------------------------
# printing


def _curve_tokens(curve: Curve) -> list[str]:
    if isinstance(curve, Line):
        return ["LINE", str(curve.end[0]), str(curve.end[1])]
    if isinstance(curve, Arc):
        return ["ARC", str(curve.end[0]), str(curve.end[1]), str(curve.sweep), "1" if curve.ccw else "0"]
    if isinstance(curve, Circle):
        return ["CIRCLE", str(curve.center[0]), str(curve.center[1]), str(curve.radius)]
    raise TypeError(f"unknown curve type {type(curve).__name__}")


def print_sequence(seq: CadSequence) -> str:
    """Render a sequence in canonical text form (requires in-range references)."""
    lines: list[str] = []
    for sketch in seq.sketches:
        lines.append("SKETCH")
        for loop in sketch.loops:
            lines.append(f"LOOP {loop.start[0]} {loop.start[1]}")
            for curve in loop.curves:
                lines.append(" ".join(_curve_tokens(curve)))
            lines.append("ENDLOOP")
        lines.append("ENDSKETCH")
    for op in seq.extrudes:
        if not 0 <= op.sketch_index < len(seq.sketches):
            raise ValueError(f"cannot print extrusion of undefined sketch {op.sketch_index}")
        plane = seq.sketches[op.sketch_index].plane
        ox, oy, oz = plane.origin
        ta, tb, tc = plane.orientation
        lines.append(
            f"EXTRUDE {op.sketch_index} {ox} {oy} {oz} {ta} {tb} {tc} "
            f"{op.extent_pos} {op.extent_neg} {op.sketch_scale} {op.boolean.value}"
        )
    lines.append("END")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# structural validation


def _loop_token_count(loop: Loop) -> int:
    n = 3 + 1  # LOOP sx sy ... ENDLOOP
    for curve in loop.curves:
        n += len(_curve_tokens(curve))
    return n


def validate_syntax(seq: CadSequence) -> list[Diagnostic]:
    """Check structural invariants beyond what parsing alone guarantees.

    Returns diagnostics (possibly empty) ordered by token position in the
    sequence's canonical printing:

    * loops must be closable: a circle stands alone in its loop; any other
      loop needs at least three curves, or two when one is an arc;
    * circle radii must be non-zero, sketches must have at least one loop;
    * an extrusion must reference a defined sketch, sweep a non-zero total
      extent, and the first extrusion must be a NEW body;
    * the sequence must be terminated.
    """
    diags: list[Diagnostic] = []
    pos = 0
    for sketch in seq.sketches:
        sketch_start = pos
        pos += 1  # SKETCH
        if not sketch.loops:
            diags.append(
                Diagnostic(
                    ErrorCode.ZERO_AREA_PROFILE,
                    (sketch_start, pos + 1),
                    "sketch has no loops and bounds no area",
                )
            )
        for loop in sketch.loops:
            loop_start = pos
            loop_end = pos + _loop_token_count(loop)
            curve_pos = pos + 3
            for curve in loop.curves:
                next_pos = curve_pos + len(_curve_tokens(curve))
                if isinstance(curve, Circle) and curve.radius == 0:
                    diags.append(
                        Diagnostic(
                            ErrorCode.ZERO_AREA_PROFILE,
                            (curve_pos, next_pos),
                            "circle has zero radius",
                        )
                    )
                curve_pos = next_pos
            n_curves = len(loop.curves)
            n_circles = sum(isinstance(c, Circle) for c in loop.curves)
            if n_circles and n_curves > 1:
                diags.append(
                    Diagnostic(
                        ErrorCode.UNCLOSED_LOOP,
                        (loop_start, loop_end),
                        "a circle must be the only curve in its loop",
                    )
                )
            elif not n_circles:
                has_arc = any(isinstance(c, Arc) for c in loop.curves)
                if n_curves < 2 or (n_curves == 2 and not has_arc):
                    diags.append(
                        Diagnostic(
                            ErrorCode.UNCLOSED_LOOP,
                            (loop_start, loop_end),
                            f"a chain of {n_curves} line/arc curve(s) cannot close around an area",
                        )
                    )
            pos = loop_end
        pos += 1  # ENDSKETCH
    for i, op in enumerate(seq.extrudes):
        op_start = pos
        pos += 12  # EXTRUDE + 10 numbers + bool
        if not 0 <= op.sketch_index < len(seq.sketches):
            diags.append(
                Diagnostic(
                    ErrorCode.BAD_REFERENCE,
                    (op_start + 1, op_start + 2),
                    f"extrusion references sketch {op.sketch_index} but only "
                    f"{len(seq.sketches)} sketch(es) are defined",
                )
            )
        if op.extent_pos == 0 and op.extent_neg == 0:
            diags.append(
                Diagnostic(
                    ErrorCode.INVALID_EXTRUSION,
                    (op_start, pos),
                    "both extrusion extents are zero",
                )
            )
        if i == 0 and op.boolean is not BoolKind.NEW_BODY:
            diags.append(
                Diagnostic(
                    ErrorCode.BOOLEAN_VIOLATION,
                    (op_start, pos),
                    f"first extrusion must create a NEW body, found {op.boolean.value}",
                )
            )
    if not seq.terminated:
        diags.append(
            Diagnostic(ErrorCode.MISSING_END_TOKEN, (pos, pos), "sequence does not finish with END")
        )
    diags.sort(key=lambda d: (d.span[0], d.span[1], d.code.value))
    return diags
