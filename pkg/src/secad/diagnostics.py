"""Shared error taxonomy for the parser, the validator, and the geometry kernel.

Structural problems found in token streams or in-memory sequences are reported
as :class:`Diagnostic` values (never raised); geometric failures discovered
while compiling a sequence into a solid are raised as :class:`KernelError`.
Both carry the same closed set of error codes so downstream consumers (review
feedback, preference records, reports) can treat them uniformly.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Union


class ErrorCode(Enum):
    MISSING_END_TOKEN = "MissingEndToken"
    UNKNOWN_TOKEN = "UnknownToken"
    OUT_OF_RANGE_PARAM = "OutOfRangeParam"
    UNCLOSED_LOOP = "UnclosedLoop"
    ZERO_AREA_PROFILE = "ZeroAreaProfile"
    INVALID_EXTRUSION = "InvalidExtrusion"
    BOOLEAN_VIOLATION = "BooleanViolation"
    EMPTY_RESULT = "EmptyResult"
    BAD_REFERENCE = "BadReference"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


@dataclass(frozen=True)
class Diagnostic:
    """A structural problem located by a half-open token span ``[start, end)``.

    Spans index the whitespace-tokenized input (or, for in-memory sequences,
    the token stream their canonical printing would produce).
    """

    code: ErrorCode
    span: tuple[int, int]
    message: str

    def render(self) -> str:
        start, end = self.span
        return f"{self.code.value} at tokens {start}..{end}: {self.message}"

    def to_dict(self) -> dict:
        return {"code": self.code.value, "span": [self.span[0], self.span[1]], "message": self.message}


@dataclass(frozen=True)
class KernelError(Exception):
    """A geometric failure raised while compiling a sequence into a solid.

    ``location`` names the offending element of the input sequence as
    ``("sketch", index)`` or ``("extrude", index)``.
    """

    code: ErrorCode
    detail: str
    location: tuple[str, int]

    def render(self) -> str:
        kind, index = self.location
        return f"{self.code.value} at {kind} {index}: {self.detail}"

    def to_dict(self) -> dict:
        return {"code": self.code.value, "location": [self.location[0], self.location[1]], "detail": self.detail}

    def __str__(self) -> str:
        return self.render()


Problem = Union[Diagnostic, KernelError]


def render_problem(problem: Problem) -> str:
    """Uniform one-line rendering for either problem flavor."""
    return problem.render()


class GroundTruthInvalid(Exception):
    """A reference sequence failed to parse, validate, or compile.

    Reference data is trusted input: a broken reference is a caller error, not
    a judgment about the prediction, so it surfaces as its own exception
    rather than as a verdict.
    """
