"""Compile-check review of generated sequences and the bounded repair loop.

``review`` runs the full validity pipeline — parse, structural validation,
kernel compilation — without any reference geometry, and turns problems into
generator-facing feedback text. ``run_agentic_loop`` drives a generator:
produce, review, and on failure regenerate from a prompt augmented with the
previous attempt and its feedback, for at most ``max_iters`` repair rounds
(``max_iters=0`` is a single unreviewed-regeneration-free shot; the review
itself always runs).

Generators are bindings: two offline stubs (deterministic and stochastic,
useful for tests and dry runs) and :class:`~secad.remote.RemoteBinding` for a
live endpoint.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .diagnostics import KernelError, Problem, render_problem
from .grammar import parse_sequence, print_sequence, validate_syntax
from .kernel import DEFAULT_ARC_SEGMENTS, compile_sequence
from .model import BoolKind, CadSequence, ExtrudeOp, Line, Loop, Sketch, SketchPlane
from .remote import GeneratorUnavailable, RemoteBinding, generate_remote


def default_valid_sequence() -> str:
    """Canonical text of a small centered square extrusion (always compiles)."""
    loop = Loop((96, 96), (Line((160, 96)), Line((160, 160)), Line((96, 160)), Line((96, 96))))
    sketch = Sketch(SketchPlane((128, 128, 128), (128, 128, 128)), (loop,))
    op = ExtrudeOp(0, 160, 0, 160, BoolKind.NEW_BODY)
    return print_sequence(CadSequence((sketch,), (op,)))


#: Text that fails review at the first stage (no terminator).
DEFAULT_INVALID_TEXT = "SKETCH\nLOOP 96 96\nLINE 160 96\n"


@dataclass(frozen=True)
class ReviewReport:
    valid: bool
    problems: tuple[Problem, ...]
    feedback: str

    def to_dict(self) -> dict:
        return {
            "valid": self.valid,
            "diagnostics": [render_problem(p) for p in self.problems],
            "feedback": self.feedback,
        }


def review(text: str, arc_segments: int = DEFAULT_ARC_SEGMENTS) -> ReviewReport:
    """Judge validity only: parse, validate, compile; no reference needed.

    Feedback lists every problem found at the first failing stage, one per
    line, in source order, using the error-code names verbatim so a generator
    can key on them.
    """
    parsed = parse_sequence(text)
    problems: tuple[Problem, ...]
    if not parsed.ok:
        problems = tuple(parsed.diagnostics)
    else:
        problems = tuple(validate_syntax(parsed.sequence))
        if not problems:
            try:
                compile_sequence(parsed.sequence, arc_segments)
            except KernelError as err:
                problems = (err,)
    feedback = "\n".join(render_problem(p) for p in problems)
    return ReviewReport(not problems, problems, feedback)


def augment_prompt(prompt: str, report: ReviewReport, previous_attempt: str) -> str:
    """Build the repair prompt: original task, failed attempt, review feedback."""
    if report.valid:
        raise ValueError("cannot build a repair prompt from a passing review")
    return (
        f"{prompt}\n\n"
        "The previous attempt was rejected by the CAD sequence compiler.\n"
        "Previous attempt:\n"
        f"{previous_attempt.rstrip()}\n"
        "Compiler feedback:\n"
        f"{report.feedback}\n"
        "Respond with a corrected CAD sequence that fixes every reported problem."
    )


@dataclass(frozen=True)
class StubDeterministic:
    """Offline generator that fails its first ``fail_first_k`` calls."""

    fail_first_k: int
    valid_text: str = field(default_factory=default_valid_sequence)
    invalid_text: str = DEFAULT_INVALID_TEXT


@dataclass(frozen=True)
class StubStochastic:
    """Offline generator that fails each call independently with ``fail_prob``."""

    fail_prob: float
    valid_text: str = field(default_factory=default_valid_sequence)
    invalid_text: str = DEFAULT_INVALID_TEXT

    def __post_init__(self) -> None:
        if not 0.0 <= self.fail_prob <= 1.0:
            raise ValueError(f"fail_prob must be within [0, 1], got {self.fail_prob}")


GeneratorBinding = Union[StubDeterministic, StubStochastic, RemoteBinding]


@dataclass(frozen=True)
class LoopConfig:
    max_iters: int = 1
    seed: int = 0
    arc_segments: int = DEFAULT_ARC_SEGMENTS

    def __post_init__(self) -> None:
        if self.max_iters < 0:
            raise ValueError("max_iters must be non-negative")


@dataclass(frozen=True)
class Attempt:
    prompt: str
    response: str
    report: ReviewReport

    def to_dict(self) -> dict:
        return {"prompt": self.prompt, "response": self.response, "review": self.report.to_dict()}


@dataclass(frozen=True)
class LoopTrace:
    attempts: tuple[Attempt, ...]
    final_valid: bool

    @property
    def iterations_used(self) -> int:
        """Repair rounds consumed (attempts beyond the first)."""
        return max(0, len(self.attempts) - 1)

    def to_dict(self) -> dict:
        return {
            "attempts": [a.to_dict() for a in self.attempts],
            "final_valid": self.final_valid,
            "iterations_used": self.iterations_used,
        }


def _make_session(binding: GeneratorBinding, seed: int):
    if isinstance(binding, StubDeterministic):
        counter = itertools.count()
        return lambda prompt: (
            binding.invalid_text if next(counter) < binding.fail_first_k else binding.valid_text
        )
    if isinstance(binding, StubStochastic):
        rng = np.random.default_rng(seed)
        return lambda prompt: (
            binding.invalid_text if rng.random() < binding.fail_prob else binding.valid_text
        )
    if isinstance(binding, RemoteBinding):
        return lambda prompt: generate_remote(prompt, binding)
    raise TypeError(f"unknown generator binding {type(binding).__name__}")


def run_agentic_loop(
    prompt: str, binding: GeneratorBinding, cfg: LoopConfig = LoopConfig()
) -> LoopTrace:
    """Generate, review, and repair until valid or the iteration budget is spent.

    The first generation is free; each subsequent one consumes a repair round,
    of which there are at most ``cfg.max_iters``. On
    :class:`~secad.remote.GeneratorUnavailable` the partial trace is attached
    to the exception and it propagates.
    """
    session = _make_session(binding, cfg.seed)
    attempts: list[Attempt] = []
    current_prompt = prompt
    for round_index in range(cfg.max_iters + 1):
        try:
            response = session(current_prompt)
        except GeneratorUnavailable as err:
            err.trace = LoopTrace(tuple(attempts), False)
            raise
        report = review(response, cfg.arc_segments)
        attempts.append(Attempt(current_prompt, response, report))
        if report.valid or round_index == cfg.max_iters:
            break
        current_prompt = augment_prompt(prompt, report, response)
    return LoopTrace(tuple(attempts), attempts[-1].report.valid)
