"""Geometric judgment of predicted sequences against references.

A prediction is *desirable* when it compiles and its sampled surface lies
within a Chamfer Distance threshold of the reference's. The Chamfer Distance
used throughout is the symmetric squared-Euclidean form: for clouds ``A`` and
``B``, the mean over ``A`` of the squared distance to the nearest point of
``B``, plus the same with the roles swapped.

Judgments feed two dataset builders: a binary one (desirable/undesirable
records, with optional down-sampling of desirable records) and a paired one
(best vs. worst among several candidate predictions for one prompt).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np
from scipy.spatial import cKDTree

from .diagnostics import GroundTruthInvalid, KernelError, Problem, render_problem
from .grammar import parse_sequence, print_sequence, validate_syntax
from .kernel import DEFAULT_ARC_SEGMENTS, CompiledModel, compile_sequence, sample_point_cloud
from .kernel.sample import PointCloud
from .model import CadSequence

SequenceLike = Union[str, CadSequence]


def chamfer_distance(a, b) -> float:
    """Symmetric mean-of-squared-nearest-neighbor distance between two clouds.

    Accepts :class:`PointCloud` or plain ``(N, 3)`` arrays; both directions
    are k-d tree accelerated. Identical clouds score exactly ``0.0``.
    """
    pa = _points(a)
    pb = _points(b)
    if len(pa) == 0 or len(pb) == 0:
        raise ValueError("chamfer distance requires non-empty point clouds")
    d_ab = cKDTree(pb).query(pa, k=1)[0]
    d_ba = cKDTree(pa).query(pb, k=1)[0]
    return float(np.mean(d_ab**2) + np.mean(d_ba**2))


def _points(cloud) -> np.ndarray:
    if isinstance(cloud, PointCloud):
        return cloud.points
    return np.asarray(cloud, dtype=float).reshape(-1, 3)


@dataclass(frozen=True)
class CjmConfig:
    """Knobs of the compiler-and-judge pipeline.

    ``cd_threshold`` is compared against the raw (squared-distance) Chamfer
    value. ``alpha`` is the probability of keeping a desirable record in the
    binary dataset. ``subdivision`` is forwarded to tessellation (``None`` =
    adaptive).
    """

    cd_threshold: float = 0.05
    alpha: float = 1.0
    n_points: int = 2048
    seed: int = 0
    arc_segments: int = DEFAULT_ARC_SEGMENTS
    subdivision: int | None = None

    def __post_init__(self) -> None:
        if self.cd_threshold <= 0.0:
            raise ValueError(f"cd_threshold must be positive, got {self.cd_threshold}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be within [0, 1], got {self.alpha}")
        if self.n_points < 1:
            raise ValueError(f"n_points must be positive, got {self.n_points}")

    def to_dict(self) -> dict:
        return {
            "cd_threshold": self.cd_threshold,
            "alpha": self.alpha,
            "n_points": self.n_points,
            "seed": self.seed,
            "arc_segments": self.arc_segments,
            "subdivision": self.subdivision,
        }


@dataclass(frozen=True)
class JudgeVerdict:
    compiled: bool
    chamfer: float | None
    desirable: bool
    problems: tuple[Problem, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "compiled": self.compiled,
            "cd": self.chamfer,
            "desirable": self.desirable,
            "diagnostics": [render_problem(p) for p in self.problems],
        }


def compile_prediction(
    source: SequenceLike, arc_segments: int = DEFAULT_ARC_SEGMENTS
) -> tuple[CompiledModel | None, CadSequence | None, tuple[Problem, ...]]:
    """Parse (if text), validate, and compile; collect problems instead of raising.

    Returns ``(model, sequence, problems)`` where ``model`` is ``None`` iff
    ``problems`` is non-empty. The sequence is returned when parsing at least
    succeeded, so callers can still canonicalize invalid-but-parseable input.
    """
    if isinstance(source, str):
        parsed = parse_sequence(source)
        if not parsed.ok:
            return None, None, tuple(parsed.diagnostics)
        seq = parsed.sequence
    else:
        seq = source
    diags = validate_syntax(seq)
    if diags:
        return None, seq, tuple(diags)
    try:
        model = compile_sequence(seq, arc_segments)
    except KernelError as err:
        return None, seq, (err,)
    return model, seq, ()


def _compile_reference(gt: SequenceLike, cfg: CjmConfig) -> CompiledModel:
    model, _, problems = compile_prediction(gt, cfg.arc_segments)
    if model is None:
        rendered = "; ".join(render_problem(p) for p in problems)
        raise GroundTruthInvalid(f"reference sequence is invalid: {rendered}")
    return model


def judge(pred: SequenceLike, gt: SequenceLike, cfg: CjmConfig = CjmConfig()) -> JudgeVerdict:
    """Judge one prediction against one reference.

    Raises :class:`~secad.diagnostics.GroundTruthInvalid` when the reference
    itself does not compile. A prediction that fails to parse, validate, or
    compile is undesirable with ``chamfer=None`` and carries its problems;
    otherwise both models are sampled with the same seed and point count and
    compared by Chamfer Distance against ``cfg.cd_threshold``.
    """
    gt_model = _compile_reference(gt, cfg)
    pred_model, _, problems = compile_prediction(pred, cfg.arc_segments)
    if pred_model is None:
        return JudgeVerdict(False, None, False, problems)
    cd = chamfer_distance(
        sample_point_cloud(pred_model, cfg.n_points, cfg.seed, subdivision=cfg.subdivision),
        sample_point_cloud(gt_model, cfg.n_points, cfg.seed, subdivision=cfg.subdivision),
    )
    return JudgeVerdict(True, cd, cd < cfg.cd_threshold, ())


@dataclass(frozen=True)
class PreferenceRecord:
    prompt: str
    sequence: str
    label: bool
    chamfer: float | None
    diagnostics: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "prompt": self.prompt,
            "sequence": self.sequence,
            "label": self.label,
            "cd": self.chamfer,
            "diagnostics": list(self.diagnostics),
        }


@dataclass(frozen=True)
class PairedRecord:
    prompt: str
    chosen: str
    rejected: str
    cd_chosen: float
    cd_rejected: float | None

    def to_dict(self) -> dict:
        return {
            "prompt": self.prompt,
            "chosen": self.chosen,
            "rejected": self.rejected,
            "cd_chosen": self.cd_chosen,
            "cd_rejected": self.cd_rejected,
        }


def _canonical_text(source: SequenceLike, seq: CadSequence | None) -> str:
    if seq is not None:
        try:
            return print_sequence(seq)
        except ValueError:
            pass  # unprintable (dangling reference): keep the raw text
    return source if isinstance(source, str) else print_sequence(source)


def build_binary_dataset(
    items: Iterable[tuple[str, SequenceLike, SequenceLike]],
    cfg: CjmConfig = CjmConfig(),
) -> list[PreferenceRecord]:
    """Judge ``(prompt, prediction, reference)`` triples into binary records.

    Undesirable predictions are always recorded (label ``false``, with their
    problems rendered); desirable ones are kept with probability ``alpha``,
    decided by a generator seeded from ``cfg.seed`` so reruns are identical.
    """
    rng = np.random.default_rng(cfg.seed)
    records: list[PreferenceRecord] = []
    for prompt, pred, gt in items:
        gt_model = _compile_reference(gt, cfg)
        pred_model, seq, problems = compile_prediction(pred, cfg.arc_segments)
        text = _canonical_text(pred, seq)
        if pred_model is None:
            records.append(
                PreferenceRecord(prompt, text, False, None, tuple(render_problem(p) for p in problems))
            )
            continue
        cd = chamfer_distance(
            sample_point_cloud(pred_model, cfg.n_points, cfg.seed, subdivision=cfg.subdivision),
            sample_point_cloud(gt_model, cfg.n_points, cfg.seed, subdivision=cfg.subdivision),
        )
        if cd < cfg.cd_threshold:
            if rng.random() < cfg.alpha:
                records.append(PreferenceRecord(prompt, text, True, cd, ()))
        else:
            records.append(PreferenceRecord(prompt, text, False, cd, ()))
    return records


def build_paired_dataset(
    groups: Iterable[tuple[str, Sequence[SequenceLike], SequenceLike]],
    cfg: CjmConfig = CjmConfig(),
) -> list[PairedRecord]:
    """Rank candidate predictions per prompt and emit (chosen, rejected) pairs.

    Candidates are ordered best-first: compiled before not-compiled, then by
    ascending Chamfer Distance (ties keep input order). Groups whose best
    candidate does not compile are skipped; groups need at least two
    candidates.
    """
    records: list[PairedRecord] = []
    for prompt, candidates, gt in groups:
        if len(candidates) < 2:
            raise ValueError(f"paired group {prompt!r} needs at least 2 candidates, got {len(candidates)}")
        gt_model = _compile_reference(gt, cfg)
        gt_cloud = sample_point_cloud(gt_model, cfg.n_points, cfg.seed, subdivision=cfg.subdivision)
        scored: list[tuple[bool, float, str]] = []
        for cand in candidates:
            model, seq, _ = compile_prediction(cand, cfg.arc_segments)
            text = _canonical_text(cand, seq)
            if model is None:
                scored.append((False, np.inf, text))
            else:
                cloud = sample_point_cloud(model, cfg.n_points, cfg.seed, subdivision=cfg.subdivision)
                scored.append((True, chamfer_distance(cloud, gt_cloud), text))
        order = sorted(range(len(scored)), key=lambda i: (not scored[i][0], scored[i][1]))
        best, worst = scored[order[0]], scored[order[-1]]
        if not best[0]:
            continue
        records.append(
            PairedRecord(prompt, best[2], worst[2], best[1], worst[1] if worst[0] else None)
        )
    return records


def write_jsonl(records: Iterable, path) -> None:
    """Write records (anything with ``to_dict``) as one JSON object per line."""
    lines = [json.dumps(r.to_dict()) for r in records]
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + ("\n" if lines else ""))
    os.replace(tmp, path)
