"""Corpus evaluation: per-primitive F1, Chamfer statistics, invalidity ratio.

F1 is computed per primitive type (line, arc, circle, extrusion) by greedy
one-to-one matching of parameter tuples: candidate pairs whose Chebyshev
(max-coordinate) level distance is within tolerance are accepted closest
first. With ``TP`` matches, ``nP`` predicted and ``nG`` reference primitives,
``F1 = 2 TP / (nP + nG)``; a type absent from both sequences scores 1.0.

Chamfer statistics (median and mean, reported multiplied by 1000) and F1 are
aggregated over valid samples only; the invalidity ratio is the percentage of
samples that failed to parse, validate, or compile.
"""

from __future__ import annotations

import csv
import json
import os
import statistics
from dataclasses import dataclass
from typing import Iterable, Union

from .diagnostics import render_problem
from .grammar import parse_sequence
from .judge import CjmConfig, chamfer_distance, compile_prediction, _compile_reference
from .kernel import sample_point_cloud
from .model import Arc, CadSequence, Circle, Line

DEFAULT_TOL_LEVELS = 3

PRIMITIVE_TYPES = ("line", "arc", "circle", "extrusion")


def _elements(seq: CadSequence) -> dict[str, list[tuple[tuple, tuple[int, ...]]]]:
    """Extract ``(tag, params)`` per primitive type.

    ``params`` are integer levels compared under the Chebyshev metric; ``tag``
    holds the non-numeric parts (arc winding, boolean kind) that must match
    exactly. Curve parameters include the curve's start point so that matched
    pairs really trace the same geometry.
    """
    out: dict[str, list[tuple[tuple, tuple[int, ...]]]] = {t: [] for t in PRIMITIVE_TYPES}
    for sketch in seq.sketches:
        for loop in sketch.loops:
            cursor = loop.start
            for curve in loop.curves:
                if isinstance(curve, Line):
                    out["line"].append(((), cursor + curve.end))
                    cursor = curve.end
                elif isinstance(curve, Arc):
                    out["arc"].append(((curve.ccw,), cursor + curve.end + (curve.sweep,)))
                    cursor = curve.end
                elif isinstance(curve, Circle):
                    out["circle"].append(((), curve.center + (curve.radius,)))
    for op in seq.extrudes:
        plane = seq.sketches[op.sketch_index].plane
        params = plane.origin + plane.orientation + (op.extent_pos, op.extent_neg, op.sketch_scale)
        out["extrusion"].append(((op.boolean.value,), params))
    return out


def _greedy_match_count(pred, gt, tol_levels: int) -> int:
    pairs = []
    for i, (tag_p, par_p) in enumerate(pred):
        for j, (tag_g, par_g) in enumerate(gt):
            if tag_p != tag_g:
                continue
            dist = max(abs(a - b) for a, b in zip(par_p, par_g))
            if dist <= tol_levels:
                # Order by distance, ties broken by parameter content so the
                # outcome is independent of element order in either sequence.
                pairs.append((dist, par_p, par_g, i, j))
    pairs.sort(key=lambda item: item[:3])
    used_pred: set[int] = set()
    used_gt: set[int] = set()
    matches = 0
    for _, _, _, i, j in pairs:
        if i in used_pred or j in used_gt:
            continue
        used_pred.add(i)
        used_gt.add(j)
        matches += 1
    return matches


def f1_primitives(
    pred: CadSequence, gt: CadSequence, tol_levels: int = DEFAULT_TOL_LEVELS
) -> dict[str, float]:
    """Per-type F1 between two parsed sequences."""
    if tol_levels < 0:
        raise ValueError("tol_levels must be non-negative")
    pred_elems = _elements(pred)
    gt_elems = _elements(gt)
    scores: dict[str, float] = {}
    for kind in PRIMITIVE_TYPES:
        p, g = pred_elems[kind], gt_elems[kind]
        if not p and not g:
            scores[kind] = 1.0
        elif not p or not g:
            scores[kind] = 0.0
        else:
            matches = _greedy_match_count(p, g, tol_levels)
            scores[kind] = 2.0 * matches / (len(p) + len(g))
    return scores


def invalidity_ratio(valid_flags: Iterable[bool]) -> float:
    """Percentage of invalid samples."""
    flags = list(valid_flags)
    if not flags:
        raise ValueError("invalidity ratio of an empty corpus is undefined")
    return 100.0 * sum(1 for f in flags if not f) / len(flags)


def cd_stats(values: Iterable[float]) -> tuple[float, float]:
    """``(median, mean)`` of Chamfer values, both scaled by 1000."""
    data = [float(v) for v in values]
    if not data:
        raise ValueError("chamfer statistics of an empty list are undefined")
    return 1000.0 * statistics.median(data), 1000.0 * statistics.fmean(data)


@dataclass(frozen=True)
class SampleEval:
    valid: bool
    f1: dict[str, float] | None
    chamfer: float | None
    problems: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "valid": self.valid,
            "f1": self.f1,
            "cd": self.chamfer,
            "diagnostics": list(self.problems),
        }


@dataclass(frozen=True)
class EvalReport:
    n_samples: int
    n_valid: int
    f1: dict[str, float] | None
    cd_median_x1000: float | None
    cd_mean_x1000: float | None
    invalidity_ratio: float
    samples: tuple[SampleEval, ...]

    def to_dict(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "n_valid": self.n_valid,
            "f1": self.f1,
            "cd_median_x1000": self.cd_median_x1000,
            "cd_mean_x1000": self.cd_mean_x1000,
            "invalidity_ratio": self.invalidity_ratio,
            "samples": [s.to_dict() for s in self.samples],
        }


def evaluate_corpus(
    pairs: Iterable[tuple[Union[str, CadSequence], Union[str, CadSequence]]],
    cfg: CjmConfig = CjmConfig(),
    tol_levels: int = DEFAULT_TOL_LEVELS,
) -> EvalReport:
    """Evaluate ``(prediction, reference)`` pairs.

    Invalid predictions contribute to the invalidity ratio and are excluded
    from the F1 and Chamfer aggregates. Invalid references raise
    :class:`~secad.diagnostics.GroundTruthInvalid`.
    """
    samples: list[SampleEval] = []
    f1_sums = {t: 0.0 for t in PRIMITIVE_TYPES}
    cds: list[float] = []
    for pred, gt in pairs:
        gt_model = _compile_reference(gt, cfg)
        gt_seq = gt if isinstance(gt, CadSequence) else parse_sequence(gt).sequence
        pred_model, pred_seq, problems = compile_prediction(pred, cfg.arc_segments)
        if pred_model is None:
            samples.append(SampleEval(False, None, None, tuple(render_problem(p) for p in problems)))
            continue
        f1 = f1_primitives(pred_seq, gt_seq, tol_levels)
        cd = chamfer_distance(
            sample_point_cloud(pred_model, cfg.n_points, cfg.seed, subdivision=cfg.subdivision),
            sample_point_cloud(gt_model, cfg.n_points, cfg.seed, subdivision=cfg.subdivision),
        )
        for kind in PRIMITIVE_TYPES:
            f1_sums[kind] += f1[kind]
        cds.append(cd)
        samples.append(SampleEval(True, f1, cd, ()))
    if not samples:
        raise ValueError("cannot evaluate an empty corpus")
    n_valid = len(cds)
    if n_valid:
        f1_mean = {t: f1_sums[t] / n_valid for t in PRIMITIVE_TYPES}
        median, mean = cd_stats(cds)
    else:
        f1_mean, median, mean = None, None, None
    return EvalReport(
        n_samples=len(samples),
        n_valid=n_valid,
        f1=f1_mean,
        cd_median_x1000=median,
        cd_mean_x1000=mean,
        invalidity_ratio=invalidity_ratio(s.valid for s in samples),
        samples=tuple(samples),
    )


def write_report_json(report: EvalReport, path) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as handle:
        json.dump(report.to_dict(), handle, indent=2)
        handle.write("\n")
    os.replace(tmp, path)


def write_report_csv(report: EvalReport, path) -> None:
    """Per-sample rows; aggregate values are in the JSON report."""
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["index", "valid", *(f"f1_{t}" for t in PRIMITIVE_TYPES), "cd", "diagnostics"])
        for i, sample in enumerate(report.samples):
            f1_cells = [f"{sample.f1[t]:.6f}" if sample.f1 else "" for t in PRIMITIVE_TYPES]
            writer.writerow(
                [
                    i,
                    int(sample.valid),
                    *f1_cells,
                    "" if sample.chamfer is None else f"{sample.chamfer:.9f}",
                    "; ".join(sample.problems),
                ]
            )
    os.replace(tmp, path)
