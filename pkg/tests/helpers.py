"""Independent oracles and generators shared by the test modules.

Everything here deliberately avoids the package's own geometry paths:
membership uses matplotlib's point-in-polygon, chamfer is a brute-force
double loop, matching is exhaustive. Slow but obviously correct.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from matplotlib.path import Path as MplPath

from secad.model import (
    Arc,
    BoolKind,
    CadSequence,
    Circle,
    ExtrudeOp,
    Line,
    Loop,
    Sketch,
    SketchPlane,
)


def brute_chamfer(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric mean squared nearest-neighbor distance, O(n*m)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)
    return float(d2.min(axis=1).mean() + d2.min(axis=0).mean())


# ---------------------------------------------------------------------------
# independent CSG membership


def oracle_prism_contains(prism, points: np.ndarray) -> np.ndarray:
    """Membership in one prism via matplotlib even-odd polygon tests."""
    points = np.asarray(points, dtype=float)
    local = (points - prism.frame.origin) @ prism.frame.rotation
    in_slab = (local[:, 2] >= -prism.extent_neg) & (local[:, 2] <= prism.extent_pos)
    planar = np.zeros(len(points), dtype=bool)
    for ring in prism.region.rings:
        closed = np.vstack([ring, ring[:1]])
        planar ^= MplPath(closed).contains_points(local[:, :2])
    return in_slab & planar


def oracle_model_contains(model, points: np.ndarray) -> np.ndarray:
    inside = np.zeros(len(points), dtype=bool)
    for prism in model.prisms:
        member = oracle_prism_contains(prism, points)
        if prism.boolean in (BoolKind.NEW_BODY, BoolKind.JOIN):
            inside = inside | member
        elif prism.boolean is BoolKind.CUT:
            inside = inside & ~member
        else:
            inside = inside & member
    return inside


# ---------------------------------------------------------------------------
# exhaustive matching (reference for the greedy F1)


def optimal_match_count(pred, gt, tol_levels: int) -> int:
    """Maximum one-to-one matching size, by exhaustive permutation (small n)."""
    compatible = [
        [
            tag_p == tag_g and max(abs(a - b) for a, b in zip(par_p, par_g)) <= tol_levels
            for (tag_g, par_g) in gt
        ]
        for (tag_p, par_p) in pred
    ]
    best = 0
    indices = range(len(gt))
    for size in range(min(len(pred), len(gt)), best, -1):
        for pred_subset in itertools.combinations(range(len(pred)), size):
            for gt_perm in itertools.permutations(indices, size):
                if all(compatible[i][j] for i, j in zip(pred_subset, gt_perm)):
                    return size
    return 0


# ---------------------------------------------------------------------------
# model and sequence generators


def random_region_rings(rng: np.random.Generator) -> list[np.ndarray]:
    kind = rng.integers(0, 3)
    if kind == 0:  # rectangle
        w, h = rng.uniform(0.3, 1.2, size=2)
        return [np.array([[-w, -h], [w, -h], [w, h], [-w, h]])]
    if kind == 1:  # regular polygon
        n = int(rng.integers(5, 9))
        r = rng.uniform(0.3, 0.9)
        ang = 2 * np.pi * np.arange(n) / n
        return [np.column_stack([r * np.cos(ang), r * np.sin(ang)])]
    # square with a square hole
    w = rng.uniform(0.5, 1.0)
    hw = w * rng.uniform(0.25, 0.45)
    outer = np.array([[-w, -w], [w, -w], [w, w], [-w, w]])
    hole = np.array([[-hw, -hw], [hw, -hw], [hw, hw], [-hw, hw]])
    return [outer, hole]


def random_model(seed: int, max_prisms: int = 3):
    """A compiled-model lookalike built directly on the real-coordinate layer."""
    from secad.kernel.profile import build_region
    from secad.kernel.solid import CompiledModel, Frame, Prism, euler_zyx_matrix

    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, max_prisms + 1))
    prisms = []
    for i in range(n):
        region = build_region(random_region_rings(rng))
        angles = rng.uniform(-np.pi, np.pi, size=3) if rng.random() < 0.5 else np.zeros(3)
        frame = Frame(rng.uniform(-0.4, 0.4, size=3), euler_zyx_matrix(*angles))
        extent_pos = float(rng.uniform(0.1, 0.8))
        extent_neg = float(rng.uniform(0.0, 0.8))
        boolean = (
            BoolKind.NEW_BODY
            if i == 0
            else [BoolKind.JOIN, BoolKind.CUT, BoolKind.INTERSECT, BoolKind.NEW_BODY][int(rng.integers(0, 4))]
        )
        prisms.append(Prism(region, frame, extent_pos, extent_neg, boolean))
    return CompiledModel(tuple(prisms))


def square_loop(lo: int = 96, hi: int = 160) -> Loop:
    return Loop((lo, lo), (Line((hi, lo)), Line((hi, hi)), Line((lo, hi)), Line((lo, lo))))


def square_sequence(
    lo: int = 96,
    hi: int = 160,
    extent_pos: int = 160,
    extent_neg: int = 0,
    scale: int = 160,
    plane: SketchPlane = SketchPlane((128, 128, 128), (128, 128, 128)),
    boolean: BoolKind = BoolKind.NEW_BODY,
) -> CadSequence:
    sketch = Sketch(plane, (square_loop(lo, hi),))
    op = ExtrudeOp(0, extent_pos, extent_neg, scale, boolean)
    return CadSequence((sketch,), (op,))


def _random_level(rng) -> int:
    return int(rng.integers(0, 256))


def _random_loop(rng) -> Loop:
    kind = rng.integers(0, 3)
    if kind == 0:  # circle
        return Loop(
            (_random_level(rng), _random_level(rng)),
            (Circle((_random_level(rng), _random_level(rng)), int(rng.integers(1, 256))),),
        )
    if kind == 1:  # rectangle-ish closed line chain
        x0, y0 = rng.integers(20, 100, size=2)
        x1, y1 = rng.integers(130, 230, size=2)
        return Loop(
            (int(x0), int(y0)),
            (
                Line((int(x1), int(y0))),
                Line((int(x1), int(y1))),
                Line((int(x0), int(y1))),
                Line((int(x0), int(y0))),
            ),
        )
    # arc + line closing chain (closure is exact at the level grid)
    x0, y0 = int(rng.integers(30, 110)), int(rng.integers(30, 110))
    x1, y1 = int(rng.integers(140, 220)), int(rng.integers(140, 220))
    arc = Arc((x1, y1), int(rng.integers(50, 200)), bool(rng.integers(0, 2)))
    return Loop((x0, y0), (arc, Line((x0, y0))))


def random_sequence(rng: np.random.Generator) -> CadSequence:
    """Structurally valid random sequence (valid grammar, not always compilable)."""
    n_sketches = int(rng.integers(1, 4))
    sketches = []
    for _ in range(n_sketches):
        plane = SketchPlane(
            tuple(_random_level(rng) for _ in range(3)),
            tuple(_random_level(rng) for _ in range(3)),
        )
        loops = tuple(_random_loop(rng) for _ in range(int(rng.integers(1, 3))))
        sketches.append(Sketch(plane, loops))
    extrudes = []
    order = list(rng.permutation(n_sketches))
    for i, sketch_index in enumerate(order + [int(rng.integers(0, n_sketches)) for _ in range(int(rng.integers(0, 3)))]):
        extent_pos = int(rng.integers(0, 256))
        extent_neg = int(rng.integers(1, 256)) if extent_pos == 0 else int(rng.integers(0, 256))
        extrudes.append(
            ExtrudeOp(
                int(sketch_index),
                extent_pos,
                extent_neg,
                _random_level(rng),
                BoolKind.NEW_BODY if i == 0 else list(BoolKind)[int(rng.integers(0, 4))],
            )
        )
    return CadSequence(tuple(sketches), tuple(extrudes))
