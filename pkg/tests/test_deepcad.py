"""Tests for the DeepCAD-style JSON importer.

Fixture documents live in tests/data/. Expected quantization levels for
block.json are worked out by hand from the normalization scheme:

    8 x 4 rectangle, one-sided extent 2  ->  occupancy 8 x 4 x 2
    world_scale = 1.5 / 8 = 0.1875, world_center = (4, 2, 1)
    profile half extent (L-inf) = 4  ->  sketch_scale = 0.75  -> level 191
    extent_pos = 2 * 0.1875 = 0.375  -> level 96
    plane origin = (0, 0, -0.1875)   -> levels (128, 128, 104)
"""

from __future__ import annotations

import json
import math

import numpy as np
import pytest

from secad.deepcad import import_deepcad_json
from secad.diagnostics import ErrorCode
from secad.grammar import parse_sequence, print_sequence
from secad.judge import chamfer_distance
from secad.kernel import (
    CompiledModel,
    Frame,
    Prism,
    build_region,
    compile_sequence,
    sample_point_cloud,
)
from secad.model import Arc, BoolKind, Circle, Line


def load_fixture(data_dir, name):
    with open(data_dir / f"{name}.json") as handle:
        return json.load(handle)


def import_fixture(data_dir, name):
    result = import_deepcad_json(load_fixture(data_dir, name))
    assert result.ok, [d.message for d in result.diagnostics]
    return result.sequence


# ---------------------------------------------------------------------------
# Small document builders for in-code failure cases.


def _line(sx, sy, ex, ey):
    return {"type": "Line3D", "start_point": {"x": sx, "y": sy}, "end_point": {"x": ex, "y": ey}}


def _rect_profile(w, h):
    curves = [_line(0, 0, w, 0), _line(w, 0, w, h), _line(w, h, 0, h), _line(0, h, 0, 0)]
    return {"loops": [{"is_outer": True, "profile_curves": curves}]}


def _extrude_entity(d1=1.0, extent="OneSideFeatureExtentType", op="NewBodyFeatureOperation", d2=0.0):
    entity = {
        "type": "ExtrudeFeature",
        "profiles": [{"sketch": "s0", "profile": "p0"}],
        "operation": op,
        "extent_type": extent,
        "extent_one": {"distance": {"value": d1}},
    }
    if extent == "TwoSidesFeatureExtentType":
        entity["extent_two"] = {"distance": {"value": d2}}
    return entity


def _document(profile=None, *, transform=None, extrude=None):
    sketch = {"type": "Sketch", "profiles": {"p0": profile or _rect_profile(2, 1)}}
    if transform is not None:
        sketch["transform"] = transform
    return {
        "entities": {"s0": sketch, "e0": extrude or _extrude_entity()},
        "sequence": [{"type": "Sketch", "entity": "s0"}, {"type": "ExtrudeFeature", "entity": "e0"}],
    }


def codes(result):
    return [d.code for d in result.diagnostics]


# ---------------------------------------------------------------------------
# block.json: every quantized level checked against the hand computation.


def test_block_exact_levels(data_dir):
    seq = import_fixture(data_dir, "block")
    assert len(seq.sketches) == 1
    assert len(seq.extrudes) == 1

    sketch = seq.sketches[0]
    assert sketch.plane.origin == (128, 128, 104)
    assert sketch.plane.orientation == (128, 128, 128)
    (loop,) = sketch.loops
    assert loop.start == (0, 64)
    assert loop.curves == (Line((255, 64)), Line((255, 191)), Line((0, 191)), Line((0, 64)))

    op = seq.extrudes[0]
    assert op.sketch_index == 0
    assert op.extent_pos == 96
    assert op.extent_neg == 0
    assert op.sketch_scale == 191
    assert op.boolean is BoolKind.NEW_BODY


def test_block_matches_exact_world_geometry(data_dir):
    """The quantized import stays within grid resolution of the true shape."""
    seq = import_fixture(data_dir, "block")
    model = compile_sequence(seq, normalized=False)

    ring = np.array([[-0.75, -0.375], [0.75, -0.375], [0.75, 0.375], [-0.75, 0.375]])
    oracle = CompiledModel(
        (
            Prism(
                build_region([ring]),
                Frame(np.array([0.0, 0.0, -0.1875]), np.eye(3)),
                0.375,
                0.0,
                BoolKind.NEW_BODY,
            ),
        )
    )

    lo, hi = model.bbox()
    olo, ohi = oracle.bbox()
    # One quantization step is 2/255 ~ 0.008; the plane tilt from the signed
    # grid having no exact zero adds a further ~0.01 on the long axis.
    assert np.abs(np.concatenate([lo - olo, hi - ohi])).max() < 0.03

    cd = chamfer_distance(
        sample_point_cloud(model, 4096, seed=0), sample_point_cloud(oracle, 4096, seed=1)
    )
    assert cd < 2e-3


def test_block_round_trips_through_text(data_dir):
    seq = import_fixture(data_dir, "block")
    result = parse_sequence(print_sequence(seq))
    assert result.ok
    assert result.sequence == seq


# ---------------------------------------------------------------------------
# plate_with_hole.json: two circle loops, symmetric extent.


def test_plate_with_hole_structure(data_dir):
    seq = import_fixture(data_dir, "plate_with_hole")
    (sketch,) = seq.sketches
    assert len(sketch.loops) == 2
    outer, inner = sketch.loops
    assert isinstance(outer.curves[0], Circle)
    assert isinstance(inner.curves[0], Circle)
    # Outer loop comes first and fills the profile's own [0, 1] radius scale.
    assert outer.curves[0].radius == 255
    assert inner.curves[0].radius < outer.curves[0].radius

    (op,) = seq.extrudes
    assert op.extent_pos == op.extent_neg  # symmetric extent splits evenly
    assert op.extent_pos > 0


def test_plate_with_hole_membership(data_dir):
    seq = import_fixture(data_dir, "plate_with_hole")
    model = compile_sequence(seq, normalized=False)
    probes = np.array(
        [
            [0.5, 0.0, 0.0],  # annulus material
            [0.0, 0.0, 0.0],  # inside the hole
            [0.0, 0.0, 0.2],  # above the plate
        ]
    )
    assert model.contains(probes).tolist() == [True, False, False]


# ---------------------------------------------------------------------------
# bracket_cut.json: two sketches, second op subtracts with TwoSides extent.


def test_bracket_cut_structure(data_dir):
    seq = import_fixture(data_dir, "bracket_cut")
    assert len(seq.sketches) == 2
    assert len(seq.extrudes) == 2
    base, cut = seq.extrudes
    assert base.boolean is BoolKind.NEW_BODY
    assert cut.boolean is BoolKind.CUT
    assert cut.sketch_index == 1
    # TwoSides distances 1.5 and -1.5: magnitudes land on both sides.
    assert cut.extent_pos == cut.extent_neg
    assert cut.extent_pos > 0


def test_bracket_cut_membership(data_dir):
    seq = import_fixture(data_dir, "bracket_cut")
    model = compile_sequence(seq, normalized=False)
    probes = np.array(
        [
            [0.0, 0.0, 0.0],  # on the drilled axis: removed
            [0.6, 0.6, 0.0],  # corner material survives
            [0.3, 0.0, 0.0],  # still inside the hole radius
            [0.6, 0.6, 0.5],  # above the block
        ]
    )
    assert model.contains(probes).tolist() == [False, True, False, False]


# ---------------------------------------------------------------------------
# angled_slot.json: rotated plane, negative one-sided extent, arcs.


def test_angled_slot_structure(data_dir):
    seq = import_fixture(data_dir, "angled_slot")
    (sketch,) = seq.sketches
    (op,) = seq.extrudes

    # A negative one-sided distance extrudes against the plane normal.
    assert op.extent_pos == 0
    assert op.extent_neg > 0

    # The sketch basis maps profile-y to world-z, so the plane is rotated.
    assert sketch.plane.orientation != (128, 128, 128)

    (loop,) = sketch.loops
    kinds = [type(c) for c in loop.curves]
    assert kinds == [Line, Arc, Line, Arc]
    for curve in loop.curves:
        if isinstance(curve, Arc):
            assert curve.ccw is True
            assert curve.sweep == 128  # half turn


def test_angled_slot_occupies_rotated_box(data_dir):
    seq = import_fixture(data_dir, "angled_slot")
    model = compile_sequence(seq, normalized=False)
    lo, hi = model.bbox()
    # Stadium length 6 dominates: x spans the full normalized box, the
    # extrusion (1.5 world units) runs along world y, profile height along z.
    assert hi[0] - lo[0] == pytest.approx(1.5, abs=0.03)
    assert hi[1] - lo[1] == pytest.approx(1.5 * 0.25, abs=0.03)
    assert hi[2] - lo[2] == pytest.approx(2.0 * 0.25, abs=0.03)


# ---------------------------------------------------------------------------
# Unsupported content and structural failures.


def test_unsupported_features_are_reported(data_dir):
    result = import_deepcad_json(load_fixture(data_dir, "unsupported"))
    assert not result.ok
    assert all(c is ErrorCode.UNKNOWN_TOKEN for c in codes(result))
    messages = " | ".join(d.message for d in result.diagnostics)
    assert "Spline3D" in messages
    assert "FilletFeature" in messages
    assert len(result.diagnostics) >= 2


@pytest.mark.parametrize("document", [None, 42, ["entities"], {"entities": {}}, {"sequence": []}])
def test_malformed_document_shell(document):
    result = import_deepcad_json(document)
    assert not result.ok
    assert codes(result) == [ErrorCode.UNKNOWN_TOKEN]


def test_undefined_entity_reference():
    result = import_deepcad_json(
        {
            "entities": {"s0": {"type": "Sketch", "profiles": {"p0": _rect_profile(2, 1)}}},
            "sequence": [{"type": "ExtrudeFeature", "entity": "missing"}],
        }
    )
    assert not result.ok
    assert codes(result) == [ErrorCode.BAD_REFERENCE]
    assert "missing" in result.diagnostics[0].message


def test_zero_total_extent_rejected():
    result = import_deepcad_json(_document(extrude=_extrude_entity(d1=0.0)))
    assert not result.ok
    assert codes(result) == [ErrorCode.INVALID_EXTRUSION]


def test_document_without_extrudes_is_empty():
    document = {
        "entities": {"s0": {"type": "Sketch", "profiles": {"p0": _rect_profile(2, 1)}}},
        "sequence": [{"type": "Sketch", "entity": "s0"}],
    }
    result = import_deepcad_json(document)
    assert not result.ok
    assert codes(result) == [ErrorCode.EMPTY_RESULT]


def test_left_handed_transform_rejected():
    transform = {
        "origin": {"x": 0, "y": 0, "z": 0},
        "x_axis": {"x": 1, "y": 0, "z": 0},
        "y_axis": {"x": 0, "y": 1, "z": 0},
        "z_axis": {"x": 0, "y": 0, "z": -1},
    }
    result = import_deepcad_json(_document(transform=transform))
    assert not result.ok
    assert codes(result) == [ErrorCode.UNKNOWN_TOKEN]
    assert "left-handed" in result.diagnostics[0].message


def test_arc_radius_mismatch_rejected():
    profile = {
        "loops": [
            {
                "profile_curves": [
                    _line(0, 0, 4, 0),
                    {
                        "type": "Arc3D",
                        "start_point": {"x": 4, "y": 0},
                        "end_point": {"x": 4, "y": 2},
                        "center_point": {"x": 4, "y": 1.2},  # radii 1.2 vs 0.8
                    },
                    _line(4, 2, 0, 2),
                    _line(0, 2, 0, 0),
                ]
            }
        ]
    }
    result = import_deepcad_json(_document(profile=profile))
    assert not result.ok
    assert codes(result) == [ErrorCode.UNKNOWN_TOKEN]
    assert "equidistant" in result.diagnostics[0].message


def test_anisotropic_placement_can_exceed_profile_range():
    """A long plate along a diagonal compresses the per-axis occupancy.

    The world scale comes from axis-aligned occupancy edges; the profile's
    own half extent does not shrink with it, so the sketch scale overflows
    the representable [0, 1] and the import refuses the document.
    """
    s3 = 1.0 / math.sqrt(3.0)
    s2 = 1.0 / math.sqrt(2.0)
    z = s3 * s2
    transform = {
        "origin": {"x": 0, "y": 0, "z": 0},
        "x_axis": {"x": s3, "y": s3, "z": s3},
        "y_axis": {"x": s2, "y": -s2, "z": 0},
        "z_axis": {"x": z, "y": z, "z": -2 * z},  # x cross y: keep it right-handed
    }
    result = import_deepcad_json(
        _document(profile=_rect_profile(10.0, 0.1), transform=transform, extrude=_extrude_entity(d1=0.05))
    )
    assert not result.ok
    assert codes(result) == [ErrorCode.OUT_OF_RANGE_PARAM]
    assert "profile scale" in result.diagnostics[0].message


def test_all_problems_collected_before_giving_up():
    """Diagnostics accumulate across sequence steps instead of stopping at one."""
    document = {
        "entities": {"s0": {"type": "Sketch", "profiles": {"p0": _rect_profile(2, 1)}}},
        "sequence": [
            {"type": "ExtrudeFeature", "entity": "ghost"},
            "not-a-step",
            {"type": "ChamferFeature", "entity": "s0"},
        ],
    }
    result = import_deepcad_json(document)
    assert not result.ok
    assert sorted(c.value for c in codes(result)) == ["BadReference", "UnknownToken", "UnknownToken"]


# ---------------------------------------------------------------------------
# Sketch sharing: repeated profile references collapse to one sketch.


def test_extrudes_share_identical_sketches():
    document = {
        "entities": {
            "s0": {"type": "Sketch", "profiles": {"p0": _rect_profile(2, 2)}},
            "e0": _extrude_entity(d1=1.0),
            "e1": _extrude_entity(d1=0.5, op="JoinFeatureOperation"),
        },
        "sequence": [
            {"type": "Sketch", "entity": "s0"},
            {"type": "ExtrudeFeature", "entity": "e0"},
            {"type": "ExtrudeFeature", "entity": "e1"},
        ],
    }
    result = import_deepcad_json(document)
    assert result.ok
    seq = result.sequence
    assert len(seq.sketches) == 1
    assert [op.sketch_index for op in seq.extrudes] == [0, 0]
    assert [op.boolean for op in seq.extrudes] == [BoolKind.NEW_BODY, BoolKind.JOIN]
    assert seq.extrudes[0].extent_pos > seq.extrudes[1].extent_pos


def test_every_fixture_compiles_and_round_trips(data_dir):
    for name in ("block", "plate_with_hole", "bracket_cut", "angled_slot"):
        seq = import_fixture(data_dir, name)
        model = compile_sequence(seq)
        lo, hi = model.bbox()
        assert float((hi - lo).max()) == pytest.approx(2.0, abs=1e-9)
        result = parse_sequence(print_sequence(seq))
        assert result.ok and result.sequence == seq
