"""secad: sketch-and-extrude CAD sequences as data.

A toolkit for systems that generate parametric CAD programs as text: a
canonical grammar with recovering parser and structural validator, a native
geometry kernel (profiles, extruded CSG solids, tessellation, surface
sampling), Chamfer-Distance judgment of predictions against references,
preference-dataset builders, corpus metrics, a generate-review-repair loop,
and alignment-loss math over supplied log-probabilities.
"""

from .diagnostics import Diagnostic, ErrorCode, GroundTruthInvalid, KernelError, render_problem
from .grammar import ParseResult, parse_sequence, print_sequence, tokenize, validate_syntax
from .judge import (
    CjmConfig,
    JudgeVerdict,
    PairedRecord,
    PreferenceRecord,
    build_binary_dataset,
    build_paired_dataset,
    chamfer_distance,
    compile_prediction,
    judge,
    write_jsonl,
)
from .kernel import (
    CompiledModel,
    Mesh,
    PointClass,
    PointCloud,
    classify_point,
    classify_points,
    compile_sequence,
    normalize,
    sample_point_cloud,
    tessellate,
    write_obj,
    write_ply,
)
from .kto import (
    KtoConfig,
    KtoExample,
    estimate_z0,
    implied_reward,
    kto_grad,
    kto_loss,
    kto_report,
    kto_value,
    load_kto_batch,
    sft_loss,
)
from .metrics import (
    EvalReport,
    SampleEval,
    cd_stats,
    evaluate_corpus,
    f1_primitives,
    invalidity_ratio,
)
from .model import (
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
from .remote import GeneratorUnavailable, MalformedResponse, RemoteBinding, generate_remote
from .review import (
    Attempt,
    LoopConfig,
    LoopTrace,
    ReviewReport,
    StubDeterministic,
    StubStochastic,
    augment_prompt,
    review,
    run_agentic_loop,
)
from .deepcad import import_deepcad_json

__version__ = "0.1.0"
