"""Command-line interface.

Subcommands: ``compile``, ``judge``, ``dataset``, ``eval``, ``review``,
``kto``. Machine-readable results go to stdout as JSON (with the resolved
configuration echoed under ``"config"``); human-readable notes go to stderr.

Settings resolve in precedence order: command-line flags, then a TOML config
file (``--config``), then ``SECAD_*`` environment variables, then built-in
defaults.

Exit codes::

    0  success
    1  I/O or usage errors (unreadable files, malformed batches, unpaired dirs)
    2  the (sole) input sequence failed to parse, validate, or compile
    3  judged sequence compiled but was rejected by the Chamfer threshold
    4  reference (ground-truth) sequence is invalid
    5  remote generator unavailable
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

try:  # Python 3.11+
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - version-dependent
    import tomli as tomllib

from .diagnostics import GroundTruthInvalid, KernelError, render_problem
from .grammar import parse_sequence, validate_syntax
from .judge import CjmConfig, build_binary_dataset, judge, write_jsonl
from .kernel import compile_sequence, sample_point_cloud, tessellate, write_obj, write_ply
from .kto import KtoConfig, kto_report, load_kto_batch
from .metrics import evaluate_corpus, write_report_csv, write_report_json
from .remote import GeneratorUnavailable, RemoteBinding
from .review import LoopConfig, StubDeterministic, StubStochastic, run_agentic_loop

EXIT_OK = 0
EXIT_IO = 1
EXIT_INVALID = 2
EXIT_REJECTED = 3
EXIT_BAD_REFERENCE = 4
EXIT_GENERATOR = 5

ENV_PREFIX = "SECAD_"

_DEFAULTS: dict[str, object] = {
    "cd_threshold": 0.05,
    "alpha": 1.0,
    "n_points": 2048,
    "seed": 0,
    "arc_segments": 64,
    "subdivision": None,
    "tol_levels": 3,
    "max_iters": 1,
    "beta": 0.1,
    "lambda_d": 1.0,
    "lambda_u": 1.0,
}

_COERCERS = {
    "cd_threshold": float,
    "alpha": float,
    "n_points": int,
    "seed": int,
    "arc_segments": int,
    "subdivision": int,
    "tol_levels": int,
    "max_iters": int,
    "beta": float,
    "lambda_d": float,
    "lambda_u": float,
}


def _note(message: str) -> None:
    print(message, file=sys.stderr)


def _emit(payload: dict) -> None:
    print(json.dumps(payload, indent=2))


def resolve_settings(namespace: argparse.Namespace) -> dict:
    """Merge flags > config file > environment > defaults."""
    settings = dict(_DEFAULTS)
    for key, coerce in _COERCERS.items():
        raw = os.environ.get(f"{ENV_PREFIX}{key.upper()}")
        if raw is not None:
            try:
                settings[key] = coerce(raw)
            except ValueError:
                raise SystemExit(
                    f"environment variable {ENV_PREFIX}{key.upper()}={raw!r} is not a valid {coerce.__name__}"
                )
    config_path = getattr(namespace, "config", None)
    if config_path:
        try:
            with open(config_path, "rb") as handle:
                loaded = tomllib.load(handle)
        except (OSError, tomllib.TOMLDecodeError) as err:
            raise SystemExit(f"cannot read config file {config_path}: {err}")
        for key, value in loaded.items():
            if key not in _DEFAULTS:
                raise SystemExit(f"unknown config key {key!r} in {config_path}")
            settings[key] = _COERCERS[key](value)
    for key in _DEFAULTS:
        value = getattr(namespace, key, None)
        if value is not None:
            settings[key] = value
    return settings


def _cjm_config(settings: dict) -> CjmConfig:
    return CjmConfig(
        cd_threshold=settings["cd_threshold"],
        alpha=settings["alpha"],
        n_points=settings["n_points"],
        seed=settings["seed"],
        arc_segments=settings["arc_segments"],
        subdivision=settings["subdivision"],
    )


def _settings_echo(settings: dict) -> dict:
    return {key: settings[key] for key in sorted(settings)}


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise SystemExit(f"cannot read {path}: {err}")


def _load_valid_sequence(path: str, settings: dict):
    """Parse + validate + compile one file; SystemExit-free, returns problems."""
    text = _read_text(path)
    parsed = parse_sequence(text)
    if not parsed.ok:
        return None, None, list(parsed.diagnostics)
    diags = validate_syntax(parsed.sequence)
    if diags:
        return None, parsed.sequence, list(diags)
    try:
        model = compile_sequence(parsed.sequence, settings["arc_segments"])
    except KernelError as err:
        return None, parsed.sequence, [err]
    return model, parsed.sequence, []


# ---------------------------------------------------------------------------
# subcommands


def cmd_compile(ns: argparse.Namespace) -> int:
    settings = resolve_settings(ns)
    model, _, problems = _load_valid_sequence(ns.sequence, settings)
    if model is None:
        _emit(
            {
                "ok": False,
                "diagnostics": [render_problem(p) for p in problems],
                "config": _settings_echo(settings),
            }
        )
        for problem in problems:
            _note(render_problem(problem))
        return EXIT_INVALID
    outputs: dict[str, object] = {}
    if ns.obj:
        mesh = tessellate(model, ns.mesh_subdivision)
        write_obj(mesh, ns.obj)
        outputs["obj"] = {"path": ns.obj, "triangles": int(len(mesh.triangles))}
    if ns.ply:
        cloud = sample_point_cloud(
            model, settings["n_points"], settings["seed"], subdivision=settings["subdivision"]
        )
        write_ply(cloud, ns.ply)
        outputs["ply"] = {"path": ns.ply, "points": len(cloud)}
    _emit(
        {
            "ok": True,
            "prisms": len(model.prisms),
            "outputs": outputs,
            "config": _settings_echo(settings),
        }
    )
    return EXIT_OK


def cmd_judge(ns: argparse.Namespace) -> int:
    settings = resolve_settings(ns)
    cfg = _cjm_config(settings)
    pred_text = _read_text(ns.pred)
    gt_text = _read_text(ns.gt)
    try:
        verdict = judge(pred_text, gt_text, cfg)
    except GroundTruthInvalid as err:
        _note(str(err))
        _emit({"error": "ground truth invalid", "detail": str(err), "config": _settings_echo(settings)})
        return EXIT_BAD_REFERENCE
    _emit({**verdict.to_dict(), "config": _settings_echo(settings)})
    if not verdict.compiled:
        return EXIT_INVALID
    return EXIT_OK if verdict.desirable else EXIT_REJECTED


def _paired_files(pred_dir: str, gt_dir: str) -> list[tuple[str, Path, Path]]:
    pred_root, gt_root = Path(pred_dir), Path(gt_dir)
    if not pred_root.is_dir() or not gt_root.is_dir():
        raise SystemExit(f"{pred_dir} and {gt_dir} must both be directories")
    pred_files = {p.stem: p for p in sorted(pred_root.iterdir()) if p.is_file()}
    gt_files = {p.stem: p for p in sorted(gt_root.iterdir()) if p.is_file()}
    missing_gt = sorted(set(pred_files) - set(gt_files))
    missing_pred = sorted(set(gt_files) - set(pred_files))
    if missing_gt or missing_pred:
        for stem in missing_gt:
            _note(f"no reference for prediction {stem!r}")
        for stem in missing_pred:
            _note(f"no prediction for reference {stem!r}")
        raise SystemExit("prediction/reference directories do not pair up")
    return [(stem, pred_files[stem], gt_files[stem]) for stem in sorted(pred_files)]


def cmd_dataset(ns: argparse.Namespace) -> int:
    settings = resolve_settings(ns)
    cfg = _cjm_config(settings)
    pairs = _paired_files(ns.pred_dir, ns.gt_dir)
    items = []
    for stem, pred_path, gt_path in pairs:
        prompt = stem
        if ns.prompt_dir:
            prompt_path = Path(ns.prompt_dir) / f"{stem}.txt"
            if not prompt_path.is_file():
                raise SystemExit(f"missing prompt file {prompt_path}")
            prompt = prompt_path.read_text(encoding="utf-8").strip()
        items.append((prompt, pred_path.read_text(encoding="utf-8"), gt_path.read_text(encoding="utf-8")))
    try:
        records = build_binary_dataset(items, cfg)
    except GroundTruthInvalid as err:
        _note(str(err))
        return EXIT_BAD_REFERENCE
    write_jsonl(records, ns.out)
    _emit(
        {
            "records": len(records),
            "desirable": sum(1 for r in records if r.label),
            "undesirable": sum(1 for r in records if not r.label),
            "out": ns.out,
            "config": _settings_echo(settings),
        }
    )
    return EXIT_OK


def cmd_eval(ns: argparse.Namespace) -> int:
    settings = resolve_settings(ns)
    cfg = _cjm_config(settings)
    pairs = _paired_files(ns.pred_dir, ns.gt_dir)
    corpus = [
        (pred_path.read_text(encoding="utf-8"), gt_path.read_text(encoding="utf-8"))
        for _, pred_path, gt_path in pairs
    ]
    try:
        report = evaluate_corpus(corpus, cfg, settings["tol_levels"])
    except GroundTruthInvalid as err:
        _note(str(err))
        return EXIT_BAD_REFERENCE
    if ns.json_out:
        write_report_json(report, ns.json_out)
    if ns.csv_out:
        write_report_csv(report, ns.csv_out)
    payload = report.to_dict()
    del payload["samples"]  # aggregates on stdout; per-sample rows go to files
    _emit({**payload, "config": _settings_echo(settings)})
    return EXIT_OK


def cmd_review(ns: argparse.Namespace) -> int:
    settings = resolve_settings(ns)
    prompt = _read_text(ns.prompt_file) if ns.prompt_file else ns.prompt
    if prompt is None:
        raise SystemExit("review needs --prompt or --prompt-file")
    if ns.generator == "stub-deterministic":
        binding = StubDeterministic(fail_first_k=ns.fail_first_k)
    elif ns.generator == "stub-stochastic":
        binding = StubStochastic(fail_prob=ns.fail_prob)
    else:
        if not ns.endpoint:
            raise SystemExit("remote generator needs --endpoint")
        binding = RemoteBinding(
            endpoint=ns.endpoint,
            model_name=ns.model_name,
            timeout=ns.timeout,
            max_retries=ns.max_retries,
        )
    loop_cfg = LoopConfig(
        max_iters=settings["max_iters"], seed=settings["seed"], arc_segments=settings["arc_segments"]
    )
    try:
        trace = run_agentic_loop(prompt, binding, loop_cfg)
    except GeneratorUnavailable as err:
        _note(str(err))
        partial = err.trace.to_dict() if err.trace is not None else None
        _emit({"error": "generator unavailable", "detail": str(err), "trace": partial, "config": _settings_echo(settings)})
        return EXIT_GENERATOR
    _emit({**trace.to_dict(), "config": _settings_echo(settings)})
    return EXIT_OK if trace.final_valid else EXIT_INVALID


def cmd_kto(ns: argparse.Namespace) -> int:
    settings = resolve_settings(ns)
    try:
        batch = load_kto_batch(ns.batch)
    except (OSError, ValueError) as err:
        raise SystemExit(str(err))
    if len(batch) < 2:
        raise SystemExit(f"kto needs at least 2 examples, got {len(batch)}")
    cfg = KtoConfig(beta=settings["beta"], lambda_d=settings["lambda_d"], lambda_u=settings["lambda_u"])
    _emit({**kto_report(batch, cfg), "config": _settings_echo(settings)})
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument wiring


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="TOML file with default settings")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--arc-segments", dest="arc_segments", type=int, default=None)


def _add_sampling(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n-points", dest="n_points", type=int, default=None)
    parser.add_argument("--subdivision", type=int, default=None, help="fixed tessellation subdivision depth")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="secad", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="compile a sequence; optionally export OBJ/PLY")
    p.add_argument("sequence", help="path to a sequence text file")
    p.add_argument("--obj", help="write the tessellated boundary as OBJ")
    p.add_argument("--ply", help="write a sampled point cloud as PLY")
    p.add_argument(
        "--mesh-subdivision",
        dest="mesh_subdivision",
        type=int,
        default=0,
        help="uniform subdivision depth for the OBJ export (default 0: coarsest mesh)",
    )
    _add_common(p)
    _add_sampling(p)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("judge", help="judge a prediction against a reference")
    p.add_argument("pred")
    p.add_argument("gt")
    p.add_argument("--cd-threshold", dest="cd_threshold", type=float, default=None)
    _add_common(p)
    _add_sampling(p)
    p.set_defaults(func=cmd_judge)

    p = sub.add_parser("dataset", help="build a binary preference dataset from paired directories")
    p.add_argument("pred_dir")
    p.add_argument("gt_dir")
    p.add_argument("out", help="output JSONL path")
    p.add_argument("--prompt-dir", dest="prompt_dir", help="directory of <stem>.txt prompts")
    p.add_argument("--cd-threshold", dest="cd_threshold", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    _add_common(p)
    _add_sampling(p)
    p.set_defaults(func=cmd_dataset)

    p = sub.add_parser("eval", help="evaluate a prediction corpus against references")
    p.add_argument("pred_dir")
    p.add_argument("gt_dir")
    p.add_argument("--json-out", dest="json_out")
    p.add_argument("--csv-out", dest="csv_out")
    p.add_argument("--tol-levels", dest="tol_levels", type=int, default=None)
    p.add_argument("--cd-threshold", dest="cd_threshold", type=float, default=None)
    _add_common(p)
    _add_sampling(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("review", help="run the generate-review-repair loop")
    p.add_argument("--prompt")
    p.add_argument("--prompt-file", dest="prompt_file")
    p.add_argument(
        "--generator",
        choices=["stub-deterministic", "stub-stochastic", "remote"],
        default="stub-deterministic",
    )
    p.add_argument("--fail-first-k", dest="fail_first_k", type=int, default=0)
    p.add_argument("--fail-prob", dest="fail_prob", type=float, default=0.0)
    p.add_argument("--endpoint")
    p.add_argument("--model-name", dest="model_name", default="cad-generator")
    p.add_argument("--timeout", type=float, default=30.0)
    p.add_argument("--max-retries", dest="max_retries", type=int, default=3)
    p.add_argument("--max-iters", dest="max_iters", type=int, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_review)

    p = sub.add_parser("kto", help="compute the alignment loss report for a JSONL batch")
    p.add_argument("batch", help="JSONL of policy_logprob/ref_logprob/desirable rows")
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--lambda-d", dest="lambda_d", type=float, default=None)
    p.add_argument("--lambda-u", dest="lambda_u", type=float, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_kto)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        namespace = parser.parse_args(argv)
    except SystemExit as err:  # argparse exits itself: 0 for --help, 2 for usage
        return EXIT_OK if err.code in (0, None) else EXIT_IO
    try:
        return namespace.func(namespace)
    except SystemExit as err:
        # Commands raise SystemExit(message) for I/O and usage failures.
        if isinstance(err.code, str):
            _note(err.code)
            return EXIT_IO
        return EXIT_OK if err.code in (0, None) else int(err.code)
    except BrokenPipeError:  # pragma: no cover - depends on the consumer
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
