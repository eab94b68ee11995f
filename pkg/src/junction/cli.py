"""Command-line pipeline: generate, detect, describe, prompt, export, evaluate, report.

Exit codes: 0 success, 1 operational failure, 2 input validation failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
from pathlib import Path

from . import __version__
from .controller import RemoteController, make_controller, read_transcript
from .errors import GenerationError, ParseError, TransportError, ValidationError
from .evaluation import (
    evaluate_corpus,
    summary_to_json,
    summary_to_text,
    write_rows_csv,
)
from .layout import default_layout, parse_layout
from .oracle import (
    OracleConfig,
    analysis_from_obj,
    analysis_to_obj,
    analyze,
    emit_analysis,
    parse_analysis,
    render_report,
)
from .promptkit import build_bundle, build_system_prompt, export_jsonl, split_dataset
from .scenario import (
    GenParams,
    describe_scenario,
    generate_dataset,
    parse_scenario,
    scenario_from_obj,
    scenario_to_obj,
)


def atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def config_hash(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode("utf-8")).hexdigest()[:16]


def _parse_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = text.split("..")
        return int(lo), int(hi)
    except ValueError:
        raise ValidationError(f"--vehicles expects LO..HI, got {text!r}") from None


def _parse_split(text: str) -> tuple[float, float, float]:
    try:
        a, b, c = (float(x) for x in text.split(","))
        return a, b, c
    except ValueError:
        raise ValidationError(f"--split expects three comma-separated ratios, got {text!r}") from None


def _load_layout(args):
    if getattr(args, "layout", None):
        return parse_layout(Path(args.layout).read_text("utf-8"))
    return default_layout()


def _oracle_config(args) -> OracleConfig:
    return OracleConfig(
        time_window_s=args.window,
        tie_epsilon_s=args.tie_eps,
        clearance_gap_s=args.gap,
    )


def _add_oracle_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--window", type=float, default=5.0, help="conflict time window, seconds")
    parser.add_argument("--tie-eps", type=float, default=0.5, help="arrival tie threshold, seconds")
    parser.add_argument("--gap", type=float, default=3.0, help="clearance gap, seconds")


def _load_labeled_dataset(path: Path, layout):
    corpus = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                scenario = scenario_from_obj(record["scenario"], layout)
                analysis = analysis_from_obj(record["analysis"])
            except (json.JSONDecodeError, KeyError) as exc:
                raise ParseError(f"{path}:{lineno}: bad dataset record: {exc}") from exc
            corpus.append((scenario, analysis))
    if not corpus:
        raise ParseError(f"{path}: dataset is empty")
    return corpus


def cmd_generate(args) -> int:
    layout = _load_layout(args)
    cfg = _oracle_config(args)
    params = GenParams(
        vehicle_count_range=_parse_range(args.vehicles),
        conflict_balance=args.balance,
        seed=args.seed,
    )
    items = generate_dataset(params, args.count, layout, cfg)
    out = Path(args.out)
    lines = [
        json.dumps({"scenario": scenario_to_obj(s), "analysis": analysis_to_obj(a)})
        for s, a in items
    ]
    atomic_write_text(out / "dataset.jsonl", "\n".join(lines) + "\n")
    positives = sum(1 for _, a in items if a.is_conflict)
    params_obj = {
        "vehicles": args.vehicles,
        "balance": args.balance,
        "speed_range_kmh": list(params.speed_range_kmh),
        "distance_range_m": list(params.distance_range_m),
        "window": args.window,
        "tie_eps": args.tie_eps,
        "gap": args.gap,
    }
    manifest = {
        "tool": "junction",
        "version": __version__,
        "seed": args.seed,
        "count": args.count,
        "params": params_obj,
        "positives": positives,
        "positive_fraction": positives / args.count,
        "config_hash": config_hash({"seed": args.seed, "count": args.count, **params_obj}),
    }
    atomic_write_text(out / "manifest.json", json.dumps(manifest, indent=2) + "\n")
    print(f"wrote {args.count} labeled scenarios to {out / 'dataset.jsonl'}")
    print(f"positive fraction: {manifest['positive_fraction']:.4f}")
    return 0


def cmd_detect(args) -> int:
    layout = _load_layout(args)
    cfg = _oracle_config(args)
    scenario = parse_scenario(Path(args.scenario).read_text("utf-8"), layout)
    analysis = analyze(scenario, layout, cfg)
    analysis_text = emit_analysis(analysis)
    report_text = render_report(analysis)
    if args.out:
        out = Path(args.out)
        atomic_write_text(out / "analysis.json", analysis_text + "\n")
        atomic_write_text(out / "report.txt", report_text + "\n")
    print(analysis_text)
    print()
    print(report_text)
    return 0


def cmd_describe(args) -> int:
    layout = _load_layout(args)
    scenario = parse_scenario(Path(args.scenario).read_text("utf-8"), layout)
    print(describe_scenario(scenario))
    return 0


def cmd_prompt(args) -> int:
    layout = _load_layout(args)
    if args.scenario:
        cfg = _oracle_config(args)
        scenario = parse_scenario(Path(args.scenario).read_text("utf-8"), layout)
        bundle = build_bundle(scenario, layout, cfg)
        print(
            json.dumps(
                {
                    "system": bundle.system_text,
                    "user": bundle.user_text,
                    "assistant": bundle.expected_text,
                },
                indent=2,
            )
        )
    else:
        print(build_system_prompt(layout))
    return 0


def cmd_export(args) -> int:
    layout = _load_layout(args)
    cfg = _oracle_config(args)
    corpus = _load_labeled_dataset(Path(args.dataset), layout)
    bundles = [build_bundle(s, layout, cfg, analysis=a) for s, a in corpus]
    split = split_dataset(bundles, _parse_split(args.split), args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, part in (
        ("train", split.train),
        ("validation", split.validation),
        ("test", split.test),
    ):
        tmp = out / f".{name}.jsonl.tmp"
        export_jsonl(part, tmp)
        os.replace(tmp, out / f"{name}.jsonl")
    manifest = {
        "tool": "junction",
        "version": __version__,
        "seed": args.seed,
        "split": args.split,
        "sizes": {
            "train": len(split.train),
            "validation": len(split.validation),
            "test": len(split.test),
        },
        "config_hash": config_hash({"seed": args.seed, "split": args.split, "n": len(bundles)}),
    }
    atomic_write_text(out / "manifest.json", json.dumps(manifest, indent=2) + "\n")
    print(
        f"exported {len(split.train)}/{len(split.validation)}/{len(split.test)} "
        f"train/validation/test records to {out}"
    )
    return 0


def _check_manifest_seed(args, dataset_path: Path) -> None:
    manifest_path = dataset_path.parent / "manifest.json"
    if args.seed is None or not manifest_path.exists():
        return
    try:
        manifest = json.loads(manifest_path.read_text("utf-8"))
    except (OSError, json.JSONDecodeError):
        return
    if manifest.get("seed") != args.seed:
        print(
            f"warning: --seed {args.seed} does not match manifest seed "
            f"{manifest.get('seed')}; proceeding",
            file=sys.stderr,
        )


def cmd_evaluate(args) -> int:
    layout = _load_layout(args)
    cfg = _oracle_config(args)
    dataset_path = Path(args.dataset)
    corpus = _load_labeled_dataset(dataset_path, layout)
    _check_manifest_seed(args, dataset_path)
    replay = read_transcript(args.replay) if args.replay else None
    # replay never touches the controller, so remote mode needs no endpoint here
    controller = None
    if replay is None:
        controller = make_controller(
            args.controller, layout, cfg, endpoint=args.endpoint, model=args.model
        )
    try:
        summary = evaluate_corpus(
            controller,
            corpus,
            layout,
            cfg,
            unparseable_as=args.unparseable,
            replay=replay,
            transcript_path=args.transcript,
        )
    finally:
        if isinstance(controller, RemoteController):
            controller.close()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out / "summary.json", summary_to_json(summary) + "\n")
    atomic_write_text(out / "summary.txt", summary_to_text(summary) + "\n")
    tmp = out / ".per_scenario.csv.tmp"
    write_rows_csv(summary, tmp)
    os.replace(tmp, out / "per_scenario.csv")
    print(summary_to_text(summary))
    return 0


def cmd_report(args) -> int:
    analysis = parse_analysis(Path(args.analysis).read_text("utf-8"))
    print(render_report(analysis))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="junction",
        description="Intersection conflict oracle and LLM traffic-controller evaluation pipeline",
    )
    parser.add_argument("--version", action="version", version=f"junction {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a labeled scenario dataset")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--vehicles", default="2..8", help="vehicle count range LO..HI")
    p.add_argument("--balance", type=float, default=None, help="target conflict-positive fraction")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--layout", default=None, help="layout JSON path (default: embedded layout)")
    p.add_argument("--out", required=True)
    _add_oracle_flags(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("detect", help="analyze one scenario file")
    p.add_argument("--scenario", required=True)
    p.add_argument("--layout", default=None)
    p.add_argument("--out", default=None)
    _add_oracle_flags(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("describe", help="textualize one scenario file")
    p.add_argument("--scenario", required=True)
    p.add_argument("--layout", default=None)
    p.set_defaults(func=cmd_describe)

    p = sub.add_parser("prompt", help="emit the system prompt, or a full bundle for a scenario")
    p.add_argument("--scenario", default=None)
    p.add_argument("--layout", default=None)
    _add_oracle_flags(p)
    p.set_defaults(func=cmd_prompt)

    p = sub.add_parser("export", help="split a labeled dataset into fine-tuning JSONL files")
    p.add_argument("--dataset", required=True, help="dataset.jsonl from generate")
    p.add_argument("--split", default="0.7,0.1,0.2")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--layout", default=None)
    p.add_argument("--out", required=True)
    _add_oracle_flags(p)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("evaluate", help="score a controller against a labeled dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--controller", default="reference", help="reference | mock:no|yes|echo | remote")
    p.add_argument("--endpoint", default=None, help="chat-completions URL for remote mode")
    p.add_argument("--model", default=None, help="model name for remote mode")
    p.add_argument("--replay", default=None, help="replay a transcript instead of calling out")
    p.add_argument("--transcript", default=None, help="write raw responses to this JSONL")
    p.add_argument("--unparseable", default="negative", choices=["negative", "positive", "exclude"])
    p.add_argument("--seed", type=int, default=None, help="expected dataset seed (warn on mismatch)")
    p.add_argument("--layout", default=None)
    p.add_argument("--out", required=True)
    _add_oracle_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="render the textual report for an analysis JSON file")
    p.add_argument("--analysis", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (GenerationError, TransportError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
