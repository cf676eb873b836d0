"""Command-line entry points: simulate, eval-decision, eval-control,
gen-dataset, serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .evaluation import (
    CONTROL_SCENARIOS,
    ControlReport,
    dataset_to_jsonl,
    eval_decision_accuracy,
    gen_finetune_dataset,
    gen_state_dataset,
    run_control_scenario,
    scenario_by_id,
)
from .orchestrator import Orchestrator, RunConfig, bundled_track_path, build_backends, run_loop
from .track import load_track


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--backend", choices=["scripted", "replay", "remote"], default="scripted")
    parser.add_argument("--config", type=Path, default=None, help="JSON run config")
    parser.add_argument("--track", type=Path, default=None, help="track CSV path")
    parser.add_argument("--transcript", type=Path, default=None, help="replay transcript (JSONL)")


def _build_config(args, **extra) -> RunConfig:
    overrides = {k: v for k, v in extra.items() if v is not None}
    if args.config:
        config = RunConfig.from_file(args.config, **overrides)
    else:
        config = RunConfig.from_dict(overrides)
    config.seed = args.seed
    if args.track:
        config.track_path = str(args.track)
    backend = dict(config.backend)
    backend["kind"] = args.backend
    if args.backend == "replay":
        if args.transcript:
            backend["transcript"] = str(args.transcript)
        if "transcript" not in backend:
            raise SystemExit("replay backend needs --transcript or a config entry")
    config.backend = backend
    return config


def cmd_simulate(args) -> int:
    prompts = []
    for spec in args.prompt or []:
        if ":" in spec and spec.split(":", 1)[0].replace(".", "").isdigit():
            t_text, text = spec.split(":", 1)
            prompts.append({"t": float(t_text), "text": text})
        else:
            prompts.append({"t": 0.0, "text": spec})
    config = _build_config(
        args,
        duration=args.duration,
        out_dir=str(args.out_dir) if args.out_dir else None,
        prompts=prompts,
        crashed_start=args.crashed_start,
    )
    artifacts = run_loop(config)
    summary = {
        "duration": artifacts.duration,
        "crashed": artifacts.crashed,
        "final_params": artifacts.final_params,
        "decision_cycles": len(artifacts.decisions),
        "param_updates": len(artifacts.journal),
        "state_log": artifacts.state_log_path,
    }
    print(json.dumps(summary, indent=2))
    return 0


def cmd_eval_decision(args) -> int:
    config = _build_config(args)
    track = load_track(config.track_path or bundled_track_path())
    dataset = gen_state_dataset(track, n=args.n, seed=args.seed)
    if args.dataset_out:
        dataset_to_jsonl(dataset, args.dataset_out)
    if args.oracle:
        report = eval_decision_accuracy(dataset, oracle=True, use_rag=not args.no_rag)
    else:
        decision_gateway, _ = build_backends(config.backend)
        report = eval_decision_accuracy(
            dataset, gateway=decision_gateway, use_rag=not args.no_rag,
            model_tag=config.backend.get("kind", "scripted"),
        )
    print(report.to_text())
    print(report.to_json())
    return 0


def cmd_eval_control(args) -> int:
    config = _build_config(args)
    track = load_track(config.track_path or bundled_track_path())
    _, adapter_gateway = build_backends(config.backend)
    scenarios = CONTROL_SCENARIOS if args.scenario == "all" else (scenario_by_id(args.scenario),)
    results = [
        run_control_scenario(s, track, gateway=adapter_gateway, seed=args.seed,
                             duration=args.duration)
        for s in scenarios
    ]
    report = ControlReport(list(results))
    print(report.to_json())
    print(report.to_text(), file=sys.stderr)
    return 0


def cmd_gen_dataset(args) -> int:
    config = _build_config(args)
    track = load_track(config.track_path or bundled_track_path())
    out = args.out or Path(f"langdrive_{args.kind}_dataset.jsonl")
    gateway = None
    if args.backend != "scripted":
        _, gateway = build_backends(config.backend)
    report = gen_finetune_dataset(args.kind, track, out, n=args.n, seed=args.seed, gateway=gateway)
    print(json.dumps({"path": report.path, "lines": report.lines, "skipped": report.skipped}))
    return 0


def cmd_serve(args) -> int:
    from .server import serve

    config = _build_config(args, out_dir=str(args.out_dir) if args.out_dir else None)
    config.sync_cycles = False
    orchestrator = Orchestrator(config)
    if args.prompt:
        orchestrator.inject_prompt(args.prompt)
    serve(orchestrator, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="langdrive", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="headless closed-loop run")
    _add_common(p)
    p.add_argument("--duration", type=float, default=20.0)
    p.add_argument("--prompt", action="append",
                   help="instruction text, or t:text to schedule (repeatable)")
    p.add_argument("--out-dir", type=Path, default=None)
    p.add_argument("--crashed-start", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("eval-decision", help="decision accuracy over a labeled dataset")
    _add_common(p)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--oracle", action="store_true", help="label-fed oracle gateway")
    p.add_argument("--no-rag", action="store_true")
    p.add_argument("--dataset-out", type=Path, default=None)
    p.set_defaults(func=cmd_eval_decision)

    p = sub.add_parser("eval-control", help="closed-loop adaptability scenarios")
    _add_common(p)
    p.add_argument("--scenario", default="all",
                   choices=["all"] + [s.id for s in CONTROL_SCENARIOS])
    p.add_argument("--duration", type=float, default=None)
    p.set_defaults(func=cmd_eval_control)

    p = sub.add_parser("gen-dataset", help="emit fine-tune prompt/response pairs")
    _add_common(p)
    p.add_argument("--kind", choices=["decision", "mpc"], required=True)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=cmd_gen_dataset)

    p = sub.add_parser("serve", help="telemetry/control service with wall-clock loop")
    _add_common(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8700)
    p.add_argument("--prompt", default=None)
    p.add_argument("--out-dir", type=Path, default=None)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
