"""Command-line surface.

Verbs:
  simulate   headless run of a scenario, writes a session log
  estimate   offline parameter-trace statistics for a log
  verbalize  offline segmentation + recursion fit for a log
  replay     re-simulate a log and verify tick lines byte for byte
  report     summary JSON and CSV series (F, eps, omega) for a log
  play       serve live sessions over the websocket endpoint

Scenarios are builtin names (pursuit1d, pursuit2d, dialogue, iavr,
iavr-room, ...) or paths to scenario JSON documents.  The default log
directory comes from $INTERGAME_LOG_DIR, falling back to ./logs.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from ..errors import EngineError, SchemaError
from ..scenarios import ScenarioSpec, builtin_scenario, load_scenario
from .log import SessionLog
from .replay import replay, trajectory_from_log
from .server import create_app
from .session import Session, SessionConfig


def resolve_scenario(text: str) -> ScenarioSpec:
    if text.startswith("builtin:"):
        return builtin_scenario(text.split(":", 1)[1])
    try:
        return builtin_scenario(text)
    except SchemaError:
        return load_scenario(text)


def _apply_config_file(args: argparse.Namespace):
    if getattr(args, "config", None):
        doc = json.loads(Path(args.config).read_text())
        for key, value in doc.items():
            if getattr(args, key, None) in (None, argparse.SUPPRESS):
                setattr(args, key, value)


def _session_from_args(args, mode: str) -> Session:
    spec = resolve_scenario(args.scenario)
    cfg = SessionConfig(
        scenario=spec,
        mode=mode,
        session_id=getattr(args, "session", None),
        seed=getattr(args, "seed", None),
        sets=getattr(args, "sets", None),
        log_dir=getattr(args, "log_dir", None),
        pace=getattr(args, "pace", "fast") or "fast",
        set_cap_s=getattr(args, "set_cap", 60.0),
    )
    return Session(cfg)


def cmd_simulate(args) -> int:
    session = _session_from_args(args, mode=args.mode or "synthetic")
    summary = session.run_sync()
    print(f"log: {session.log_path}")
    print(
        f"ticks: {summary['ticks']}  sets: {summary['sets']}  "
        f"termination: {summary['termination']}"
    )
    if summary["score"] is not None:
        label = "verbalizable" if summary["verbalizable"] else "not verbalizable"
        print(f"score: {summary['score']:.6f} ({label})")
    return 0


def _analysis_for_log(log: SessionLog, representation=None):
    spec = ScenarioSpec.from_dict(log.header["scenario"])
    compiled = spec.compile()
    compiled.wiring = log.header.get("wiring", compiled.wiring)
    if representation is not None:
        compiled.representations = representation
    traj = trajectory_from_log(log)
    ends = [int(ln["j"]) for ln in log.of_type("set-boundary")]
    starts = None
    if compiled.criterion is not None and ends:
        starts = [0] + ends[:-1]
    from ..analysis import analyze_session

    return compiled, traj, analyze_session(
        traj,
        compiled.representations,
        compiled.cells,
        compiled.functionals,
        set_boundary_ticks=starts,
    )


def cmd_estimate(args) -> int:
    log = SessionLog.read(args.log)
    compiled, traj, analysis = _analysis_for_log(log)
    for i, trace in enumerate(analysis.traces):
        if trace is None:
            print(f"player {i}: no declared representation")
            continue
        vals = trace.valid_values()
        mean = ", ".join(f"{x:.6f}" for x in vals.mean(axis=0))
        sd = ", ".join(f"{x:.6f}" for x in vals.std(axis=0))
        worst = np.nanmax(trace.residual) if trace.valid.any() else float("nan")
        print(f"player {i}: eps mean [{mean}]  sd [{sd}]  max residual {worst:.3e}")
    if args.out:
        _write_eps_csv(Path(args.out), traj, analysis)
        print(f"wrote {args.out}")
    return 0


def cmd_verbalize(args) -> int:
    log = SessionLog.read(args.log)
    _, _, analysis = _analysis_for_log(log)
    print(f"intervals: {len(analysis.windows)}  utterances: {len(analysis.transcript)}")
    if analysis.cell_partition is not None:
        times = ", ".join(f"{t:.2f}" for t in analysis.cell_partition.boundaries())
        print(f"cell-transition boundaries: [{times}]")
    if analysis.score is None:
        print("score: n/a (too few dialogue steps for the recursion fit)")
        return 0
    label = "verbalizable" if analysis.verbalizable else "not verbalizable"
    print(f"score: {analysis.score:.6f} ({label})")
    return 0


def cmd_replay(args) -> int:
    scenario = resolve_scenario(args.scenario) if args.scenario else None
    result = replay(args.log, scenario=scenario)
    if result.partial:
        print(f"partial replay: log truncated, last complete tick {result.last_complete_tick}")
    print(f"compared ticks: {result.compared_ticks}")
    if result.mismatch_ticks:
        print(f"MISMATCH at ticks {result.mismatch_ticks[:10]}")
        return 1
    print("tick lines byte-identical" if result.identical else "prefix verified")
    if result.summary is not None and result.logged_summary is not None:
        same = result.summary == result.logged_summary
        print("summary matches log" if same else "summary differs from log")
        if not same:
            return 1
    return 0


def _write_f_csv(path: Path, log: SessionLog):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["j", "t", "set", "F"])
        for ln in log.ticks:
            w.writerow([ln["j"], ln["t"], ln["set"], ln["F"]])


def _write_eps_csv(path: Path, traj, analysis):
    stacked = analysis.stacked
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        d = 0 if stacked is None else stacked.d_eps
        w.writerow(["j", "t"] + [f"eps{k}" for k in range(d)])
        for j in range(traj.n_ticks):
            row = [j, traj.times[j]]
            if stacked is not None:
                row += [stacked.values[j, k] for k in range(d)]
            w.writerow(row)


def _write_omega_csv(path: Path, analysis):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        if not analysis.states:
            w.writerow(["n"])
            return
        d_o = analysis.states[0].omega.size
        d_v = analysis.states[0].v.size
        w.writerow(
            ["n", "t_start", "t_end"]
            + [f"omega{k}" for k in range(d_o)]
            + [f"v{k}" for k in range(d_v)]
        )
        for s, win in zip(analysis.states, analysis.windows):
            w.writerow([s.index, win.t_start, win.t_end, *s.omega.tolist(), *s.v.tolist()])


def cmd_report(args) -> int:
    log = SessionLog.read(args.log)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _, traj, analysis = _analysis_for_log(log)
    summary = log.summary or {}
    (out / "summary.json").write_text(json.dumps(summary, sort_keys=True, indent=2))
    _write_f_csv(out / "f.csv", log)
    _write_eps_csv(out / "eps.csv", traj, analysis)
    _write_omega_csv(out / "omega.csv", analysis)
    (out / "transcript.jsonl").write_text(analysis.transcript.to_jsonl() + "\n")
    print(f"report written to {out}")
    return 0


def cmd_play(args) -> int:
    import uvicorn

    mode = args.mode or "live"
    session = _session_from_args(args, mode=mode)
    app = create_app({session.session_id: session})
    print(f"session {session.session_id!r} ({mode}) on ws://{args.host}:{args.port}/session/{session.session_id}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="intergame", description="interactive-game engine sessions"
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p, scenario=True):
        if scenario:
            p.add_argument("--scenario", required=True, help="builtin name or scenario JSON path")
            p.add_argument("--seed", type=int, default=None)
            p.add_argument("--sets", type=int, default=1)
            p.add_argument("--session", default=None, help="session id (default: name-seed)")
            p.add_argument("--set-cap", dest="set_cap", type=float, default=60.0)
        p.add_argument("--log-dir", default=None, help=f"default ${'{'}INTERGAME_LOG_DIR{'}'} or ./logs")
        p.add_argument("--config", default=None, help="JSON file with default options")

    p = sub.add_parser("simulate", help="run a scenario headless and log it")
    common(p)
    p.add_argument("--mode", choices=["synthetic"], default="synthetic")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("estimate", help="offline eps-trace statistics for a log")
    p.add_argument("--log", required=True)
    p.add_argument("--out", default=None, help="optional eps CSV path")
    p.set_defaults(fn=cmd_estimate)

    p = sub.add_parser("verbalize", help="offline segmentation and recursion fit")
    p.add_argument("--log", required=True)
    p.set_defaults(fn=cmd_verbalize)

    p = sub.add_parser("replay", help="re-simulate a log and verify it")
    p.add_argument("--log", required=True)
    p.add_argument("--scenario", default=None, help="must hash-match the log header")
    p.set_defaults(fn=cmd_replay)

    p = sub.add_parser("report", help="summary JSON + CSV series for a log")
    p.add_argument("--log", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_report)

    p = sub.add_parser("play", help="serve live sessions over websockets")
    common(p)
    p.add_argument("--mode", choices=["live", "multi-user", "synthetic"], default="live")
    p.add_argument("--port", type=int, default=8123)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--pace", choices=["fast", "realtime"], default="realtime")
    p.set_defaults(fn=cmd_play)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _apply_config_file(args)
    try:
        return args.fn(args)
    except (EngineError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
