"""Deterministic re-simulation of logged sessions.

Replay rebuilds the runner from the header (scenario document, seed, mode
wiring, set limit), feeds the logged controls at the ticks they originally
applied, and compares the regenerated tick lines with the logged ones; the
log is valid when they match byte for byte.  A truncated log replays its
complete prefix and reports the last complete tick.

Passing a re-analysis representation keeps the trajectory comparison but
recomputes the estimate traces under the new declaration, which is how
"same play, different reading" studies run offline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..analysis import SessionAnalysis, analyze_session
from ..engine import Trajectory
from ..errors import ReplayMismatch
from ..perception import MatchRunner
from ..scenarios import ScenarioSpec, load_scenario
from .log import SessionLog, config_hash, dumps, tick_line
from .session import build_summary

TRAJECTORY_FIELDS = ("j", "t", "set", "phi", "xi", "u0", "u")


@dataclass
class ReplayResult:
    identical: bool
    compared_ticks: int
    mismatch_ticks: list[int]
    partial: bool
    last_complete_tick: int | None
    summary: dict | None
    logged_summary: dict | None
    trajectory: Trajectory
    analysis: SessionAnalysis
    eps_recomputed: bool

    def raise_on_mismatch(self):
        if not self.identical:
            where = self.mismatch_ticks[:5]
            raise ReplayMismatch(f"tick lines diverge at {where}")


def trajectory_from_log(log: SessionLog) -> Trajectory:
    """Trajectory carried by the tick lines themselves (no re-simulation)."""
    ticks = log.ticks
    if not ticks:
        raise ReplayMismatch("log contains no tick lines")
    doc = log.header["scenario"]
    n_players = int(doc["n_players"])
    phi = np.asarray([ln["phi"] for ln in ticks], dtype=float)
    xi = np.asarray([ln["xi"] for ln in ticks], dtype=float)
    if xi.ndim == 1:
        xi = xi.reshape(len(ticks), -1)
    u0 = [
        np.asarray([ln["u0"][i] for ln in ticks], dtype=float) for i in range(n_players)
    ]
    u = [
        np.asarray([ln["u"][i] for ln in ticks], dtype=float) for i in range(n_players)
    ]
    return Trajectory(
        dt=float(log.header["dt"]),
        seed=int(log.header["seed"]),
        jet_order=int(doc["jet_order"]),
        phi=phi,
        xi=xi,
        u0=u0,
        u=u,
    )


def _compiled_from_header(header: dict, scenario=None):
    if scenario is not None:
        spec = load_scenario(scenario)
        if config_hash(spec.to_dict()) != header["config_hash"]:
            raise ReplayMismatch(
                "provided scenario does not hash-match the log header; refusing to replay"
            )
    else:
        spec = ScenarioSpec.from_dict(header["scenario"])
    compiled = spec.compile()
    compiled.wiring = header.get("wiring", compiled.wiring)
    return spec, compiled


def _controls_by_tick(log: SessionLog) -> dict[int, list[tuple[int, np.ndarray]]]:
    byj: dict[int, list[tuple[int, np.ndarray]]] = {}
    for ln in log.controls:
        byj.setdefault(int(ln["j_applied"]), []).append(
            (int(ln["player"]), np.asarray(ln["u0"], dtype=float))
        )
    return byj


def replay(log_path, scenario=None, representation_override=None) -> ReplayResult:
    """Re-simulate a logged session and verify it tick line by tick line."""
    log = SessionLog.read(log_path)
    _, compiled = _compiled_from_header(log.header, scenario)
    eps_recomputed = representation_override is not None
    if eps_recomputed:
        reps = representation_override
        if not isinstance(reps, (list, tuple)):
            reps = [reps] * compiled.dynamics.n_players
        compiled.representations = list(reps)

    runner = MatchRunner(
        compiled,
        seed=int(log.header["seed"]),
        set_limit=log.header.get("sets"),
        open_ended=log.header.get("sets") is None,
        set_cap_s=float(log.header.get("set_cap_s", 60.0)),
        wall_cap_s=None if log.header.get("sets") is not None else 3600.0,
    )
    controls = _controls_by_tick(log)
    hold: dict[int, np.ndarray] = {}
    mismatches: list[int] = []
    logged_ticks = log.ticks
    compared = 0
    for expect in logged_ticks:
        if runner.done:
            mismatches.append(int(expect["j"]))
            break
        j = runner.engine.j
        for player, vec in controls.get(j, []):
            hold[player] = vec
        sample, _ = runner.tick(hold if hold else None)
        fresh = tick_line(sample)
        compared += 1
        if eps_recomputed:
            same = all(dumps(fresh[k]) == dumps(expect[k]) for k in TRAJECTORY_FIELDS)
        else:
            same = dumps(fresh) == dumps(expect)
        if not same:
            mismatches.append(int(expect["j"]))

    # an intact log must also end exactly where the replay ends
    extra_replay_ticks = not runner.done and not log.truncated
    if extra_replay_ticks:
        while not runner.done:
            j = runner.engine.j
            for player, vec in controls.get(j, []):
                hold[player] = vec
            runner.tick(hold if hold else None)
        mismatches.append(-1)

    summary = None
    analysis_boundaries = [s.start_tick for s in runner.sets] if runner.sets else None
    if runner.done:
        summary = build_summary(runner, compiled.criterion is not None)
    traj = runner.trajectory()
    analysis = analyze_session(
        traj,
        compiled.representations,
        compiled.cells,
        compiled.functionals,
        set_boundary_ticks=analysis_boundaries if compiled.criterion is not None else None,
    )
    identical = not mismatches and not log.truncated
    return ReplayResult(
        identical=identical,
        compared_ticks=compared,
        mismatch_ticks=mismatches,
        partial=log.truncated,
        last_complete_tick=log.last_complete_tick,
        summary=summary,
        logged_summary=log.summary,
        trajectory=traj,
        analysis=analysis,
        eps_recomputed=eps_recomputed,
    )
