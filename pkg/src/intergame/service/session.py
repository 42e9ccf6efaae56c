"""Session lifecycle: one engine loop per session, fed by queued controls.

All mutation flows through tick_once(); connection handling may be
concurrent, but controls land in a pending list that is drained exactly at
tick boundaries, and a player's latest control is held until replaced.
Every accepted control is logged with the tick it first applied at, which
is what makes live sessions exactly replayable.

In live and multi-user modes the client input is the player's realized
behavior and the scenario's nominal policy provides the pure reference;
synthetic sessions keep the scenario's declared wiring.
"""

from __future__ import annotations

import asyncio
import os
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..analysis import analyze_session
from ..engine import tick_time
from ..errors import SchemaError
from ..perception import MatchRunner
from ..scenarios import ScenarioSpec, load_scenario
from .log import LogWriter, control_line, header_line, tick_line

LOG_DIR_ENV = "INTERGAME_LOG_DIR"
MODES = ("synthetic", "live", "multi-user")


def default_log_dir() -> Path:
    return Path(os.environ.get(LOG_DIR_ENV, "logs"))


@dataclass
class SessionConfig:
    """Session parameters; the tick rate is the scenario's dt by contract."""

    scenario: object  # ScenarioSpec, dict, JSON text or path
    mode: str = "synthetic"
    session_id: str | None = None
    seed: int | None = None
    sets: int | None = 1
    log_dir: str | None = None
    pace: str = "fast"  # "fast" | "realtime"
    set_cap_s: float = 60.0
    min_players: int = 2

    def __post_init__(self):
        if self.mode not in MODES:
            raise SchemaError(f"unknown session mode {self.mode!r}")
        if self.pace not in ("fast", "realtime"):
            raise SchemaError(f"unknown pace {self.pace!r}")


def build_summary(runner: MatchRunner, boundaries_from_sets: bool) -> dict:
    """Summary document for the log tail; replay recomputes the same values."""
    traj = runner.trajectory()
    set_ticks = [s.start_tick for s in runner.sets] if runner.sets else None
    analysis = analyze_session(
        traj,
        runner.reps,
        runner.cells,
        runner.functionals,
        set_boundary_ticks=set_ticks if boundaries_from_sets else None,
    )
    eps_mean = None
    if analysis.stacked is not None and analysis.stacked.valid.any():
        eps_mean = analysis.stacked.valid_values().mean(axis=0).tolist()
    return {
        "type": "summary",
        "ticks": traj.n_ticks,
        "sets": len(runner.sets),
        "durations": [s.n_ticks * runner.dt for s in runner.sets],
        "stop_reasons": [s.stop_reason for s in runner.sets],
        "termination": runner.termination,
        "boundaries": [int(j) for j in analysis.boundary_ticks],
        "cell_boundaries": (
            None
            if analysis.cell_partition is None
            else [int(j) for j in analysis.cell_partition.ticks[1:]]
        ),
        "utterances": len(analysis.transcript),
        "score": analysis.score,
        "verbalizable": analysis.verbalizable if analysis.score is not None else None,
        "eps_mean": eps_mean,
        "first_visible_tick": runner.first_visible_tick,
    }


class Session:
    """One running (or finished) session bound to a log file."""

    def __init__(self, config: SessionConfig):
        self.config = config
        spec = load_scenario(config.scenario)
        if config.seed is not None:
            spec = ScenarioSpec.from_dict({**spec.to_dict(), "seed": int(config.seed)})
        self.spec = spec
        self.compiled = spec.compile()
        if config.mode != "synthetic":
            self.compiled.wiring = "behavior"
        self.session_id = config.session_id or f"{spec.name}-seed{spec.seed}"
        self.runner = MatchRunner(
            self.compiled,
            set_limit=config.sets,
            set_cap_s=config.set_cap_s,
        )
        log_dir = Path(config.log_dir) if config.log_dir else default_log_dir()
        self.log_path = log_dir / f"{self.session_id}.jsonl"
        self.log = LogWriter(self.log_path)
        self.log.write(
            header_line(
                session_id=self.session_id,
                mode=config.mode,
                seed=self.compiled.seed,
                scenario_doc=spec.to_dict(),
                sets=config.sets,
                wiring=self.compiled.wiring,
                pace=config.pace,
                set_cap_s=config.set_cap_s,
            )
        )
        self.hold: dict[int, np.ndarray] = {}
        self.pending: list[tuple[int, float | None, list, int]] = []
        self.subscribers: list[asyncio.Queue] = []
        self.players: set[int] = set()
        self.status = "ready" if config.mode == "synthetic" else "waiting"
        self.summary: dict | None = None

    # -- protocol ----------------------------------------------------------

    @property
    def dt(self) -> float:
        return self.compiled.dt

    @property
    def tick_rate(self) -> float:
        return 1.0 / self.dt

    def hello(self) -> dict:
        return {
            "type": "hello",
            "session": self.session_id,
            "mode": self.config.mode,
            "dt": self.dt,
            "n_players": self.compiled.dynamics.n_players,
            "control_dims": list(self.compiled.dynamics.control_dims),
            "players": sorted(self.players),
            "status": self.status,
            "scenario": self.spec.name,
        }

    def join(self, player) -> str | None:
        """Claim a player slot; returns an error message or None."""
        try:
            player = int(player)
        except (TypeError, ValueError):
            return "player must be an integer id"
        if player < 0 or player >= self.compiled.dynamics.n_players:
            return f"no player {player} in this scenario"
        if player in self.players:
            return f"player {player} already taken"
        if self.status == "done":
            return "session already finished"
        self.players.add(player)
        return None

    def leave(self, player: int) -> list[dict]:
        """Player disconnect: abort the running set in live modes."""
        self.players.discard(player)
        if self.config.mode == "synthetic" or self.status != "running":
            return []
        events = self.runner.abort("player-disconnected")
        for e in events:
            self.log.write(e)
            self.broadcast(e)
        self._finalize()
        return events

    def ready_to_start(self) -> bool:
        if self.status != "waiting":
            return self.status == "ready"
        if self.config.mode == "live":
            return len(self.players) >= 1
        return len(self.players) >= self.config.min_players

    def submit_control(self, player, t_client, u0) -> str | None:
        """Queue a control sample for the next tick boundary."""
        try:
            player = int(player)
        except (TypeError, ValueError):
            return "player must be an integer id"
        if player < 0 or player >= self.compiled.dynamics.n_players:
            return f"no player {player} in this scenario"
        du = self.compiled.dynamics.control_dims[player]
        try:
            vec = np.asarray(u0, dtype=float)
        except (TypeError, ValueError):
            return "u0 must be a numeric vector"
        if vec.shape != (du,):
            return f"u0 must have {du} entries"
        if not np.all(np.isfinite(vec)):
            return "u0 entries must be finite"
        if self.status == "done":
            return "session already finished"
        self.pending.append(
            (player, None if t_client is None else float(t_client), vec.tolist(), self.runner.engine.j)
        )
        return None

    def subscribe(self) -> asyncio.Queue:
        q: asyncio.Queue = asyncio.Queue()
        self.subscribers.append(q)
        return q

    def unsubscribe(self, q: asyncio.Queue):
        if q in self.subscribers:
            self.subscribers.remove(q)

    def broadcast(self, frame: dict):
        for q in self.subscribers:
            q.put_nowait(frame)

    # -- the loop ----------------------------------------------------------

    def tick_once(self):
        runner = self.runner
        j = runner.engine.j
        now = tick_time(j, self.dt)
        for player, t_client, u0, j_recv in self.pending:
            late = t_client is not None and t_client < now - 1e-9
            self.hold[player] = np.asarray(u0, dtype=float)
            self.log.write(control_line(player, j_recv, j, t_client, u0, late))
        self.pending.clear()
        sample, events = runner.tick(self.hold if self.hold else None)
        line = tick_line(sample)
        self.log.write(line)
        self.broadcast(line)
        for e in events:
            self.log.write(e)
            self.broadcast(e)
        if runner.done:
            self._finalize()

    def _finalize(self):
        if self.status == "done":
            return
        self.status = "done"
        self.summary = build_summary(self.runner, self.compiled.criterion is not None)
        self.log.write(self.summary, flush=True)
        self.log.close()
        self.broadcast(
            {"type": "end", "termination": self.runner.termination, "summary": self.summary}
        )

    def run_sync(self) -> dict:
        """Headless run to completion; returns the summary document."""
        self.status = "running"
        while not self.runner.done:
            self.tick_once()
        return self.summary

    async def run(self):
        """Async run with optional real-time pacing."""
        self.status = "running"
        t0 = time.monotonic()
        k = 0
        while not self.runner.done and self.status == "running":
            self.tick_once()
            k += 1
            if self.config.pace == "realtime":
                target = t0 + k * self.dt
                await asyncio.sleep(max(0.0, target - time.monotonic()))
            elif k % 64 == 0:
                await asyncio.sleep(0)
        return self.summary
