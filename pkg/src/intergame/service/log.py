"""Session log schema v1: one JSON object per line.

Line types and their fields:

  header   schema, session, mode, seed, dt, sets, config_hash, scenario,
           wiring, pace
  tick     j, t, set, phi, xi, u0, u, eps (per player, null on warm-up),
           F (null without a criterion), figure {visible, dwell} | null
  control  player, j_received, j_applied, t_client, u0, late
  set-boundary  set, j, t, reason, F
  utterance     n, j, t_start, t_end, cell, omega, v
  figure-visible  j, t
  summary  ticks, sets, durations, termination, score, verbalizable,
           boundaries, first_visible_tick

Serialization is canonical (sorted keys, compact separators, shortest float
repr), so a correctly replayed session reproduces tick lines byte for byte.
Writes are append-only and flushed at set boundaries and on close.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from ..errors import SchemaError
from ..perception import TickSample

LOG_SCHEMA_VERSION = 1


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(scenario_doc: dict) -> str:
    return hashlib.sha256(dumps(scenario_doc).encode()).hexdigest()


def header_line(
    session_id: str,
    mode: str,
    seed: int,
    scenario_doc: dict,
    sets: int | None,
    wiring: str,
    pace: str,
    set_cap_s: float,
) -> dict:
    return {
        "type": "header",
        "schema": LOG_SCHEMA_VERSION,
        "session": session_id,
        "mode": mode,
        "seed": seed,
        "dt": scenario_doc["dt"],
        "sets": sets,
        "set_cap_s": set_cap_s,
        "wiring": wiring,
        "pace": pace,
        "config_hash": config_hash(scenario_doc),
        "scenario": scenario_doc,
    }


def tick_line(sample: TickSample) -> dict:
    line = {
        "type": "tick",
        "j": sample.j,
        "t": sample.t,
        "set": sample.set_index,
        "phi": sample.phi.tolist(),
        "xi": sample.xi.tolist(),
        "u0": [u.tolist() for u in sample.u0],
        "u": [u.tolist() for u in sample.u],
        "eps": [None if e is None else e.tolist() for e in sample.eps],
        "F": sample.f_value,
    }
    if sample.figure is not None:
        line["figure"] = {
            "visible": sample.figure.visible,
            "dwell": sample.figure.dwell_ticks,
        }
    else:
        line["figure"] = None
    return line


def control_line(player: int, j_received: int, j_applied: int, t_client, u0, late: bool) -> dict:
    return {
        "type": "control",
        "player": player,
        "j_received": j_received,
        "j_applied": j_applied,
        "t_client": t_client,
        "u0": list(u0),
        "late": late,
    }


class LogWriter:
    """Append-only JSONL writer; flushed at set boundaries and on close."""

    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = self.path.open("w", encoding="utf-8")

    def write(self, line: dict, flush: bool = False):
        self._fh.write(dumps(line) + "\n")
        if flush or line.get("type") in ("set-boundary", "summary", "header"):
            self._fh.flush()

    def close(self):
        if not self._fh.closed:
            self._fh.flush()
            self._fh.close()


class SessionLog:
    """Parsed session log: header plus typed line lists.

    A trailing line that fails to parse marks the log truncated; everything
    before it stays usable.
    """

    def __init__(self, header: dict, lines: list[dict], truncated: bool):
        self.header = header
        self.lines = lines
        self.truncated = truncated

    @classmethod
    def read(cls, path) -> "SessionLog":
        raw = Path(path).read_text(encoding="utf-8").splitlines()
        parsed: list[dict] = []
        truncated = False
        for k, ln in enumerate(raw):
            if not ln.strip():
                continue
            try:
                parsed.append(json.loads(ln))
            except json.JSONDecodeError:
                if k == len(raw) - 1:
                    truncated = True
                    break
                raise SchemaError(f"malformed log line {k}")
        if not parsed or parsed[0].get("type") != "header":
            raise SchemaError("log must start with a header line")
        header = parsed[0]
        if header.get("schema") != LOG_SCHEMA_VERSION:
            raise SchemaError(f"unsupported log schema {header.get('schema')}")
        if not truncated and (not parsed or parsed[-1].get("type") != "summary"):
            truncated = True
        return cls(header, parsed[1:], truncated)

    def of_type(self, kind: str) -> list[dict]:
        return [ln for ln in self.lines if ln.get("type") == kind]

    @property
    def ticks(self) -> list[dict]:
        return self.of_type("tick")

    @property
    def controls(self) -> list[dict]:
        return self.of_type("control")

    @property
    def summary(self) -> dict | None:
        rows = self.of_type("summary")
        return rows[-1] if rows else None

    @property
    def last_complete_tick(self) -> int | None:
        ticks = self.ticks
        return ticks[-1]["j"] if ticks else None
