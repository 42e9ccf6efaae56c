"""WebSocket endpoint for live sessions: JSON text frames over /session/{id}.

Client frames:
  {"type": "join", "player": int}
  {"type": "control", "player": int, "t": float, "u0": [floats]}

Server frames: hello on connect, joined/error/warning acks, then the tick
stream plus set-boundary, utterance, figure-visible and end events exactly
as they are logged.  Malformed frames get an error frame and the session
continues; unknown frame types get a warning frame and are ignored.  A
joined player disconnecting in live or multi-user mode aborts the running
set.
"""

from __future__ import annotations

import asyncio
import contextlib
import json

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .log import dumps
from .session import Session


def create_app(sessions: dict[str, Session]) -> FastAPI:
    tasks: dict[str, asyncio.Task] = {}

    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        for sid, session in sessions.items():
            if session.config.mode == "synthetic":
                start_session(sid)
        yield
        for task in tasks.values():
            if not task.done():
                task.cancel()
                with contextlib.suppress(asyncio.CancelledError):
                    await task

    app = FastAPI(title="intergame session service", lifespan=lifespan)
    app.state.sessions = sessions
    app.state.tasks = tasks

    def start_session(sid: str):
        session = sessions[sid]
        if sid not in tasks and session.status in ("ready", "waiting"):
            if session.ready_to_start() or session.config.mode == "synthetic":
                tasks[sid] = asyncio.get_event_loop().create_task(session.run())

    @app.get("/sessions")
    async def list_sessions():
        return {
            sid: {"status": s.status, "mode": s.config.mode, "players": sorted(s.players)}
            for sid, s in sessions.items()
        }

    @app.get("/session/{sid}/info")
    async def session_info(sid: str):
        if sid not in sessions:
            return {"error": f"no session {sid}"}
        return sessions[sid].hello()

    @app.websocket("/session/{sid}")
    async def session_socket(websocket: WebSocket, sid: str):
        await websocket.accept()
        session = sessions.get(sid)
        if session is None:
            await websocket.send_text(dumps({"type": "error", "message": f"no session {sid}"}))
            await websocket.close()
            return
        queue = session.subscribe()
        joined: int | None = None

        async def pump():
            while True:
                frame = await queue.get()
                await websocket.send_text(dumps(frame))

        sender = asyncio.get_event_loop().create_task(pump())
        await websocket.send_text(dumps(session.hello()))
        try:
            while True:
                raw = await websocket.receive_text()
                try:
                    msg = json.loads(raw)
                    if not isinstance(msg, dict):
                        raise ValueError("frame must be an object")
                except ValueError as exc:
                    await websocket.send_text(
                        dumps({"type": "error", "message": f"malformed frame: {exc}"})
                    )
                    continue
                kind = msg.get("type")
                if kind == "join":
                    err = session.join(msg.get("player"))
                    if err is not None:
                        await websocket.send_text(dumps({"type": "error", "message": err}))
                        continue
                    joined = int(msg.get("player"))
                    await websocket.send_text(
                        dumps({"type": "joined", "player": joined, "session": sid})
                    )
                    start_session(sid)
                elif kind == "control":
                    err = session.submit_control(
                        msg.get("player"), msg.get("t"), msg.get("u0")
                    )
                    if err is not None:
                        await websocket.send_text(dumps({"type": "error", "message": err}))
                else:
                    await websocket.send_text(
                        dumps(
                            {"type": "warning", "message": f"ignoring unknown frame type {kind!r}"}
                        )
                    )
        except WebSocketDisconnect:
            pass
        finally:
            sender.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await sender
            session.unsubscribe(queue)
            if joined is not None:
                session.leave(joined)

    return app
