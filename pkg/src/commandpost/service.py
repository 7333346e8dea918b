"""Network boundary: session lifecycle over HTTP, live play over a socket.

The service never touches game state directly. Each session wraps a
CommandLoop; writes go through the loop's inbox, reads come from the
loop's listener callback, which runs on the loop thread and fans out to
subscriber queues via the asyncio event loop. Subscribers joining
mid-game get a full snapshot first, then deltas in sequence order.
"""
from __future__ import annotations

import asyncio
import os
import threading
import uuid
from contextlib import asynccontextmanager
from typing import Any

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect

from fastapi.responses import PlainTextResponse

from .advisor import AdvisorConfig
from .engine import Command, canonical_json
from .loop import (
    PHASE_ENDED,
    CommandLoop,
    LoopError,
    SessionConfig,
    SessionEndedError,
)

STATE_UPDATE_EVERY = 5  # ticks between streamed snapshots
METRICS_EVERY = 50


class ServiceSession:
    """One live session: the loop, its subscribers, and the seq counter."""

    def __init__(self, session_id: str, config: SessionConfig,
                 log_path: str | None) -> None:
        self.id = session_id
        self.config = config
        self.loop = CommandLoop(config, listener=self._on_record,
                                log_path=log_path)
        self.log_path = log_path
        self._seq = 0
        self._seq_lock = threading.Lock()
        # (queue, asyncio loop) per subscriber; guarded by _subs_lock.
        self._subscribers: list[tuple[asyncio.Queue, Any]] = []
        self._subs_lock = threading.Lock()
        self.latest_state_payload = self._state_payload()
        self.loop.start()

    # -- wire helpers ------------------------------------------------

    def _next_seq(self) -> int:
        with self._seq_lock:
            self._seq += 1
            return self._seq

    def _envelope(self, kind: str, payload: dict[str, Any]
                  ) -> dict[str, Any]:
        return {"type": kind, "session_id": self.id,
                "seq": self._next_seq(), "payload": payload}

    def _broadcast(self, kind: str, payload: dict[str, Any]) -> None:
        message = self._envelope(kind, payload)
        with self._subs_lock:
            targets = list(self._subscribers)
        for queue, aio_loop in targets:
            aio_loop.call_soon_threadsafe(queue.put_nowait, message)

    def _state_payload(self) -> dict[str, Any]:
        # Loop-thread only (or before the loop starts): serializes the
        # live state.
        core = self.loop.core
        return {"tick": core.state.tick, "phase": self.loop.phase,
                "policy": core.policy.to_dict(),
                "state": core.state.to_dict()}

    # -- listener (runs on the loop thread) --------------------------

    def _on_record(self, kind: str, record: dict[str, Any]) -> None:
        if kind == "tick":
            tick = record["tick"]
            if tick % STATE_UPDATE_EVERY == 0:
                self.latest_state_payload = self._state_payload()
                self._broadcast("state_update", self.latest_state_payload)
            if record.get("manual_actions"):
                self._broadcast("manual_action", {
                    "tick": tick,
                    "commands": record["manual_actions"]})
            if tick % 10 == 0 and self.loop.core.frames:
                frame = self.loop.core.frames[-1]
                if frame.tick == tick:
                    self._broadcast("frame_summary", {
                        "tick": tick, "frame": frame.to_dict()})
            if tick % METRICS_EVERY == 0:
                core = self.loop.core
                self._broadcast("metrics", {
                    "tick": tick,
                    "instructions": core.instruction_count,
                    "revisions": core.policy.revision})
        elif kind == "instruction":
            self._broadcast("chat_in", {
                "id": record["id"], "tick": record["tick"],
                "text": record["text"], "channel": record["channel"]})
        elif kind == "proposal":
            self._broadcast("proposal", {
                "tick": record["tick"], "proposal": record["proposal"],
                "advisor_latency_ms": record["advisor_latency_ms"]})
        elif kind == "decision":
            self._broadcast("decision", {
                "tick": record["tick"],
                "proposal_id": record["proposal_id"],
                "decision": record["decision"], "by": record["by"],
                "revision_after": record["revision_after"]})
            self.latest_state_payload = self._state_payload()
            self._broadcast("state_update", self.latest_state_payload)
        elif kind == "advisor_error":
            self._broadcast("error", {
                "message": f"{record['error']}: {record['detail']}",
                "source": "advisor",
                "instruction_id": record["instruction_id"]})
        elif kind == "end":
            self.latest_state_payload = self._state_payload()
            self._broadcast("state_update", self.latest_state_payload)
            self._broadcast("episode_end", {
                "tick": record["tick"], "outcome": record["outcome"],
                "final_hash": record["final_hash"],
                "policy_revisions": record["policy_revisions"],
                "instructions": record["instructions"]})

    # -- subscriber management (asyncio side) ------------------------

    async def subscribe(self, queue: asyncio.Queue) -> dict[str, Any]:
        aio_loop = asyncio.get_running_loop()
        with self._subs_lock:
            self._subscribers.append((queue, aio_loop))
        return self._envelope("state_update", self.latest_state_payload)

    def unsubscribe(self, queue: asyncio.Queue) -> None:
        with self._subs_lock:
            self._subscribers = [(q, l) for q, l in self._subscribers
                                 if q is not queue]

    def direct(self, kind: str, payload: dict[str, Any]) -> dict[str, Any]:
        """Envelope for a message sent to one subscriber only."""
        return self._envelope(kind, payload)


def create_app(log_dir: str | None = None,
               default_advisor: AdvisorConfig | None = None,
               default_mode: str | None = None) -> FastAPI:
    sessions: dict[str, ServiceSession] = {}

    @asynccontextmanager
    async def lifespan(_: FastAPI):
        yield
        # Stop every loop on shutdown; stop() flushes episode logs.
        for session in sessions.values():
            session.loop.stop(timeout=2.0)

    app = FastAPI(title="commandpost session service", lifespan=lifespan)
    app.state.sessions = sessions

    def episodes_dir() -> str | None:
        if log_dir is None:
            return None
        path = os.path.join(log_dir, "episodes")
        os.makedirs(path, exist_ok=True)
        return path

    @app.post("/session")
    def create_session(payload: dict[str, Any] | None = None):
        payload = payload or {}
        if "advisor" not in payload and default_advisor is not None:
            payload = {**payload, "advisor": default_advisor.to_dict()}
        if "mode" not in payload and default_mode is not None:
            payload = {**payload, "mode": default_mode}
        try:
            config = SessionConfig.from_dict(payload)
        except (ValueError, KeyError, TypeError) as exc:
            raise HTTPException(status_code=400,
                                detail=f"invalid config: {exc}") from exc
        session_id = uuid.uuid4().hex[:12]
        directory = episodes_dir()
        log_path = os.path.join(directory, f"{session_id}.jsonl") \
            if directory else None
        session = ServiceSession(session_id, config, log_path)
        if payload.get("autostart"):
            session.loop.phase = "running"
        sessions[session_id] = session
        return {"session_id": session_id, "phase": session.loop.phase}

    def _get(session_id: str) -> ServiceSession:
        if session_id not in sessions:
            raise HTTPException(status_code=404,
                                detail=f"unknown session {session_id}")
        return sessions[session_id]

    @app.get("/session/{session_id}/log")
    def fetch_log(session_id: str):
        session = _get(session_id)
        text = "".join(canonical_json(r) + "\n"
                       for r in list(session.loop.core.log.records))
        return PlainTextResponse(text, media_type="application/x-ndjson")

    @app.get("/metrics")
    def metrics():
        phases = [s.loop.phase for s in sessions.values()]
        return {"sessions": len(sessions),
                "running": phases.count("running"),
                "awaiting": phases.count("awaiting_initial_instruction"),
                "ended": phases.count(PHASE_ENDED),
                "detail": {sid: {"phase": s.loop.phase,
                                 "tick": s.loop.core.state.tick,
                                 "revision": s.loop.core.policy.revision}
                           for sid, s in sessions.items()}}

    @app.websocket("/session/{session_id}/ws")
    async def session_ws(websocket: WebSocket, session_id: str):
        if session_id not in sessions:
            await websocket.close(code=4404)
            return
        session = sessions[session_id]
        await websocket.accept()
        queue: asyncio.Queue = asyncio.Queue()
        snapshot = await session.subscribe(queue)
        await websocket.send_json(snapshot)

        async def pump_outbound():
            while True:
                message = await queue.get()
                await websocket.send_json(message)
                if message["type"] == "episode_end":
                    return

        async def pump_inbound():
            while True:
                try:
                    frame = await websocket.receive_json()
                except (WebSocketDisconnect, RuntimeError):
                    return
                await handle_client_frame(session, websocket, frame)

        outbound = asyncio.create_task(pump_outbound())
        inbound = asyncio.create_task(pump_inbound())
        try:
            done, pending = await asyncio.wait(
                {outbound, inbound},
                return_when=asyncio.FIRST_COMPLETED)
            for task in pending:
                task.cancel()
        finally:
            session.unsubscribe(queue)
            try:
                await websocket.close()
            except RuntimeError:
                pass

    async def handle_client_frame(session: ServiceSession,
                                  websocket: WebSocket,
                                  frame: dict[str, Any]) -> None:
        kind = frame.get("type")
        payload = frame.get("payload") or {}

        async def send_error(message: str) -> None:
            await websocket.send_json(session.direct("error", {
                "message": message, "source": "service"}))

        if kind == "chat_in":
            text = payload.get("text", "")
            channel = payload.get("channel", "chat")
            try:
                session.loop.submit_chat(text, channel)
            except (ValueError, SessionEndedError) as exc:
                await send_error(str(exc))
        elif kind == "decision":
            try:
                await asyncio.to_thread(
                    session.loop.submit_decision,
                    int(payload.get("proposal_id", -1)),
                    str(payload.get("decision", "")))
            except LoopError as exc:
                await send_error(str(exc))
            except (TypeError, ValueError) as exc:
                await send_error(f"bad decision payload: {exc}")
        elif kind == "manual_action":
            try:
                commands = [Command.from_dict(c)
                            for c in payload.get("commands", [])]
            except (KeyError, ValueError, TypeError) as exc:
                await send_error(f"bad manual command: {exc}")
                return
            session.loop.submit_manual(commands)
        else:
            await send_error(f"unknown message type {kind!r}")

    return app
