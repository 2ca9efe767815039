"""HTTP + server-sent-events service exposing the orchestrator to the web UI.

Every mutation is plain request/response; the event stream is one-directional
and replays a session's full feed in sequence order before following live
appends. Per session, at most one mutating call runs at a time (enforced with
409) because the engagement loop is inherently serial.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import StreamingResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .errors import DeadlockReached, EngineError, InvalidArgument, NotFound
from .orchestrator import Engine, EngagementSession
from .parsing import InputCategory
from .tree import Ptt

SSE_POLL_SECONDS = 0.2


class CreateSessionBody(BaseModel):
    goal: str
    target: str


class ResultBody(BaseModel):
    category: InputCategory
    raw: str


class FeedbackBody(BaseModel):
    question: str


class ReviseBody(BaseModel):
    instruction: str


def _http_error(exc: EngineError) -> HTTPException:
    payload = {"error": exc.kind, "message": str(exc)}
    if isinstance(exc, NotFound):
        return HTTPException(status_code=404, detail=payload)
    if isinstance(exc, InvalidArgument):
        return HTTPException(status_code=422, detail=payload)
    if isinstance(exc, DeadlockReached):
        payload["tree"] = exc.tree_text
        return HTTPException(status_code=409, detail=payload)
    return HTTPException(status_code=500, detail=payload)


def _tree_json(tree: Ptt) -> dict:
    def node_dict(node_id):
        node = tree.nodes[node_id]
        return {
            "name": node.name,
            "status": node.status,
            "attributes": {k: v for k, v in sorted(node.attributes.items()) if k != "status"},
            "children": [node_dict(c) for c in node.children],
        }

    return node_dict(tree.root)


class SessionGate:
    """Single-flight guard: one outstanding mutating call per session."""

    def __init__(self):
        self._busy: set[str] = set()
        self._lock = threading.Lock()

    def acquire(self, session_id: str) -> None:
        with self._lock:
            if session_id in self._busy:
                raise HTTPException(
                    status_code=409,
                    detail={"error": "operation-pending",
                            "message": "another operation is in flight for this session"},
                )
            self._busy.add(session_id)

    def release(self, session_id: str) -> None:
        with self._lock:
            self._busy.discard(session_id)


def create_app(engine: Engine, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="pttengine")
    gate = SessionGate()

    def get_session(session_id: str) -> EngagementSession:
        try:
            return engine.get_session(session_id)
        except NotFound as exc:
            raise _http_error(exc) from exc

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/sessions")
    def create_session(body: CreateSessionBody):
        try:
            session = engine.start_engagement(body.goal, body.target)
        except EngineError as exc:
            raise _http_error(exc) from exc
        return {"id": session.id, "tree": session.reasoning.last_verified_text}

    @app.get("/sessions/{session_id}/tree")
    def get_tree(session_id: str):
        session = get_session(session_id)
        return {
            "text": session.reasoning.last_verified_text,
            "revision": session.reasoning.revision,
            "root": _tree_json(session.reasoning.current_tree),
        }

    @app.post("/sessions/{session_id}/next")
    def next_action(session_id: str):
        session = get_session(session_id)
        gate.acquire(session_id)
        try:
            operation = engine.next_action(session)
        except EngineError as exc:
            raise _http_error(exc) from exc
        finally:
            gate.release(session_id)
        return {
            "kind": operation.kind,
            "content": operation.content,
            "step_index": operation.step_index,
            "expected_outcome": operation.expected_outcome,
        }

    @app.post("/sessions/{session_id}/results")
    def submit_result(session_id: str, body: ResultBody):
        session = get_session(session_id)
        gate.acquire(session_id)
        try:
            revision = engine.submit_result(session, body.category, body.raw)
        except EngineError as exc:
            raise _http_error(exc) from exc
        finally:
            gate.release(session_id)
        return {"revision": revision}

    @app.post("/sessions/{session_id}/feedback")
    def feedback(session_id: str, body: FeedbackBody):
        session = get_session(session_id)
        try:
            answer = engine.feedback(session, body.question)
        except EngineError as exc:
            raise _http_error(exc) from exc
        return {"answer": answer}

    @app.post("/sessions/{session_id}/revise")
    def revise(session_id: str, body: ReviseBody):
        session = get_session(session_id)
        gate.acquire(session_id)
        try:
            revision = engine.feedback_update(session, body.instruction)
        except EngineError as exc:
            raise _http_error(exc) from exc
        finally:
            gate.release(session_id)
        return {"revision": revision}

    @app.get("/sessions/{session_id}/events")
    def events(session_id: str):
        session = get_session(session_id)

        def stream():
            cursor = 0
            while True:
                with session.changed:
                    pending = session.events[cursor:]
                    if not pending:
                        session.changed.wait(timeout=SSE_POLL_SECONDS)
                        pending = session.events[cursor:]
                cursor += len(pending)
                for event in pending:
                    frame = json.dumps(
                        {"session_id": session.id, "event": event.to_dict()},
                        sort_keys=True, ensure_ascii=True,
                    )
                    yield f"data: {frame}\n\n"

        return StreamingResponse(stream(), media_type="text/event-stream")

    if ui_dir is None:
        candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        ui_dir = candidate if candidate.is_dir() else None
    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
