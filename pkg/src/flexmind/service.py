"""HTTP facade: session lifecycle, synchronous ops, pins, views, and SSE.

Writes to one session are strictly serialized through a per-session lock;
the event stream tails the session log itself, so changes made by any
writer (including another process on the same data dir) reach connected
clients.
"""

from __future__ import annotations

import asyncio
import json
import time
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles
from starlette.exceptions import HTTPException as StarletteHTTPException

from . import __version__
from .engine import IdeationEngine, classify_error, snapshot_to_wire
from .orchestrator import OpKind, op_kind_from_name
from .store import NotFoundError, event_to_line, format_timestamp, node_to_wire

TASK_MAX_CHARS = 500


class ApiError(Exception):
    """Client-facing error with a stable machine code.

    Codes: unknown_node, bad_precondition, generation_failed,
    provider_unavailable, validation, not_found, conflict.
    """

    def __init__(self, status: int, code: str, message: str, detail: str | None = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.detail = detail


def default_static_dir() -> Path | None:
    """frontend/dist next to the repo checkout, when present."""
    candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    return candidate if candidate.is_dir() else None


def create_app(
    engine: IdeationEngine,
    *,
    heartbeat_interval: float = 15.0,
    op_wait_timeout: float = 30.0,
    poll_interval: float = 0.2,
    static_dir: Path | None = None,
) -> FastAPI:
    app = FastAPI(title="flexmind", version=__version__, docs_url=None, redoc_url=None)
    locks: dict[str, asyncio.Lock] = {}

    def lock_for(session_id: str) -> asyncio.Lock:
        return locks.setdefault(session_id, asyncio.Lock())

    async def call_engine(fn, *args, **kwargs):
        try:
            return await asyncio.to_thread(fn, *args, **kwargs)
        except Exception as exc:
            classified = classify_error(exc)
            if classified is None:
                raise
            status, code = classified
            detail = getattr(exc, "path", None) or getattr(exc, "normalized_name", None)
            raise ApiError(status, code, str(exc), detail) from exc

    async def serialized(session_id: str, fn, *args, **kwargs):
        lock = lock_for(session_id)
        try:
            await asyncio.wait_for(lock.acquire(), timeout=op_wait_timeout)
        except asyncio.TimeoutError:
            raise ApiError(
                409,
                "conflict",
                "another write for this session is still running",
            ) from None
        try:
            return await call_engine(fn, *args, **kwargs)
        finally:
            lock.release()

    async def read_body(request: Request) -> dict:
        try:
            body = await request.json()
        except Exception:
            raise ApiError(400, "validation", "request body must be a JSON object") from None
        if not isinstance(body, dict):
            raise ApiError(400, "validation", "request body must be a JSON object")
        return body

    def required_str(body: dict, key: str) -> str:
        value = body.get(key)
        if not isinstance(value, str) or not value.strip():
            raise ApiError(400, "validation", f"field {key!r} must be a non-empty string", key)
        return value

    @app.exception_handler(ApiError)
    async def on_api_error(request: Request, exc: ApiError):
        body = {"code": exc.code, "message": exc.message}
        if exc.detail is not None:
            body["detail"] = exc.detail
        return JSONResponse(status_code=exc.status, content=body)

    @app.exception_handler(StarletteHTTPException)
    async def on_http_error(request: Request, exc: StarletteHTTPException):
        code = "not_found" if exc.status_code == 404 else "validation"
        return JSONResponse(
            status_code=exc.status_code, content={"code": code, "message": str(exc.detail)}
        )

    @app.get("/healthz")
    async def healthz():
        return {"ok": True}

    @app.post("/v1/sessions", status_code=201)
    async def create_session(request: Request):
        body = await read_body(request)
        task = required_str(body, "task").strip()
        if len(task) > TASK_MAX_CHARS:
            raise ApiError(400, "validation", f"task exceeds {TASK_MAX_CHARS} chars", "task")
        session_id, snapshot = await call_engine(engine.create_session, task)
        return JSONResponse(
            status_code=201,
            content={"session_id": session_id, "snapshot": snapshot_to_wire(snapshot)},
        )

    @app.get("/v1/sessions")
    async def list_sessions():
        infos = await call_engine(engine.list_sessions)
        return {
            "sessions": [
                {
                    "session_id": info.session_id,
                    "task": info.task,
                    "last_activity": format_timestamp(info.last_activity),
                }
                for info in infos
            ]
        }

    @app.get("/v1/sessions/{session_id}")
    async def get_snapshot(session_id: str, request: Request):
        at_raw = request.query_params.get("at")
        at = None
        if at_raw is not None:
            try:
                at = int(at_raw)
            except ValueError:
                raise ApiError(400, "validation", f"bad at value {at_raw!r}", "at") from None
        snapshot = await call_engine(engine.snapshot, session_id, at)
        return snapshot_to_wire(snapshot)

    @app.get("/v1/sessions/{session_id}/collection")
    async def get_collection(session_id: str):
        entries = await call_engine(engine.collection, session_id)
        return {
            "entries": [
                {"node": node_to_wire(node), "path": path} for node, path in entries
            ]
        }

    @app.post("/v1/sessions/{session_id}/ops")
    async def run_op(session_id: str, request: Request):
        body = await read_body(request)
        kind_name = required_str(body, "kind")
        try:
            op = op_kind_from_name(kind_name)
        except ValueError as exc:
            raise ApiError(400, "validation", str(exc), "kind") from None
        focus = required_str(body, "focus")
        question = body.get("question")
        if op is OpKind.ANSWER_QUESTION:
            if not isinstance(question, str) or not question.strip():
                raise ApiError(
                    400, "validation", "AnswerQuestion needs a non-empty question", "question"
                )
            question = question.strip()
        elif question is not None:
            raise ApiError(
                400, "validation", f"{op.value} does not take a question", "question"
            )
        result = await serialized(session_id, engine.run_op, session_id, op, focus, question)
        response = {
            "added_nodes": [node_to_wire(n) for n in result.added_nodes],
            "added_edges": [
                {"source": e.source, "kind": e.kind.value, "target": e.target}
                for e in result.added_edges
            ],
            "exchange": {
                "attempts": result.exchange.attempts,
                "duration_ms": result.exchange.duration_ms,
            },
        }
        if result.answer is not None:
            response["answer"] = result.answer
        return response

    @app.post("/v1/sessions/{session_id}/nodes", status_code=201)
    async def add_node(session_id: str, request: Request):
        body = await read_body(request)
        parent = required_str(body, "parent")
        kind = required_str(body, "kind")
        name = required_str(body, "name")
        description = required_str(body, "description")
        node, _ = await serialized(
            session_id, engine.add_user_node, session_id, parent, kind, name, description
        )
        return JSONResponse(status_code=201, content={"node": node_to_wire(node)})

    @app.post("/v1/sessions/{session_id}/pins")
    async def pin(session_id: str, request: Request):
        body = await read_body(request)
        node = required_str(body, "node")
        pins = await serialized(session_id, engine.pin, session_id, node)
        return {"pins": list(pins)}

    @app.delete("/v1/sessions/{session_id}/pins/{node_id}")
    async def unpin(session_id: str, node_id: str):
        pins = await serialized(session_id, engine.unpin, session_id, node_id)
        return {"pins": list(pins)}

    @app.get("/v1/sessions/{session_id}/stream")
    async def stream(session_id: str):
        snapshot = await call_engine(engine.snapshot, session_id)

        async def frames():
            cursor = snapshot.last_seq
            yield f"event: hello\ndata: {json.dumps({'last_seq': cursor})}\n\n"
            last_sent = time.monotonic()
            while True:
                try:
                    fresh = await asyncio.to_thread(
                        engine.store.events_since, session_id, cursor
                    )
                except NotFoundError:
                    return
                for event in fresh:
                    cursor = event.seq
                    yield f"event: {event.kind}\ndata: {event_to_line(event)}\n\n"
                    last_sent = time.monotonic()
                if time.monotonic() - last_sent >= heartbeat_interval:
                    yield ": keepalive\n\n"
                    last_sent = time.monotonic()
                await asyncio.sleep(poll_interval)

        return StreamingResponse(
            frames(),
            media_type="text/event-stream",
            headers={"Cache-Control": "no-cache", "X-Accel-Buffering": "no"},
        )

    if static_dir is not None and static_dir.is_dir():
        app.mount("/ui", StaticFiles(directory=static_dir), name="ui")

        @app.get("/")
        async def index():
            return FileResponse(static_dir / "index.html")

    else:

        @app.get("/")
        async def root():
            return {"ok": True, "service": "flexmind", "version": __version__}

    return app
