"""Event-sourced session persistence.

Every state change is one appended line in `<session-id>.events.jsonl`;
snapshots are deterministic folds of that log. Replaying a prefix gives a
historical view, so nothing ever needs to be deleted or edited in place.

Line format (strict): a UTF-8 JSON object with keys exactly
`seq`, `at`, `kind`, `payload`. Unknown keys are rejected on read.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable

from .graph import (
    DesignGraph,
    Edge,
    EdgeKind,
    GraphError,
    IdeationNode,
    NodeKind,
    PINNABLE_KINDS,
    PinSet,
    Provenance,
    add_nodes,
    is_hex_id,
    new_graph,
    new_id,
)

DATA_DIR_ENV = "FLEXMIND_DATA_DIR"
LOG_SUFFIX = ".events.jsonl"
EXCHANGE_SUFFIX = ".exchanges.jsonl"

EVENT_KINDS = (
    "SessionCreated",
    "GenerationCompleted",
    "GenerationFailed",
    "UserNodeAdded",
    "NodePinned",
    "NodeUnpinned",
)

TASK_MAX_CHARS = 500


class StoreError(Exception):
    pass


class ValidationError(StoreError):
    pass


class StorageError(StoreError):
    pass


class NotFoundError(StoreError):
    pass


class OutOfRangeError(StoreError):
    pass


class CorruptLogError(StoreError):
    def __init__(self, message: str, seq: int | None = None):
        super().__init__(message)
        self.seq = seq


class _FoldError(Exception):
    """Internal: one event cannot be applied to the current snapshot."""


# --- wire codecs -------------------------------------------------------------


def format_timestamp(at: datetime) -> str:
    if at.tzinfo is None:
        at = at.replace(tzinfo=timezone.utc)
    return at.astimezone(timezone.utc).isoformat(timespec="microseconds").replace(
        "+00:00", "Z"
    )


def parse_timestamp(raw: str) -> datetime:
    try:
        return datetime.fromisoformat(raw.replace("Z", "+00:00"))
    except (ValueError, AttributeError, TypeError) as exc:
        raise _FoldError(f"bad timestamp {raw!r}: {exc}") from exc


def node_to_wire(node: IdeationNode) -> dict:
    return {
        "id": node.id,
        "kind": node.kind.value,
        "name": node.name,
        "description": node.description,
        "provenance": node.provenance.value,
        "created_at": format_timestamp(node.created_at),
        "created_by_event": node.created_by_event,
    }


def node_from_wire(raw: dict) -> IdeationNode:
    if not isinstance(raw, dict):
        raise _FoldError("node record must be an object")
    expected = {"id", "kind", "name", "description", "provenance", "created_at", "created_by_event"}
    if set(raw) != expected:
        raise _FoldError(f"node record keys {sorted(raw)} != {sorted(expected)}")
    try:
        return IdeationNode(
            id=str(raw["id"]),
            kind=NodeKind(raw["kind"]),
            name=str(raw["name"]),
            description=str(raw["description"]),
            provenance=Provenance(raw["provenance"]),
            created_at=parse_timestamp(raw["created_at"]),
            created_by_event=int(raw["created_by_event"]),
        )
    except (ValueError, TypeError) as exc:
        raise _FoldError(f"bad node record: {exc}") from exc


def edge_to_wire(edge: Edge) -> dict:
    return {"source": edge.source, "kind": edge.kind.value, "target": edge.target}


def edge_from_wire(raw: dict) -> Edge:
    if not isinstance(raw, dict) or set(raw) != {"source", "kind", "target"}:
        raise _FoldError("edge record must have keys source/kind/target")
    try:
        return Edge(str(raw["source"]), EdgeKind(raw["kind"]), str(raw["target"]))
    except ValueError as exc:
        raise _FoldError(f"bad edge record: {exc}") from exc


@dataclass(frozen=True)
class SessionEvent:
    seq: int
    at: datetime
    kind: str
    payload: dict


def event_to_line(event: SessionEvent) -> str:
    return json.dumps(
        {
            "seq": event.seq,
            "at": format_timestamp(event.at),
            "kind": event.kind,
            "payload": event.payload,
        },
        ensure_ascii=False,
    )


def event_from_line(line: str, line_number: int) -> SessionEvent:
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorruptLogError(f"line {line_number} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise CorruptLogError(f"line {line_number} is not a JSON object")
    if set(raw) != {"seq", "at", "kind", "payload"}:
        raise CorruptLogError(
            f"line {line_number} has keys {sorted(raw)}, expected seq/at/kind/payload"
        )
    if not isinstance(raw["seq"], int) or isinstance(raw["seq"], bool):
        raise CorruptLogError(f"line {line_number}: seq must be an integer")
    if raw["kind"] not in EVENT_KINDS:
        raise CorruptLogError(
            f"line {line_number}: unknown event kind {raw['kind']!r}", seq=raw["seq"]
        )
    if not isinstance(raw["payload"], dict):
        raise CorruptLogError(f"line {line_number}: payload must be an object", seq=raw["seq"])
    try:
        at = parse_timestamp(raw["at"])
    except _FoldError as exc:
        raise CorruptLogError(f"line {line_number}: {exc}", seq=raw["seq"]) from exc
    return SessionEvent(seq=raw["seq"], at=at, kind=raw["kind"], payload=raw["payload"])


# --- folding -----------------------------------------------------------------


@dataclass(frozen=True)
class FailureRecord:
    seq: int
    op: str
    focus: str
    error_class: str
    attempts: int


@dataclass(frozen=True)
class SessionSnapshot:
    graph: DesignGraph
    pins: PinSet
    last_seq: int
    failures: tuple[FailureRecord, ...] = ()


def _payload_keys(payload: dict, required: set[str], optional: set[str] = frozenset()):
    keys = set(payload)
    if not required <= keys or keys - required - optional:
        raise _FoldError(
            f"payload keys {sorted(keys)} do not match required {sorted(required)}"
        )


def _apply(snapshot: SessionSnapshot | None, event: SessionEvent) -> SessionSnapshot:
    payload = event.payload
    if event.seq == 0:
        if event.kind != "SessionCreated":
            raise _FoldError("seq 0 must be SessionCreated")
        _payload_keys(payload, {"task", "root_id"}, {"version"})
        if payload.get("version", 1) != 1:
            raise _FoldError(f"unsupported log version {payload.get('version')!r}")
        task = payload["task"]
        if not isinstance(task, str) or not task.strip():
            raise _FoldError("task must be a non-empty string")
        root_id = payload["root_id"]
        if not isinstance(root_id, str) or not root_id:
            raise _FoldError("root_id must be a non-empty string")
        try:
            root = IdeationNode(
                id=root_id,
                kind=NodeKind.TASK,
                name=task,
                description="",
                provenance=Provenance.SYSTEM,
                created_at=event.at,
                created_by_event=0,
            )
        except ValueError as exc:
            raise _FoldError(str(exc)) from exc
        return SessionSnapshot(graph=new_graph(root), pins=PinSet(), last_seq=0)

    if snapshot is None:
        raise _FoldError("log does not start at seq 0")
    if event.kind == "SessionCreated":
        raise _FoldError("SessionCreated appears more than once")

    graph, pins, failures = snapshot.graph, snapshot.pins, snapshot.failures

    if event.kind in ("GenerationCompleted", "UserNodeAdded"):
        if event.kind == "GenerationCompleted":
            _payload_keys(payload, {"op", "focus", "nodes", "edges", "exchange_digest"})
            if not isinstance(payload["exchange_digest"], str):
                raise _FoldError("exchange_digest must be a string")
            if not graph.has_node(str(payload["focus"])):
                raise _FoldError(f"focus {payload['focus']!r} does not exist")
            raw_nodes, raw_edges = payload["nodes"], payload["edges"]
        else:
            _payload_keys(payload, {"node", "edges"})
            raw_nodes, raw_edges = [payload["node"]], payload["edges"]
        if not isinstance(raw_nodes, list) or not isinstance(raw_edges, list):
            raise _FoldError("nodes and edges must be lists")
        nodes = [node_from_wire(n) for n in raw_nodes]
        edges = [edge_from_wire(e) for e in raw_edges]
        for node in nodes:
            if node.created_by_event > event.seq:
                raise _FoldError(
                    f"node {node.id} created_by_event {node.created_by_event} is in the future"
                )
        if event.kind == "UserNodeAdded":
            if any(n.provenance is not Provenance.USER for n in nodes):
                raise _FoldError("UserNodeAdded must carry a User-provenance node")
        try:
            graph = add_nodes(graph, nodes, edges)
        except GraphError as exc:
            raise _FoldError(str(exc)) from exc
        return SessionSnapshot(graph, pins, event.seq, failures)

    if event.kind in ("NodePinned", "NodeUnpinned"):
        _payload_keys(payload, {"node"})
        node_id = str(payload["node"])
        if not graph.has_node(node_id):
            raise _FoldError(f"pin target {node_id!r} does not exist")
        if event.kind == "NodePinned":
            if graph.nodes[node_id].kind not in PINNABLE_KINDS:
                raise _FoldError(
                    f"{graph.nodes[node_id].kind.value} nodes are not pinnable"
                )
            pins = pins.with_pin(node_id)
        else:
            if node_id not in pins:
                raise _FoldError(f"node {node_id!r} is not pinned")
            pins = pins.without(node_id)
        return SessionSnapshot(graph, pins, event.seq, failures)

    if event.kind == "GenerationFailed":
        _payload_keys(payload, {"op", "focus", "error_class", "attempts"})
        record = FailureRecord(
            seq=event.seq,
            op=str(payload["op"]),
            focus=str(payload["focus"]),
            error_class=str(payload["error_class"]),
            attempts=int(payload["attempts"]),
        )
        return SessionSnapshot(graph, pins, event.seq, failures + (record,))

    raise _FoldError(f"unhandled event kind {event.kind!r}")


def replay(events: Iterable[SessionEvent]) -> SessionSnapshot:
    """Deterministic fold of a seq-contiguous event list starting at 0."""
    snapshot: SessionSnapshot | None = None
    expected = 0
    for event in events:
        if event.seq != expected:
            raise CorruptLogError(
                f"expected seq {expected}, found {event.seq}", seq=event.seq
            )
        try:
            snapshot = _apply(snapshot, event)
        except _FoldError as exc:
            raise CorruptLogError(f"event {event.seq}: {exc}", seq=event.seq) from exc
        expected += 1
    if snapshot is None:
        raise CorruptLogError("empty log: missing SessionCreated", seq=0)
    return snapshot


def read_log_file(path: str | Path) -> list[SessionEvent]:
    """Strict full read of a log file: torn trailing records are corruption."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except FileNotFoundError:
        raise NotFoundError(f"no such log file: {path}") from None
    except OSError as exc:
        raise StorageError(f"cannot read {path}: {exc}") from exc
    if not data:
        raise CorruptLogError("empty log: missing SessionCreated", seq=0)
    if not data.endswith(b"\n"):
        raise CorruptLogError("torn trailing record (no final newline)")
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CorruptLogError(f"log is not valid UTF-8: {exc}") from exc
    events = []
    for i, line in enumerate(text.splitlines()):
        if not line.strip():
            raise CorruptLogError(f"blank line at {i + 1}")
        events.append(event_from_line(line, i + 1))
    return events


# --- the store ---------------------------------------------------------------


@dataclass
class SessionInfo:
    session_id: str
    task: str
    last_activity: datetime


@dataclass
class _Cached:
    events: list[SessionEvent] = field(default_factory=list)
    snapshot: SessionSnapshot | None = None
    offset: int = 0


def _utcnow() -> datetime:
    return datetime.now(timezone.utc)


class EventStore:
    """One JSONL log per session under a root directory.

    Appends are atomic single writes flushed to disk before returning.
    Reads ingest incrementally, so a log extended by another process is
    picked up on the next access.
    """

    def __init__(self, root: str | Path, clock: Callable[[], datetime] = _utcnow):
        self.root = Path(root)
        try:
            self.root.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StorageError(f"cannot create data dir {self.root}: {exc}") from exc
        self._clock = clock
        self._lock = threading.RLock()
        self._cache: dict[str, _Cached] = {}

    def path_for(self, session_id: str) -> Path:
        if not is_hex_id(session_id):
            raise NotFoundError(f"invalid session id {session_id!r}")
        return self.root / f"{session_id}{LOG_SUFFIX}"

    def session_exists(self, session_id: str) -> bool:
        try:
            return self.path_for(session_id).is_file()
        except NotFoundError:
            return False

    # -- reading --

    def _ingest(self, session_id: str, *, tail_tolerant: bool) -> _Cached:
        path = self.path_for(session_id)
        cached = self._cache.setdefault(session_id, _Cached())
        try:
            with open(path, "rb") as fh:
                fh.seek(cached.offset)
                data = fh.read()
        except FileNotFoundError:
            raise NotFoundError(f"no such session {session_id!r}") from None
        except OSError as exc:
            raise StorageError(f"cannot read {path}: {exc}") from exc
        if data:
            cut = data.rfind(b"\n")
            if cut < 0:
                complete, partial = b"", data
            else:
                complete, partial = data[: cut + 1], data[cut + 1 :]
            if partial and not tail_tolerant:
                raise CorruptLogError("torn trailing record (no final newline)")
            if complete:
                base_line = len(cached.events)
                try:
                    text = complete.decode("utf-8")
                except UnicodeDecodeError as exc:
                    raise CorruptLogError(f"log is not valid UTF-8: {exc}") from exc
                for i, line in enumerate(text.splitlines()):
                    if not line.strip():
                        raise CorruptLogError(f"blank line at {base_line + i + 1}")
                    event = event_from_line(line, base_line + i + 1)
                    expected = cached.events[-1].seq + 1 if cached.events else 0
                    if event.seq != expected:
                        raise CorruptLogError(
                            f"expected seq {expected}, found {event.seq}", seq=event.seq
                        )
                    try:
                        cached.snapshot = _apply(cached.snapshot, event)
                    except _FoldError as exc:
                        raise CorruptLogError(
                            f"event {event.seq}: {exc}", seq=event.seq
                        ) from exc
                    cached.events.append(event)
                cached.offset += len(complete)
        if cached.snapshot is None and not tail_tolerant:
            raise CorruptLogError("empty log: missing SessionCreated", seq=0)
        return cached

    def load(self, session_id: str) -> SessionSnapshot:
        with self._lock:
            cached = self._ingest(session_id, tail_tolerant=False)
            assert cached.snapshot is not None
            return cached.snapshot

    def snapshot_at(self, session_id: str, seq: int) -> SessionSnapshot:
        with self._lock:
            cached = self._ingest(session_id, tail_tolerant=False)
            if not (0 <= seq <= cached.events[-1].seq):
                raise OutOfRangeError(
                    f"seq {seq} outside 0..{cached.events[-1].seq}"
                )
            return replay(cached.events[: seq + 1])

    def events(self, session_id: str) -> list[SessionEvent]:
        with self._lock:
            return list(self._ingest(session_id, tail_tolerant=False).events)

    def events_since(self, session_id: str, after_seq: int) -> list[SessionEvent]:
        """Complete events with seq > after_seq; tolerates an in-flight tail."""
        with self._lock:
            cached = self._ingest(session_id, tail_tolerant=True)
            return [e for e in cached.events if e.seq > after_seq]

    def list_sessions(self) -> list[SessionInfo]:
        """Seq-0 peek plus file metadata; skips files whose head is unreadable."""
        out = []
        with self._lock:
            for path in self.root.glob(f"*{LOG_SUFFIX}"):
                session_id = path.name[: -len(LOG_SUFFIX)]
                if not is_hex_id(session_id):
                    continue
                try:
                    with open(path, "r", encoding="utf-8") as fh:
                        first = fh.readline().rstrip("\n")
                    event = event_from_line(first, 1)
                    if event.kind != "SessionCreated" or event.seq != 0:
                        continue
                    task = str(event.payload.get("task", ""))
                    mtime = datetime.fromtimestamp(path.stat().st_mtime, tz=timezone.utc)
                except (CorruptLogError, OSError):
                    continue
                out.append(SessionInfo(session_id, task, mtime))
        out.sort(key=lambda info: (info.last_activity, info.session_id), reverse=True)
        return out

    # -- writing --

    def append(self, session_id: str, kind: str, payload: dict) -> SessionEvent:
        """Validate against the current snapshot, then durably append.

        The line is written with a single os.write on an O_APPEND descriptor
        and fsynced before returning, so a crash never acknowledges a torn
        record.
        """
        if kind not in EVENT_KINDS:
            raise ValidationError(f"unknown event kind {kind!r}")
        with self._lock:
            path = self.path_for(session_id)
            if kind == "SessionCreated":
                if path.exists():
                    raise ValidationError(f"session {session_id!r} already exists")
                cached = self._cache.setdefault(session_id, _Cached())
            else:
                cached = self._ingest(session_id, tail_tolerant=False)
            seq = cached.events[-1].seq + 1 if cached.events else 0
            event = SessionEvent(seq=seq, at=self._clock(), kind=kind, payload=payload)
            try:
                new_snapshot = _apply(cached.snapshot, event)
            except _FoldError as exc:
                raise ValidationError(str(exc)) from exc
            line = (event_to_line(event) + "\n").encode("utf-8")
            try:
                fd = os.open(path, os.O_APPEND | os.O_CREAT | os.O_WRONLY, 0o644)
                try:
                    os.write(fd, line)
                    os.fsync(fd)
                finally:
                    os.close(fd)
            except OSError as exc:
                raise StorageError(f"cannot append to {path}: {exc}") from exc
            cached.events.append(event)
            cached.snapshot = new_snapshot
            cached.offset += len(line)
            return event

    def create_session(self, task: str) -> tuple[str, SessionEvent]:
        task = task.strip()
        if not task:
            raise ValidationError("task must be non-empty")
        if len(task) > TASK_MAX_CHARS:
            raise ValidationError(f"task exceeds {TASK_MAX_CHARS} chars")
        session_id = new_id()
        event = self.append(
            session_id,
            "SessionCreated",
            {"task": task, "root_id": new_id(), "version": 1},
        )
        return session_id, event

    def append_exchange(self, session_id: str, record: dict) -> None:
        """Optional sidecar debug log; never part of the canonical fold."""
        path = self.root / f"{session_id}{EXCHANGE_SUFFIX}"
        line = (json.dumps(record, ensure_ascii=False) + "\n").encode("utf-8")
        try:
            fd = os.open(path, os.O_APPEND | os.O_CREAT | os.O_WRONLY, 0o644)
            try:
                os.write(fd, line)
            finally:
                os.close(fd)
        except OSError as exc:
            raise StorageError(f"cannot append to {path}: {exc}") from exc
