"""Session engine: the store and the orchestrator behind one synchronous API.

Both the CLI script runner and the HTTP service drive sessions through this
class, which is what makes their event logs comparable action-for-action.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Callable

from .graph import (
    DuplicateNameError,
    Edge,
    EdgeKind,
    GraphError,
    IdeationNode,
    NAME_MAX_CHARS,
    NodeId,
    NodeKind,
    PINNABLE_KINDS,
    Provenance,
    UnknownNodeError,
    new_id,
    normalize_name,
)
from .orchestrator import (
    DEFAULT_CONFIG,
    GenerationConfig,
    GenerationError,
    MissingQuestionError,
    ModelExchange,
    OpKind,
    PreconditionError,
    ProviderError,
    execute,
    exchange_digest,
)
from .providers import ProviderPort
from .store import (
    EventStore,
    NotFoundError,
    OutOfRangeError,
    SessionEvent,
    SessionInfo,
    SessionSnapshot,
    ValidationError,
    edge_to_wire,
    node_to_wire,
)


class AmbiguousNameError(Exception):
    def __init__(self, name: str, matches: list[IdeationNode]):
        super().__init__(
            f"name {name!r} matches {len(matches)} nodes: "
            + ", ".join(f"{n.kind.value} {n.id[:8]}" for n in matches)
        )
        self.matches = matches


# (exception type, http status, machine code); order matters for subclasses.
_ERROR_TABLE: tuple[tuple[type, int, str], ...] = (
    (UnknownNodeError, 404, "unknown_node"),
    (NotFoundError, 404, "not_found"),
    (OutOfRangeError, 400, "validation"),
    (DuplicateNameError, 409, "conflict"),
    (MissingQuestionError, 422, "bad_precondition"),
    (PreconditionError, 422, "bad_precondition"),
    (AmbiguousNameError, 422, "bad_precondition"),
    (GenerationError, 502, "generation_failed"),
    (ProviderError, 503, "provider_unavailable"),
    (ValidationError, 400, "validation"),
    (GraphError, 422, "bad_precondition"),
)


def classify_error(exc: BaseException) -> tuple[int, str] | None:
    """(http status, machine code) for a typed engine error, else None."""
    for etype, status, code in _ERROR_TABLE:
        if isinstance(exc, etype):
            return status, code
    return None


@dataclass
class OpResult:
    added_nodes: list[IdeationNode]
    added_edges: list[Edge]
    answer: str | None
    exchange: ModelExchange
    event: SessionEvent


def snapshot_to_wire(snapshot: SessionSnapshot) -> dict:
    edges = sorted(
        (edge_to_wire(e) for e in snapshot.graph.edges),
        key=lambda d: (d["source"], d["kind"], d["target"]),
    )
    return {
        "nodes": [node_to_wire(n) for n in snapshot.graph.nodes.values()],
        "edges": edges,
        "pins": list(snapshot.pins.pinned),
        "last_seq": snapshot.last_seq,
    }


def resolve_node(snapshot: SessionSnapshot, ref: str) -> IdeationNode:
    """Resolve a node id or a (normalized) node name to exactly one node."""
    if ref in snapshot.graph.nodes:
        return snapshot.graph.nodes[ref]
    norm = normalize_name(ref)
    matches = [
        n for n in snapshot.graph.nodes.values() if normalize_name(n.name) == norm
    ]
    if not matches:
        raise UnknownNodeError(f"no node named {ref!r}")
    if len(matches) > 1:
        raise AmbiguousNameError(ref, matches)
    return matches[0]


def _utcnow() -> datetime:
    return datetime.now(timezone.utc)


class IdeationEngine:
    def __init__(
        self,
        store: EventStore,
        provider: ProviderPort,
        config: GenerationConfig = DEFAULT_CONFIG,
        *,
        debug_exchanges: bool = False,
        clock: Callable[[], datetime] = _utcnow,
    ):
        self.store = store
        self.provider = provider
        self.config = config
        self.debug_exchanges = debug_exchanges
        self._clock = clock

    # -- lifecycle and views --

    def create_session(self, task: str) -> tuple[str, SessionSnapshot]:
        session_id, _ = self.store.create_session(task)
        return session_id, self.store.load(session_id)

    def snapshot(self, session_id: str, at: int | None = None) -> SessionSnapshot:
        if at is None:
            return self.store.load(session_id)
        return self.store.snapshot_at(session_id, at)

    def list_sessions(self) -> list[SessionInfo]:
        return self.store.list_sessions()

    def collection(self, session_id: str) -> list[tuple[IdeationNode, list[str]]]:
        from .graph import explored_summary

        snapshot = self.store.load(session_id)
        return explored_summary(snapshot.graph, snapshot.pins)

    # -- writes --

    def run_op(
        self,
        session_id: str,
        op: OpKind,
        focus: NodeId,
        question: str | None = None,
    ) -> OpResult:
        snapshot = self.store.load(session_id)
        snapshot.graph.node(focus)  # raise UnknownNodeError before any provider call
        next_seq = snapshot.last_seq + 1
        try:
            (nodes, edges), exchange = execute(
                op,
                snapshot.graph,
                snapshot.pins,
                focus,
                question,
                self.provider,
                config=self.config,
                next_event_seq=next_seq,
                clock=self._clock,
            )
        except (GenerationError, ProviderError) as exc:
            error_class = (
                "generation_failed"
                if isinstance(exc, GenerationError)
                else "provider_unavailable"
            )
            self.store.append(
                session_id,
                "GenerationFailed",
                {
                    "op": op.value,
                    "focus": focus,
                    "error_class": error_class,
                    "attempts": exc.attempts,
                },
            )
            if self.debug_exchanges:
                self.store.append_exchange(
                    session_id,
                    {
                        "op": op.value,
                        "focus": focus,
                        "outcome": error_class,
                        "attempts": exc.attempts,
                        "raw_replies": getattr(exc, "raw_replies", []),
                    },
                )
            raise
        digest = exchange_digest(exchange.rendered_prompt, exchange.raw_replies[-1])
        event = self.store.append(
            session_id,
            "GenerationCompleted",
            {
                "op": op.value,
                "focus": focus,
                "nodes": [node_to_wire(n) for n in nodes],
                "edges": [edge_to_wire(e) for e in edges],
                "exchange_digest": digest,
            },
        )
        if self.debug_exchanges:
            self.store.append_exchange(
                session_id,
                {
                    "seq": event.seq,
                    "op": op.value,
                    "focus": focus,
                    "provider_id": exchange.provider_id,
                    "attempts": exchange.attempts,
                    "duration_ms": exchange.duration_ms,
                    "rendered_prompt": exchange.rendered_prompt,
                    "raw_replies": exchange.raw_replies,
                    "answer_truncated": exchange.answer_truncated,
                },
            )
        answer = (
            exchange.parsed.answer if op is OpKind.ANSWER_QUESTION else None
        )
        return OpResult(
            added_nodes=nodes,
            added_edges=edges,
            answer=answer,
            exchange=exchange,
            event=event,
        )

    def add_user_node(
        self,
        session_id: str,
        parent: NodeId,
        kind: str,
        name: str,
        description: str,
    ) -> tuple[IdeationNode, SessionEvent]:
        snapshot = self.store.load(session_id)
        parent_node = snapshot.graph.node(parent)
        try:
            node_kind = NodeKind(kind)
        except ValueError:
            raise ValidationError(f"unknown node kind {kind!r}") from None
        if node_kind not in (NodeKind.IDEA, NodeKind.MITIGATION):
            raise PreconditionError(
                f"users contribute Idea or Mitigation nodes, not {node_kind.value}"
            )
        expected_parent = (
            NodeKind.CATEGORY if node_kind is NodeKind.IDEA else NodeKind.RISK
        )
        if parent_node.kind is not expected_parent:
            raise PreconditionError(
                f"a {node_kind.value} goes under a {expected_parent.value}, "
                f"not a {parent_node.kind.value}"
            )
        name = name.strip()
        description = description.strip()
        if not name or len(name) > NAME_MAX_CHARS:
            raise ValidationError(f"name must be 1..{NAME_MAX_CHARS} chars")
        if not description:
            raise ValidationError("description must be non-empty")
        if node_kind is NodeKind.IDEA:
            if normalize_name(name) in snapshot.graph.idea_names_under(parent):
                raise DuplicateNameError(
                    f"idea name {normalize_name(name)!r} already used in this category",
                    normalize_name(name),
                )
        edge_kind = (
            EdgeKind.CONTAINS if node_kind is NodeKind.IDEA else EdgeKind.MITIGATES
        )
        node = IdeationNode(
            id=new_id(),
            kind=node_kind,
            name=name,
            description=description,
            provenance=Provenance.USER,
            created_at=self._clock(),
            created_by_event=snapshot.last_seq + 1,
        )
        event = self.store.append(
            session_id,
            "UserNodeAdded",
            {
                "node": node_to_wire(node),
                "edges": [edge_to_wire(Edge(parent, edge_kind, node.id))],
            },
        )
        return node, event

    def pin(self, session_id: str, node_id: NodeId) -> tuple[str, ...]:
        snapshot = self.store.load(session_id)
        node = snapshot.graph.node(node_id)
        if node.kind not in PINNABLE_KINDS:
            raise PreconditionError(f"{node.kind.value} nodes are not pinnable")
        if node_id in snapshot.pins:
            return snapshot.pins.pinned
        self.store.append(session_id, "NodePinned", {"node": node_id})
        return self.store.load(session_id).pins.pinned

    def unpin(self, session_id: str, node_id: NodeId) -> tuple[str, ...]:
        snapshot = self.store.load(session_id)
        snapshot.graph.node(node_id)
        if node_id not in snapshot.pins:
            raise NotFoundError(f"node {node_id!r} is not pinned")
        self.store.append(session_id, "NodeUnpinned", {"node": node_id})
        return self.store.load(session_id).pins.pinned
