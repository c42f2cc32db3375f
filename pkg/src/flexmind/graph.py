"""Typed design-space graph: node and edge domain types plus structural rules.

Pure value-level module. Every operation returns new values; nothing here
performs I/O or knows about prompt generation.
"""

from __future__ import annotations

import re
import secrets
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Iterable, Sequence

NodeId = str
SessionId = str
EventSeq = int

NAME_MAX_CHARS = 120

_WHITESPACE = re.compile(r"\s+")
_HEX_ID = re.compile(r"^[0-9a-f]{32}$")


def new_id() -> str:
    """128-bit random identifier rendered as lowercase hex."""
    return secrets.token_hex(16)


def is_hex_id(value: str) -> bool:
    return bool(_HEX_ID.match(value))


def normalize_name(name: str) -> str:
    """Lowercase with runs of whitespace collapsed to single spaces.

    Idempotent: normalize_name(normalize_name(s)) == normalize_name(s).
    """
    return _WHITESPACE.sub(" ", name.strip()).lower()


class NodeKind(str, Enum):
    TASK = "Task"
    CATEGORY = "Category"
    IDEA = "Idea"
    ATTRIBUTE = "Attribute"
    RISK = "Risk"
    MITIGATION = "Mitigation"
    QUESTION = "Question"
    ANSWER = "Answer"


class Provenance(str, Enum):
    SYSTEM = "System"
    USER = "User"


class EdgeKind(str, Enum):
    CONTAINS = "Contains"
    ABSTRACTS = "Abstracts"
    INSPIRES = "Inspires"
    FLAGS_RISK = "FlagsRisk"
    MITIGATES = "Mitigates"
    ASKS = "Asks"
    ANSWERS = "Answers"


# Allowed (source kind, target kind) pairs per edge kind. Asks is handled
# separately: any source except Question/Answer may ask a Question.
_EDGE_PAIRS: dict[EdgeKind, tuple[tuple[NodeKind, NodeKind], ...]] = {
    EdgeKind.CONTAINS: (
        (NodeKind.TASK, NodeKind.CATEGORY),
        (NodeKind.CATEGORY, NodeKind.IDEA),
    ),
    EdgeKind.ABSTRACTS: ((NodeKind.IDEA, NodeKind.ATTRIBUTE),),
    EdgeKind.INSPIRES: ((NodeKind.ATTRIBUTE, NodeKind.CATEGORY),),
    EdgeKind.FLAGS_RISK: ((NodeKind.IDEA, NodeKind.RISK),),
    EdgeKind.MITIGATES: ((NodeKind.RISK, NodeKind.MITIGATION),),
    EdgeKind.ANSWERS: ((NodeKind.QUESTION, NodeKind.ANSWER),),
}

PINNABLE_KINDS = frozenset({NodeKind.IDEA, NodeKind.MITIGATION})


def edge_kind_allowed(source: NodeKind, kind: EdgeKind, target: NodeKind) -> bool:
    if kind is EdgeKind.ASKS:
        return target is NodeKind.QUESTION and source not in (
            NodeKind.QUESTION,
            NodeKind.ANSWER,
        )
    return (source, target) in _EDGE_PAIRS[kind]


class GraphError(Exception):
    """Base class for design-graph rule violations."""


class UnknownNodeError(GraphError):
    pass


class CycleError(GraphError):
    pass


class EdgeKindError(GraphError):
    pass


class DanglingEdgeError(GraphError):
    pass


class DuplicateNameError(GraphError):
    def __init__(self, message: str, normalized_name: str):
        super().__init__(message)
        self.normalized_name = normalized_name


@dataclass(frozen=True)
class IdeationNode:
    """One unit of the design space.

    Names are short display strings; descriptions may be empty only on the
    Task root. created_by_event ties the node to the session event that
    introduced it.
    """

    id: NodeId
    kind: NodeKind
    name: str
    description: str
    provenance: Provenance
    created_at: datetime
    created_by_event: EventSeq

    def __post_init__(self) -> None:
        if not self.name.strip():
            raise ValueError("node name must be non-empty after trimming")
        if len(self.name) > NAME_MAX_CHARS:
            raise ValueError(f"node name exceeds {NAME_MAX_CHARS} chars")
        if self.kind is not NodeKind.TASK and not self.description.strip():
            raise ValueError(f"{self.kind.value} node needs a non-empty description")
        if self.created_by_event < 0:
            raise ValueError("created_by_event must be >= 0")


@dataclass(frozen=True)
class Edge:
    source: NodeId
    kind: EdgeKind
    target: NodeId


@dataclass(frozen=True)
class Violation:
    """One broken graph rule, naming the rule and the ids involved."""

    rule: str
    message: str
    subjects: tuple[str, ...] = ()


@dataclass(frozen=True)
class DesignGraph:
    """Acyclic multigraph of IdeationNodes with typed edges.

    Treat instances as immutable: operations return new graphs that share
    node objects with their predecessors.
    """

    nodes: dict[NodeId, IdeationNode]
    edges: frozenset[Edge]
    root: NodeId
    _incoming: dict[NodeId, tuple[Edge, ...]] = field(
        init=False, repr=False, compare=False, default_factory=dict
    )
    _outgoing: dict[NodeId, tuple[Edge, ...]] = field(
        init=False, repr=False, compare=False, default_factory=dict
    )

    def __post_init__(self) -> None:
        incoming: dict[NodeId, list[Edge]] = {nid: [] for nid in self.nodes}
        outgoing: dict[NodeId, list[Edge]] = {nid: [] for nid in self.nodes}
        for edge in self.edges:
            if edge.target in incoming:
                incoming[edge.target].append(edge)
            if edge.source in outgoing:
                outgoing[edge.source].append(edge)
        object.__setattr__(
            self, "_incoming", {k: tuple(v) for k, v in incoming.items()}
        )
        object.__setattr__(
            self, "_outgoing", {k: tuple(v) for k, v in outgoing.items()}
        )

    def node(self, node_id: NodeId) -> IdeationNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownNodeError(f"unknown node {node_id!r}") from None

    def has_node(self, node_id: NodeId) -> bool:
        return node_id in self.nodes

    def incoming(self, node_id: NodeId) -> tuple[Edge, ...]:
        return self._incoming.get(node_id, ())

    def outgoing(self, node_id: NodeId) -> tuple[Edge, ...]:
        return self._outgoing.get(node_id, ())

    def nodes_of_kind(self, kind: NodeKind) -> list[IdeationNode]:
        return [n for n in self.nodes.values() if n.kind is kind]

    def category_index(self) -> dict[str, NodeId]:
        """Normalized category name -> node id."""
        return {
            normalize_name(n.name): n.id
            for n in self.nodes.values()
            if n.kind is NodeKind.CATEGORY
        }

    def idea_names_under(self, category_id: NodeId) -> set[str]:
        """Normalized names of Ideas contained by the given Category."""
        names = set()
        for edge in self.outgoing(category_id):
            if edge.kind is EdgeKind.CONTAINS:
                child = self.nodes.get(edge.target)
                if child is not None and child.kind is NodeKind.IDEA:
                    names.add(normalize_name(child.name))
        return names

    def reaches(self, start: NodeId, goal: NodeId) -> bool:
        """True if goal is reachable from start along directed edges."""
        if start == goal:
            return True
        seen = {start}
        stack = [start]
        while stack:
            for edge in self.outgoing(stack.pop()):
                if edge.target == goal:
                    return True
                if edge.target not in seen:
                    seen.add(edge.target)
                    stack.append(edge.target)
        return False


def new_graph(root: IdeationNode) -> DesignGraph:
    if root.kind is not NodeKind.TASK:
        raise EdgeKindError("graph root must be a Task node")
    return DesignGraph(nodes={root.id: root}, edges=frozenset(), root=root.id)


@dataclass(frozen=True)
class PinSet:
    """Insertion-ordered set of pinned node ids."""

    pinned: tuple[NodeId, ...] = ()

    def __contains__(self, node_id: NodeId) -> bool:
        return node_id in self.pinned

    def with_pin(self, node_id: NodeId) -> "PinSet":
        if node_id in self.pinned:
            return self
        return PinSet(self.pinned + (node_id,))

    def without(self, node_id: NodeId) -> "PinSet":
        return PinSet(tuple(n for n in self.pinned if n != node_id))


def _has_cycle(nodes: Iterable[NodeId], adjacency: dict[NodeId, list[NodeId]]) -> bool:
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {nid: WHITE for nid in nodes}
    for start in color:
        if color[start] != WHITE:
            continue
        stack: list[tuple[NodeId, int]] = [(start, 0)]
        color[start] = GRAY
        while stack:
            nid, idx = stack[-1]
            targets = adjacency.get(nid, [])
            if idx < len(targets):
                stack[-1] = (nid, idx + 1)
                nxt = targets[idx]
                if color.get(nxt, BLACK) == GRAY:
                    return True
                if color.get(nxt, BLACK) == WHITE:
                    color[nxt] = GRAY
                    stack.append((nxt, 0))
            else:
                color[nid] = BLACK
                stack.pop()
    return False


def add_nodes(
    graph: DesignGraph,
    nodes: Sequence[IdeationNode],
    edges: Sequence[Edge],
) -> DesignGraph:
    """Append a batch of new nodes and edges, returning a new graph.

    Prior nodes and edges are never modified or removed. Every new node
    must arrive with at least one incoming edge; edges may also target
    existing nodes (e.g. a fresh Attribute inspiring an existing Category).
    Edges identical to existing triples are dropped silently, keeping the
    no-duplicate-triple invariant without a dedicated error.
    """
    batch_by_id: dict[NodeId, IdeationNode] = {}
    for node in nodes:
        if node.id in graph.nodes or node.id in batch_by_id:
            raise GraphError(f"node id {node.id!r} already present")
        if node.kind is NodeKind.TASK:
            raise EdgeKindError("a session has exactly one Task node")
        batch_by_id[node.id] = node

    def kind_of(node_id: NodeId) -> NodeKind:
        if node_id in graph.nodes:
            return graph.nodes[node_id].kind
        if node_id in batch_by_id:
            return batch_by_id[node_id].kind
        raise DanglingEdgeError(f"edge endpoint {node_id!r} does not exist")

    new_edges: list[Edge] = []
    seen_triples: set[Edge] = set()
    incoming_new: dict[NodeId, int] = {nid: 0 for nid in batch_by_id}
    for edge in edges:
        src_kind = kind_of(edge.source)
        dst_kind = kind_of(edge.target)
        if not edge_kind_allowed(src_kind, edge.kind, dst_kind):
            raise EdgeKindError(
                f"{src_kind.value} -{edge.kind.value}-> {dst_kind.value} is not a legal edge"
            )
        if edge in seen_triples or edge in graph.edges:
            continue
        seen_triples.add(edge)
        new_edges.append(edge)
        if edge.target in incoming_new:
            incoming_new[edge.target] += 1

    for nid, count in incoming_new.items():
        if count == 0:
            raise DanglingEdgeError(
                f"new node {batch_by_id[nid].name!r} ({nid}) has no incoming edge"
            )

    # Name uniqueness: categories session-wide, ideas within each parent category.
    cat_index = graph.category_index()
    for node in batch_by_id.values():
        if node.kind is not NodeKind.CATEGORY:
            continue
        norm = normalize_name(node.name)
        if norm in cat_index:
            raise DuplicateNameError(f"category name {norm!r} already used", norm)
        cat_index[norm] = node.id

    idea_names: dict[NodeId, set[str]] = {}
    for edge in new_edges:
        if edge.kind is not EdgeKind.CONTAINS:
            continue
        child = batch_by_id.get(edge.target)
        if child is None or child.kind is not NodeKind.IDEA:
            continue
        parent = edge.source
        if parent not in idea_names:
            idea_names[parent] = (
                graph.idea_names_under(parent) if parent in graph.nodes else set()
            )
        norm = normalize_name(child.name)
        if norm in idea_names[parent]:
            raise DuplicateNameError(
                f"idea name {norm!r} already used in its category", norm
            )
        idea_names[parent].add(norm)

    adjacency: dict[NodeId, list[NodeId]] = {}
    for edge in graph.edges:
        adjacency.setdefault(edge.source, []).append(edge.target)
    for edge in new_edges:
        adjacency.setdefault(edge.source, []).append(edge.target)
    all_ids = list(graph.nodes) + list(batch_by_id)
    if _has_cycle(all_ids, adjacency):
        raise CycleError("batch would introduce a directed cycle")

    merged_nodes = dict(graph.nodes)
    merged_nodes.update(batch_by_id)
    return DesignGraph(
        nodes=merged_nodes,
        edges=graph.edges | frozenset(new_edges),
        root=graph.root,
    )


def check_invariants(graph: DesignGraph) -> list[Violation]:
    """Validate every structural rule; empty list means the graph is sound.

    Total function: never raises, reports each broken rule with the ids
    involved.
    """
    out: list[Violation] = []

    if graph.root not in graph.nodes:
        out.append(Violation("root-missing", "root id not in nodes", (graph.root,)))
    else:
        root = graph.nodes[graph.root]
        if root.kind is not NodeKind.TASK:
            out.append(Violation("root-kind", "root node is not a Task", (root.id,)))

    tasks = graph.nodes_of_kind(NodeKind.TASK)
    if len(tasks) != 1:
        out.append(
            Violation(
                "single-task",
                f"expected exactly one Task node, found {len(tasks)}",
                tuple(n.id for n in tasks),
            )
        )

    for node in graph.nodes.values():
        if not node.name.strip() or len(node.name) > NAME_MAX_CHARS:
            out.append(Violation("name-invalid", "empty or oversized name", (node.id,)))

    for edge in graph.edges:
        missing = [e for e in (edge.source, edge.target) if e not in graph.nodes]
        if missing:
            out.append(
                Violation(
                    "dangling-edge",
                    "edge endpoint does not exist",
                    (edge.source, edge.target),
                )
            )
            continue
        src = graph.nodes[edge.source]
        dst = graph.nodes[edge.target]
        if not edge_kind_allowed(src.kind, edge.kind, dst.kind):
            out.append(
                Violation(
                    "edge-kind",
                    f"{src.kind.value} -{edge.kind.value}-> {dst.kind.value} is not legal",
                    (edge.source, edge.target),
                )
            )

    for node in graph.nodes.values():
        indegree = len(graph.incoming(node.id))
        if node.id == graph.root:
            if indegree != 0:
                out.append(
                    Violation("root-incoming", "root must have no incoming edges", (node.id,))
                )
        elif indegree == 0:
            out.append(
                Violation("orphan", "non-root node has no incoming edge", (node.id,))
            )

    adjacency: dict[NodeId, list[NodeId]] = {}
    for edge in graph.edges:
        adjacency.setdefault(edge.source, []).append(edge.target)
    if _has_cycle(list(graph.nodes), adjacency):
        out.append(Violation("cycle", "graph contains a directed cycle", ()))

    by_cat_name: dict[str, list[NodeId]] = {}
    for node in graph.nodes_of_kind(NodeKind.CATEGORY):
        by_cat_name.setdefault(normalize_name(node.name), []).append(node.id)
    for norm, ids in by_cat_name.items():
        if len(ids) > 1:
            out.append(
                Violation("duplicate-category-name", f"category name {norm!r} reused", tuple(ids))
            )

    for cat in graph.nodes_of_kind(NodeKind.CATEGORY):
        seen: dict[str, NodeId] = {}
        for edge in graph.outgoing(cat.id):
            if edge.kind is not EdgeKind.CONTAINS:
                continue
            child = graph.nodes.get(edge.target)
            if child is None or child.kind is not NodeKind.IDEA:
                continue
            norm = normalize_name(child.name)
            if norm in seen:
                out.append(
                    Violation(
                        "duplicate-idea-name",
                        f"idea name {norm!r} reused under category {cat.name!r}",
                        (seen[norm], child.id),
                    )
                )
            else:
                seen[norm] = child.id

    return out


def subpath_to_root(graph: DesignGraph, node_id: NodeId) -> list[IdeationNode]:
    """One deterministic root-to-node path.

    At every fork the parent introduced by the oldest event wins (ties
    broken by node id), so path display never jumps around as the graph
    grows.
    """
    current = graph.node(node_id)
    path = [current]
    hops = 0
    while current.id != graph.root:
        parents = graph.incoming(current.id)
        if not parents:
            raise GraphError(f"node {current.id!r} has no path to root")
        parent_nodes = [graph.node(e.source) for e in parents]
        current = min(parent_nodes, key=lambda n: (n.created_by_event, n.id))
        path.append(current)
        hops += 1
        if hops > len(graph.nodes):
            raise GraphError("parent chain does not terminate (cycle?)")
    path.reverse()
    return path


def explored_summary(
    graph: DesignGraph, pins: PinSet
) -> list[tuple[IdeationNode, list[str]]]:
    """Pinned nodes in pin order, each with its path-to-root names."""
    out = []
    for node_id in pins.pinned:
        node = graph.node(node_id)
        out.append((node, [n.name for n in subpath_to_root(graph, node_id)]))
    return out
