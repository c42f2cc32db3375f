"""Prompt orchestration: context assembly, templates, reply parsing, retry.

One `execute` call is one opt-in user action. It assembles steering
context from the session graph, renders a deterministic prompt, calls the
provider (re-prompting on malformed output), and maps the validated reply
onto a node batch that is guaranteed to apply cleanly to the source graph.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Callable, Optional

from .graph import (
    DesignGraph,
    Edge,
    EdgeKind,
    EventSeq,
    IdeationNode,
    NAME_MAX_CHARS,
    NodeId,
    NodeKind,
    PinSet,
    Provenance,
    new_id,
    normalize_name,
    subpath_to_root,
)
from .providers import ProviderParams, ProviderPort, ProviderTransportError


class OpKind(str, Enum):
    INITIALIZE_SPACE = "InitializeSpace"
    EXPAND_CATEGORY = "ExpandCategory"
    FIND_SIMILAR = "FindSimilar"
    DIAGNOSE_RISKS = "DiagnoseRisks"
    MITIGATE_RISK = "MitigateRisk"
    ANSWER_QUESTION = "AnswerQuestion"


def op_kind_from_name(name: str) -> OpKind:
    for op in OpKind:
        if op.value.lower() == name.strip().lower():
            return op
    raise ValueError(f"unknown operation {name!r}")


@dataclass(frozen=True)
class GenerationConfig:
    max_retries: int = 2
    context_budget: int = 12_000
    answer_max_chars: int = 1_200
    gen_temperature: float = 0.9
    answer_temperature: float = 0.2
    model_name: str = "gpt-4o-mini"
    max_output_chars: int = 8_000
    provider_timeout: float = 60.0


DEFAULT_CONFIG = GenerationConfig()


class OrchestratorError(Exception):
    pass


class PreconditionError(OrchestratorError):
    pass


class MissingQuestionError(OrchestratorError):
    pass


class ParseError(OrchestratorError):
    """Base for reply-parsing failures; `path` points at the offending field."""

    def __init__(self, message: str, path: str = "$"):
        super().__init__(message)
        self.path = path


class DecodeError(ParseError):
    pass


class SchemaError(ParseError):
    pass


class BoundsError(ParseError):
    pass


class ProviderError(OrchestratorError):
    """Transport still failing after the retry budget."""

    def __init__(self, message: str, attempts: int):
        super().__init__(message)
        self.attempts = attempts


class GenerationError(OrchestratorError):
    """Replies still malformed after the retry budget."""

    def __init__(self, message: str, raw_replies: list[str], attempts: int):
        super().__init__(message)
        self.raw_replies = raw_replies
        self.attempts = attempts


# --- reply payloads -------------------------------------------------------


@dataclass(frozen=True)
class IdeaItem:
    name: str
    description: str

    def to_dict(self) -> dict:
        return {"name": self.name, "description": self.description}


@dataclass(frozen=True)
class NamedItem:
    name: str
    description: str

    def to_dict(self) -> dict:
        return {"name": self.name, "description": self.description}


@dataclass(frozen=True)
class AttributeItem:
    name: str
    rationale: str

    def to_dict(self) -> dict:
        return {"name": self.name, "rationale": self.rationale}


@dataclass(frozen=True)
class CategoryBlock:
    name: str
    description: str
    ideas: tuple[IdeaItem, ...]
    from_attribute: str | None = None

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "description": self.description,
            "ideas": [i.to_dict() for i in self.ideas],
        }
        if self.from_attribute is not None:
            out["from_attribute"] = self.from_attribute
        return out


@dataclass(frozen=True)
class CategoriesPayload:
    categories: tuple[CategoryBlock, ...]

    def to_dict(self) -> dict:
        return {"categories": [c.to_dict() for c in self.categories]}


@dataclass(frozen=True)
class FindSimilarPayload:
    attributes: tuple[AttributeItem, ...]
    categories: tuple[CategoryBlock, ...]

    def to_dict(self) -> dict:
        return {
            "attributes": [a.to_dict() for a in self.attributes],
            "categories": [c.to_dict() for c in self.categories],
        }


@dataclass(frozen=True)
class RisksPayload:
    risks: tuple[NamedItem, ...]

    def to_dict(self) -> dict:
        return {"risks": [r.to_dict() for r in self.risks]}


@dataclass(frozen=True)
class MitigationsPayload:
    mitigations: tuple[NamedItem, ...]

    def to_dict(self) -> dict:
        return {"mitigations": [m.to_dict() for m in self.mitigations]}


@dataclass(frozen=True)
class AnswerPayload:
    answer: str
    truncated: bool = False

    def to_dict(self) -> dict:
        return {"answer": self.answer}


ReplyPayload = object

# List-length bounds per operation: (path, low, high).
BOUNDS: dict[OpKind, dict[str, tuple[int, int]]] = {
    OpKind.INITIALIZE_SPACE: {"categories": (4, 6), "ideas": (3, 5)},
    OpKind.EXPAND_CATEGORY: {"categories": (1, 1), "ideas": (3, 5)},
    OpKind.FIND_SIMILAR: {"attributes": (2, 4), "categories": (2, 4), "ideas": (2, 4)},
    OpKind.DIAGNOSE_RISKS: {"risks": (2, 5)},
    OpKind.MITIGATE_RISK: {"mitigations": (2, 4)},
}


# --- steering context ------------------------------------------------------


@dataclass(frozen=True)
class SteeringContext:
    task_statement: str
    focus_path: tuple[tuple[str, str], ...]
    user_contributions: tuple[tuple[str, str, str], ...]
    pinned_names: tuple[str, ...]
    question_text: str | None = None


def render_context_block(context: SteeringContext) -> str:
    """Canonical textual form of the steering context.

    The 12k character budget in `assemble_context` is measured against this
    exact rendering, and `render_prompt` embeds it verbatim, so user node
    names survive into every later prompt byte-for-byte.
    """
    lines = [f"Design task: {context.task_statement}", ""]
    lines.append("Focus path (task to selected node):")
    for i, (name, description) in enumerate(context.focus_path, start=1):
        if description:
            lines.append(f"  {i}. {name}: {description}")
        else:
            lines.append(f"  {i}. {name}")
    if context.user_contributions:
        lines.append("")
        lines.append(
            "The designer's own contributions so far, oldest first. "
            "These are the designer's ideas: honor them and tailor everything to them."
        )
        for kind, name, description in context.user_contributions:
            lines.append(f"  - [{kind}] {name}: {description}")
    if context.pinned_names:
        lines.append("")
        lines.append("Ideas the designer has pinned as promising:")
        for name in context.pinned_names:
            lines.append(f"  - {name}")
    if context.question_text is not None:
        lines.append("")
        lines.append(f"The designer's question: {context.question_text}")
    return "\n".join(lines)


def assemble_context(
    graph: DesignGraph,
    pins: PinSet,
    focus: NodeId,
    question: str | None = None,
    *,
    budget: int = DEFAULT_CONFIG.context_budget,
) -> SteeringContext:
    """Build the steering context for a generation, trimmed to the budget.

    Oldest user contributions are dropped first, then oldest pinned names;
    the task statement, focus path, and question are never dropped.
    """
    path = subpath_to_root(graph, focus)
    task_statement = graph.node(graph.root).name
    focus_path = tuple((n.name, n.description) for n in path)

    user_nodes = sorted(
        (n for n in graph.nodes.values() if n.provenance is Provenance.USER),
        key=lambda n: (n.created_by_event, n.created_at, n.id),
    )
    contributions = [(n.kind.value, n.name, n.description) for n in user_nodes]
    pinned = [graph.node(node_id).name for node_id in pins.pinned]

    def build() -> SteeringContext:
        return SteeringContext(
            task_statement=task_statement,
            focus_path=focus_path,
            user_contributions=tuple(contributions),
            pinned_names=tuple(pinned),
            question_text=question,
        )

    context = build()
    while len(render_context_block(context)) > budget and contributions:
        contributions.pop(0)
        context = build()
    while len(render_context_block(context)) > budget and pinned:
        pinned.pop(0)
        context = build()
    return context


# --- prompt rendering -------------------------------------------------------

_ROLE = (
    "You are a creative ideation partner embedded in a design-space "
    "exploration tool. Ground every reply in the design task and the "
    "selected focus below."
)

_JSON_RULES = (
    "Reply with exactly one JSON object and no other text. Every name must "
    "be shorter than 120 characters and every description must be non-empty."
)


def _instruction(op: OpKind, context: SteeringContext) -> str:
    focus_name = context.focus_path[-1][0]
    if op is OpKind.INITIALIZE_SPACE:
        return (
            "Propose between 4 and 6 diverse idea categories for the design "
            "task, each accompanied by 3 to 5 concrete example ideas. Cover "
            "clearly different approaches.\n"
            f'{_JSON_RULES} Shape: {{"categories": [{{"name": "...", '
            '"description": "...", "ideas": [{"name": "...", "description": "..."}]}]}'
        )
    if op is OpKind.EXPAND_CATEGORY:
        return (
            f'Propose 3 to 5 new concrete ideas inside the category "{focus_name}".\n'
            f"{_JSON_RULES} Shape: "
            '{"categories": [{"name": "...", "description": "...", '
            '"ideas": [{"name": "...", "description": "..."}]}]} '
            f'with exactly one category whose name is exactly "{focus_name}".'
        )
    if op is OpKind.FIND_SIMILAR:
        return (
            f'First, abstract the essential attributes of the idea "{focus_name}": '
            "the underlying concepts that make it work. Then retrieve diverse "
            "implementations of those attributes as 2 to 4 categories of similar "
            "ideas (2 to 4 ideas each), balancing conceptual relevance with "
            "variety. List 2 to 4 attributes; each category must name the "
            "attribute it implements.\n"
            f'{_JSON_RULES} Shape: {{"attributes": [{{"name": "...", '
            '"rationale": "..."}], "categories": [{"name": "...", '
            '"description": "...", "from_attribute": "...", '
            '"ideas": [{"name": "...", "description": "..."}]}]} '
            "where every from_attribute exactly matches a listed attribute name."
        )
    if op is OpKind.DIAGNOSE_RISKS:
        return (
            f'Identify 2 to 5 important potential drawbacks of the idea "{focus_name}" '
            "so the designer can judge whether to pivot, iterate, or double down.\n"
            f'{_JSON_RULES} Shape: {{"risks": [{{"name": "...", "description": "..."}}]}}'
        )
    if op is OpKind.MITIGATE_RISK:
        return (
            f'Suggest 2 to 4 mitigation strategies or workarounds for the risk "{focus_name}".\n'
            f'{_JSON_RULES} Shape: {{"mitigations": [{{"name": "...", "description": "..."}}]}}'
        )
    if op is OpKind.ANSWER_QUESTION:
        return (
            "Answer the designer's question concisely, in at most 1200 "
            "characters, grounded in the design task and the focus path.\n"
            'Reply with exactly one JSON object and no other text. Shape: {"answer": "..."}'
        )
    raise AssertionError(op)


def render_prompt(op: OpKind, context: SteeringContext) -> str:
    """Deterministic prompt text; byte-identical for identical inputs."""
    if op is OpKind.ANSWER_QUESTION and not (context.question_text or "").strip():
        raise MissingQuestionError("AnswerQuestion needs a question in the context")
    if op is not OpKind.ANSWER_QUESTION and context.question_text is not None:
        raise MissingQuestionError(f"{op.value} does not take a question")
    return "\n\n".join([_ROLE, render_context_block(context), _instruction(op, context)])


# --- reply parsing ----------------------------------------------------------


def _candidate_documents(raw: str):
    text = raw.strip()
    if text:
        yield text
    # fenced blocks, with or without a language tag
    pos = 0
    while True:
        start = raw.find("```", pos)
        if start < 0:
            break
        newline = raw.find("\n", start)
        end = raw.find("```", start + 3)
        if end < 0:
            break
        if 0 <= newline < end:
            yield raw[newline + 1 : end].strip()
        else:
            yield raw[start + 3 : end].strip()
        pos = end + 3
    # balanced top-level brace slices, left to right
    depth = 0
    begin = -1
    in_string = False
    escape = False
    for i, ch in enumerate(raw):
        if in_string:
            if escape:
                escape = False
            elif ch == "\\":
                escape = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"' and depth > 0:
            in_string = True
        elif ch == "{":
            if depth == 0:
                begin = i
            depth += 1
        elif ch == "}" and depth > 0:
            depth -= 1
            if depth == 0 and begin >= 0:
                yield raw[begin : i + 1]
                begin = -1


def _decode_document(raw: str):
    decoded = None
    for candidate in _candidate_documents(raw):
        try:
            decoded = json.loads(candidate)
        except (json.JSONDecodeError, RecursionError):
            continue
        return decoded
    raise DecodeError("no JSON document found in reply")


def _string(value, path: str, *, max_len: int | None = NAME_MAX_CHARS) -> str:
    if not isinstance(value, str):
        raise SchemaError(f"expected a string at {path}", path)
    trimmed = value.strip()
    if not trimmed:
        raise SchemaError(f"empty string at {path}", path)
    if max_len is not None and len(trimmed) > max_len:
        raise SchemaError(f"string at {path} exceeds {max_len} chars", path)
    return trimmed


def _list_of(value, path: str, bounds: tuple[int, int]) -> list:
    if not isinstance(value, list):
        raise SchemaError(f"expected a list at {path}", path)
    low, high = bounds
    if not (low <= len(value) <= high):
        raise BoundsError(
            f"{path} has {len(value)} items, expected {low} to {high}", path
        )
    return value


def _obj(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise SchemaError(f"expected an object at {path}", path)
    return value


def _get(obj: dict, key: str, path: str):
    if key not in obj:
        raise SchemaError(f"missing field {path}.{key}", f"{path}.{key}")
    return obj[key]


def _parse_ideas(obj: dict, path: str, bounds: tuple[int, int]) -> tuple[IdeaItem, ...]:
    ideas = _list_of(_get(obj, "ideas", path), f"{path}.ideas", bounds)
    out = []
    for j, raw_idea in enumerate(ideas):
        ipath = f"{path}.ideas[{j}]"
        idea = _obj(raw_idea, ipath)
        out.append(
            IdeaItem(
                name=_string(_get(idea, "name", ipath), f"{ipath}.name"),
                description=_string(
                    _get(idea, "description", ipath), f"{ipath}.description", max_len=None
                ),
            )
        )
    return tuple(out)


def _parse_category_list(
    doc: dict, op: OpKind, *, with_attribute: bool
) -> tuple[CategoryBlock, ...]:
    bounds = BOUNDS[op]
    categories = _list_of(_get(doc, "categories", "$"), "$.categories", bounds["categories"])
    out = []
    for i, raw_cat in enumerate(categories):
        path = f"$.categories[{i}]"
        cat = _obj(raw_cat, path)
        from_attribute = None
        if with_attribute:
            from_attribute = _string(_get(cat, "from_attribute", path), f"{path}.from_attribute")
        out.append(
            CategoryBlock(
                name=_string(_get(cat, "name", path), f"{path}.name"),
                description=_string(
                    _get(cat, "description", path), f"{path}.description", max_len=None
                ),
                ideas=_parse_ideas(cat, path, bounds["ideas"]),
                from_attribute=from_attribute,
            )
        )
    return tuple(out)


def _parse_named_list(doc: dict, key: str, bounds: tuple[int, int]) -> tuple[NamedItem, ...]:
    items = _list_of(_get(doc, key, "$"), f"$.{key}", bounds)
    out = []
    for i, raw_item in enumerate(items):
        path = f"$.{key}[{i}]"
        item = _obj(raw_item, path)
        out.append(
            NamedItem(
                name=_string(_get(item, "name", path), f"{path}.name"),
                description=_string(
                    _get(item, "description", path), f"{path}.description", max_len=None
                ),
            )
        )
    return tuple(out)


def parse_reply(
    op: OpKind, raw: str, *, answer_max_chars: int = DEFAULT_CONFIG.answer_max_chars
):
    """Strip prose and fences, decode one JSON document, validate its shape.

    Raises DecodeError when nothing decodes, SchemaError for shape problems
    (with the offending field path), BoundsError for out-of-range list
    lengths. AnswerQuestion replies longer than the cap are truncated, not
    rejected.
    """
    doc = _decode_document(raw)
    doc = _obj(doc, "$")

    if op in (OpKind.INITIALIZE_SPACE, OpKind.EXPAND_CATEGORY):
        return CategoriesPayload(_parse_category_list(doc, op, with_attribute=False))
    if op is OpKind.FIND_SIMILAR:
        bounds = BOUNDS[op]
        attrs_raw = _list_of(_get(doc, "attributes", "$"), "$.attributes", bounds["attributes"])
        attributes = []
        for i, raw_attr in enumerate(attrs_raw):
            path = f"$.attributes[{i}]"
            attr = _obj(raw_attr, path)
            attributes.append(
                AttributeItem(
                    name=_string(_get(attr, "name", path), f"{path}.name"),
                    rationale=_string(
                        _get(attr, "rationale", path), f"{path}.rationale", max_len=None
                    ),
                )
            )
        categories = _parse_category_list(doc, op, with_attribute=True)
        known = {normalize_name(a.name) for a in attributes}
        for i, cat in enumerate(categories):
            if normalize_name(cat.from_attribute or "") not in known:
                raise SchemaError(
                    f"from_attribute {cat.from_attribute!r} does not match any listed attribute",
                    f"$.categories[{i}].from_attribute",
                )
        return FindSimilarPayload(tuple(attributes), categories)
    if op is OpKind.DIAGNOSE_RISKS:
        return RisksPayload(_parse_named_list(doc, "risks", BOUNDS[op]["risks"]))
    if op is OpKind.MITIGATE_RISK:
        return MitigationsPayload(
            _parse_named_list(doc, "mitigations", BOUNDS[op]["mitigations"])
        )
    if op is OpKind.ANSWER_QUESTION:
        answer = _string(_get(doc, "answer", "$"), "$.answer", max_len=None)
        if len(answer) > answer_max_chars:
            return AnswerPayload(answer[:answer_max_chars], truncated=True)
        return AnswerPayload(answer)
    raise AssertionError(op)


# --- execution ---------------------------------------------------------------


@dataclass
class ModelExchange:
    """Record of one orchestrated round-trip (including retries)."""

    op: OpKind
    context: SteeringContext
    rendered_prompt: str
    raw_replies: list[str]
    parsed: Optional[ReplyPayload]
    attempts: int
    provider_id: str
    duration_ms: int
    answer_truncated: bool = False


def exchange_digest(rendered_prompt: str, final_raw: str) -> str:
    """64-bit content hash of prompt + final reply, as 16 hex chars."""
    h = hashlib.blake2b(digest_size=8)
    h.update(rendered_prompt.encode("utf-8"))
    h.update(b"\x00")
    h.update(final_raw.encode("utf-8"))
    return h.hexdigest()


_LEGAL_FOCUS: dict[OpKind, frozenset[NodeKind]] = {
    OpKind.INITIALIZE_SPACE: frozenset({NodeKind.TASK}),
    OpKind.EXPAND_CATEGORY: frozenset({NodeKind.CATEGORY}),
    OpKind.FIND_SIMILAR: frozenset({NodeKind.IDEA}),
    OpKind.DIAGNOSE_RISKS: frozenset({NodeKind.IDEA}),
    OpKind.MITIGATE_RISK: frozenset({NodeKind.RISK}),
    # The Asks edge may leave any node except Question/Answer.
    OpKind.ANSWER_QUESTION: frozenset(
        set(NodeKind) - {NodeKind.QUESTION, NodeKind.ANSWER}
    ),
}


def _clip_name(text: str) -> str:
    collapsed = " ".join(text.split())
    if len(collapsed) <= NAME_MAX_CHARS:
        return collapsed
    return collapsed[: NAME_MAX_CHARS - 3] + "..."


def _utcnow() -> datetime:
    return datetime.now(timezone.utc)


def _batch_for_payload(
    op: OpKind,
    payload,
    graph: DesignGraph,
    focus: IdeationNode,
    question: str | None,
    created_by_event: EventSeq,
    now: datetime,
) -> tuple[list[IdeationNode], list[Edge]]:
    """Map a validated payload onto new System-provenance nodes and edges.

    Graph-aware: categories merge into existing ones on normalized-name
    match, ideas already present in their category are skipped, and an
    Inspires edge into a merged category is dropped when that category is
    an ancestor of the focus (it would close a directed cycle). The result
    always applies cleanly to the graph it was generated from.
    """
    nodes: list[IdeationNode] = []
    edges: list[Edge] = []

    def make(kind: NodeKind, name: str, description: str, provenance=Provenance.SYSTEM):
        node = IdeationNode(
            id=new_id(),
            kind=kind,
            name=name,
            description=description,
            provenance=provenance,
            created_at=now,
            created_by_event=created_by_event,
        )
        nodes.append(node)
        return node

    if op is OpKind.DIAGNOSE_RISKS:
        for item in payload.risks:
            risk = make(NodeKind.RISK, item.name, item.description)
            edges.append(Edge(focus.id, EdgeKind.FLAGS_RISK, risk.id))
        return nodes, edges

    if op is OpKind.MITIGATE_RISK:
        for item in payload.mitigations:
            mit = make(NodeKind.MITIGATION, item.name, item.description)
            edges.append(Edge(focus.id, EdgeKind.MITIGATES, mit.id))
        return nodes, edges

    if op is OpKind.ANSWER_QUESTION:
        assert question is not None
        qname = question if len(question) <= NAME_MAX_CHARS else _clip_name(question)
        qnode = make(NodeKind.QUESTION, qname, question, provenance=Provenance.USER)
        edges.append(Edge(focus.id, EdgeKind.ASKS, qnode.id))
        anode = make(NodeKind.ANSWER, _clip_name(payload.answer), payload.answer)
        edges.append(Edge(qnode.id, EdgeKind.ANSWERS, anode.id))
        return nodes, edges

    # Category-producing operations.
    attribute_ids: dict[str, NodeId] = {}
    if op is OpKind.FIND_SIMILAR:
        for attr in payload.attributes:
            node = make(NodeKind.ATTRIBUTE, attr.name, attr.rationale)
            edges.append(Edge(focus.id, EdgeKind.ABSTRACTS, node.id))
            attribute_ids[normalize_name(attr.name)] = node.id

    existing_categories = graph.category_index()
    batch_categories: dict[str, NodeId] = {}
    batch_idea_names: dict[NodeId, set[str]] = {}
    for block in payload.categories:
        norm = normalize_name(block.name)
        category_id = existing_categories.get(norm) or batch_categories.get(norm)
        merged_into_graph = category_id in graph.nodes if category_id else False
        if category_id is None:
            cat = make(NodeKind.CATEGORY, block.name, block.description)
            category_id = cat.id
            batch_categories[norm] = category_id
            edges.append(Edge(graph.root, EdgeKind.CONTAINS, category_id))
        if op is OpKind.FIND_SIMILAR:
            attr_id = attribute_ids[normalize_name(block.from_attribute or "")]
            cycle = merged_into_graph and graph.reaches(category_id, focus.id)
            if not cycle:
                edges.append(Edge(attr_id, EdgeKind.INSPIRES, category_id))
        taken = batch_idea_names.setdefault(
            category_id,
            graph.idea_names_under(category_id) if merged_into_graph else set(),
        )
        for item in block.ideas:
            idea_norm = normalize_name(item.name)
            if idea_norm in taken:
                continue
            taken.add(idea_norm)
            idea = make(NodeKind.IDEA, item.name, item.description)
            edges.append(Edge(category_id, EdgeKind.CONTAINS, idea.id))
    return nodes, edges


def _repair_prompt(base: str, error: ParseError) -> str:
    return (
        f"{base}\n\nYour previous reply could not be used: "
        f"{type(error).__name__} at {error.path}: {error}. "
        "Reply again with exactly one valid JSON object in the required "
        "format and no other text."
    )


def execute(
    op: OpKind,
    graph: DesignGraph,
    pins: PinSet,
    focus: NodeId,
    question: str | None,
    provider: ProviderPort,
    *,
    config: GenerationConfig = DEFAULT_CONFIG,
    next_event_seq: EventSeq = 0,
    clock: Callable[[], datetime] = _utcnow,
) -> tuple[tuple[list[IdeationNode], list[Edge]], ModelExchange]:
    """Run one opt-in operation against the provider.

    Calls the provider at least once; malformed replies trigger a repair
    prompt with the validation error appended, up to config.max_retries
    extra attempts. Returns the node batch plus the full exchange record.
    """
    focus_node = graph.node(focus)
    if focus_node.kind not in _LEGAL_FOCUS[op]:
        raise PreconditionError(
            f"{op.value} cannot target a {focus_node.kind.value} node"
        )
    if op is OpKind.ANSWER_QUESTION:
        if question is None or not question.strip():
            raise MissingQuestionError("AnswerQuestion needs a non-empty question")
        question = question.strip()
    elif question is not None:
        raise PreconditionError(f"{op.value} does not take a question")

    context = assemble_context(
        graph, pins, focus, question, budget=config.context_budget
    )
    prompt = render_prompt(op, context)
    params = ProviderParams(
        model_name=config.model_name,
        temperature=(
            config.answer_temperature
            if op is OpKind.ANSWER_QUESTION
            else config.gen_temperature
        ),
        max_output_chars=config.max_output_chars,
        op_name=op.value,
        seed_name=normalize_name(focus_node.name),
    )

    started = time.monotonic()
    raw_replies: list[str] = []
    payload = None
    last_parse_error: ParseError | None = None
    last_transport_error: ProviderTransportError | None = None
    attempts = 0
    max_attempts = 1 + config.max_retries
    current_prompt = prompt
    while attempts < max_attempts:
        attempts += 1
        try:
            raw = provider.complete(current_prompt, params)
        except ProviderTransportError as exc:
            last_transport_error = exc
            continue
        last_transport_error = None
        raw_replies.append(raw)
        try:
            candidate = parse_reply(op, raw, answer_max_chars=config.answer_max_chars)
            if op is OpKind.EXPAND_CATEGORY:
                got = normalize_name(candidate.categories[0].name)
                want = normalize_name(focus_node.name)
                if got != want:
                    raise SchemaError(
                        f"category name {got!r} must exactly match the seed {want!r}",
                        "$.categories[0].name",
                    )
        except ParseError as exc:
            last_parse_error = exc
            current_prompt = _repair_prompt(prompt, exc)
            continue
        payload = candidate
        break

    duration_ms = int((time.monotonic() - started) * 1000)
    if payload is None:
        if last_transport_error is not None:
            raise ProviderError(
                f"provider failed after {attempts} attempts: {last_transport_error}",
                attempts,
            )
        raise GenerationError(
            f"reply still invalid after {attempts} attempts: {last_parse_error}",
            raw_replies,
            attempts,
        )

    batch = _batch_for_payload(
        op, payload, graph, focus_node, question, next_event_seq, clock()
    )
    exchange = ModelExchange(
        op=op,
        context=context,
        rendered_prompt=prompt,
        raw_replies=raw_replies,
        parsed=payload,
        attempts=attempts,
        provider_id=getattr(provider, "provider_id", "unknown"),
        duration_ms=duration_ms,
        answer_truncated=isinstance(payload, AnswerPayload) and payload.truncated,
    )
    return batch, exchange
