"""Plain-text session scripts: one action per line, run against an engine.

Grammar (names resolve by normalized name or node id; ambiguity is an error):

    task <text>
    op <OpKind> <node-name-or-id>
    op AnswerQuestion <node-name-or-id> :: <question text>
    user <Idea|Mitigation> <parent-name> :: <name> :: <description>
    pin <name>
    unpin <name>
    show [at <seq>]

Blank lines and lines starting with # are skipped.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .engine import IdeationEngine, classify_error, resolve_node, snapshot_to_wire
from .graph import NodeKind
from .orchestrator import OpKind, op_kind_from_name
from .store import SessionSnapshot


class ScriptParseError(Exception):
    def __init__(self, message: str, line_no: int):
        super().__init__(message)
        self.line_no = line_no


class StepFailure(Exception):
    def __init__(self, index: int, code: str, message: str):
        super().__init__(message)
        self.index = index
        self.code = code


@dataclass(frozen=True)
class ScriptStep:
    line_no: int
    kind: str
    args: dict = field(default_factory=dict)


def parse_script(text: str) -> list[ScriptStep]:
    steps: list[ScriptStep] = []
    saw_task = False
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head, _, rest = line.partition(" ")
        rest = rest.strip()
        if head == "task":
            if saw_task:
                raise ScriptParseError("only one task line per script", line_no)
            if not rest:
                raise ScriptParseError("task needs text", line_no)
            saw_task = True
            steps.append(ScriptStep(line_no, "task", {"task": rest}))
            continue
        if not saw_task:
            raise ScriptParseError("the first step must be `task <text>`", line_no)
        if head == "op":
            op_name, _, remainder = rest.partition(" ")
            try:
                op = op_kind_from_name(op_name)
            except ValueError as exc:
                raise ScriptParseError(str(exc), line_no) from exc
            remainder = remainder.strip()
            question = None
            if op is OpKind.ANSWER_QUESTION:
                target, sep, question = remainder.partition("::")
                if not sep or not question.strip():
                    raise ScriptParseError(
                        "AnswerQuestion syntax: op AnswerQuestion <node> :: <question>",
                        line_no,
                    )
                target, question = target.strip(), question.strip()
            else:
                target = remainder
            if not target:
                raise ScriptParseError(f"op {op.value} needs a target node", line_no)
            steps.append(
                ScriptStep(line_no, "op", {"op": op, "target": target, "question": question})
            )
        elif head == "user":
            kind_name, _, remainder = rest.partition(" ")
            if kind_name not in (NodeKind.IDEA.value, NodeKind.MITIGATION.value):
                raise ScriptParseError(
                    "user syntax: user <Idea|Mitigation> <parent> :: <name> :: <description>",
                    line_no,
                )
            parts = [p.strip() for p in remainder.split("::")]
            if len(parts) != 3 or not all(parts):
                raise ScriptParseError(
                    "user syntax: user <Idea|Mitigation> <parent> :: <name> :: <description>",
                    line_no,
                )
            steps.append(
                ScriptStep(
                    line_no,
                    "user",
                    {"kind": kind_name, "parent": parts[0], "name": parts[1], "description": parts[2]},
                )
            )
        elif head in ("pin", "unpin"):
            if not rest:
                raise ScriptParseError(f"{head} needs a node name", line_no)
            steps.append(ScriptStep(line_no, head, {"target": rest}))
        elif head == "show":
            at = None
            if rest:
                tokens = rest.split()
                if len(tokens) != 2 or tokens[0] != "at" or not tokens[1].isdigit():
                    raise ScriptParseError("show syntax: show [at <seq>]", line_no)
                at = int(tokens[1])
            steps.append(ScriptStep(line_no, "show", {"at": at}))
        else:
            raise ScriptParseError(f"unknown directive {head!r}", line_no)
    if not steps:
        raise ScriptParseError("script has no steps", 1)
    return steps


def summarize(snapshot: SessionSnapshot) -> str:
    counts = []
    for kind in NodeKind:
        n = len(snapshot.graph.nodes_of_kind(kind))
        if n:
            counts.append(f"{n} {kind.value}")
    pins = len(snapshot.pins.pinned)
    return (
        f"{', '.join(counts)} | {len(snapshot.graph.edges)} edges | "
        f"{pins} pinned | seq {snapshot.last_seq}"
    )


def run_steps(
    steps: list[ScriptStep],
    engine: IdeationEngine,
    emit: Callable[[str], None],
) -> SessionSnapshot:
    """Execute parsed steps in order; raises StepFailure on the first error."""
    session_id: str | None = None
    for index, step in enumerate(steps):
        try:
            if step.kind == "task":
                session_id, snapshot = engine.create_session(step.args["task"])
                emit(f"[{index}] task {step.args['task']!r} -> session {session_id}")
                continue
            assert session_id is not None
            if step.kind == "op":
                snapshot = engine.snapshot(session_id)
                target = resolve_node(snapshot, step.args["target"])
                result = engine.run_op(
                    session_id, step.args["op"], target.id, step.args["question"]
                )
                note = (
                    f"+{len(result.added_nodes)} nodes +{len(result.added_edges)} edges "
                    f"(attempts={result.exchange.attempts})"
                )
                if result.answer:
                    note += f' answer="{result.answer[:60]}..."'
                emit(f"[{index}] op {step.args['op'].value} {target.name!r} -> {note}")
            elif step.kind == "user":
                snapshot = engine.snapshot(session_id)
                parent = resolve_node(snapshot, step.args["parent"])
                node, _ = engine.add_user_node(
                    session_id,
                    parent.id,
                    step.args["kind"],
                    step.args["name"],
                    step.args["description"],
                )
                emit(f"[{index}] user {step.args['kind']} {node.name!r} under {parent.name!r}")
            elif step.kind in ("pin", "unpin"):
                snapshot = engine.snapshot(session_id)
                target = resolve_node(snapshot, step.args["target"])
                pins = (
                    engine.pin(session_id, target.id)
                    if step.kind == "pin"
                    else engine.unpin(session_id, target.id)
                )
                emit(f"[{index}] {step.kind} {target.name!r} -> {len(pins)} pinned")
            elif step.kind == "show":
                snapshot = engine.snapshot(session_id, at=step.args["at"])
                emit(f"[{index}] show -> {summarize(snapshot)}")
        except Exception as exc:
            classified = classify_error(exc)
            if classified is None:
                raise
            _, code = classified
            raise StepFailure(index, code, str(exc)) from exc
    assert session_id is not None
    return engine.snapshot(session_id)


def run_script_text(
    text: str, engine: IdeationEngine, emit: Callable[[str], None]
) -> tuple[SessionSnapshot, dict]:
    """Parse and run; returns the final snapshot and its wire form."""
    steps = parse_script(text)
    snapshot = run_steps(steps, engine, emit)
    return snapshot, snapshot_to_wire(snapshot)
