"""Shared builders, oracles, and harnesses for the test suite."""

from __future__ import annotations

import threading
import time
from datetime import datetime, timezone

from flexmind.graph import (
    DesignGraph,
    Edge,
    EdgeKind,
    IdeationNode,
    NodeKind,
    PinSet,
    Provenance,
    add_nodes,
    new_graph,
    new_id,
)

EPOCH = datetime(2026, 1, 1, tzinfo=timezone.utc)

TASK_TEXT = "cleaning laundry with less water"
BASELINE_TASK_TEXT = "minimizing accidents from people walking and texting on a cell phone"
QUESTION_TEXT = (
    "If some lemon solution remains on the fabric, will it enhance or interfere with detergent?"
)
USER_MITIGATION_NAME = "a hydrogen peroxide and lemon mix spray"
USER_MITIGATION_DESC = (
    "Substitute lemon juice with a mild oxidizing agent while keeping lemon "
    "essential oil for a pleasant scent."
)

# Hand-fold oracle for the full walkthrough, derived from the bundled
# fixture replies. 35 nodes, 36 edges, 2 pins.
WALKTHROUGH_NODE_COUNTS = {
    "Task": 1,
    "Category": 6,
    "Idea": 18,
    "Attribute": 2,
    "Risk": 3,
    "Mitigation": 3,
    "Question": 1,
    "Answer": 1,
}

_T = TASK_TEXT
WALKTHROUGH_EDGE_NAMES = sorted(
    [
        (_T, "Contains", "Chemical Deodorizers"),
        (_T, "Contains", "Mechanical Agitation"),
        (_T, "Contains", "Steam Refresh"),
        (_T, "Contains", "Water Recycling"),
        (_T, "Contains", "Targeted Stain Treatment"),
        (_T, "Contains", "Natural Acidic Boost Appear"),
        ("Chemical Deodorizers", "Contains", "Lemon Spray"),
        ("Chemical Deodorizers", "Contains", "Baking Soda Pouch"),
        ("Chemical Deodorizers", "Contains", "Enzyme Pre-Treat Gel"),
        ("Chemical Deodorizers", "Contains", "Vinegar Mist"),
        ("Chemical Deodorizers", "Contains", "Citric Acid Sachet"),
        ("Mechanical Agitation", "Contains", "Ultrasonic Basin"),
        ("Mechanical Agitation", "Contains", "Brush-and-Vacuum Dock"),
        ("Mechanical Agitation", "Contains", "High-Spin Refresh Drum"),
        ("Steam Refresh", "Contains", "Handheld Steam Wand"),
        ("Steam Refresh", "Contains", "Closet Steam Cabinet"),
        ("Steam Refresh", "Contains", "Steam-Assist Ironing Pad"),
        ("Water Recycling", "Contains", "Greywater Loop Washer"),
        ("Water Recycling", "Contains", "Two-Stage Filter Bucket"),
        ("Water Recycling", "Contains", "Condensate Capture Dryer"),
        ("Targeted Stain Treatment", "Contains", "pen-style concentrate applicator"),
        ("Targeted Stain Treatment", "Contains", "Micro-Dose Foam Dots"),
        ("Natural Acidic Boost Appear", "Contains", "Citric Soak Tablet"),
        ("Natural Acidic Boost Appear", "Contains", "Lemon Peel Infusion"),
        ("Lemon Spray", "Abstracts", "Targeted Application"),
        ("Lemon Spray", "Abstracts", "Natural Acidity"),
        ("Targeted Application", "Inspires", "Targeted Stain Treatment"),
        ("Natural Acidity", "Inspires", "Natural Acidic Boost Appear"),
        ("Lemon Spray", "FlagsRisk", "limited cleaning"),
        ("Lemon Spray", "FlagsRisk", "fabric discoloration"),
        ("Lemon Spray", "FlagsRisk", "sticky residue"),
        ("limited cleaning", "Mitigates", "improving the mist technology"),
        ("limited cleaning", "Mitigates", "add a complementary cleaning agent"),
        ("limited cleaning", "Mitigates", USER_MITIGATION_NAME),
        ("pen-style concentrate applicator", "Asks", "<Question>"),
        ("<Question>", "Answers", "<Answer>"),
    ]
)

WALKTHROUGH_PIN_NAMES = ["pen-style concentrate applicator", USER_MITIGATION_NAME]

WALKTHROUGH_EVENT_KINDS = [
    "SessionCreated",
    "GenerationCompleted",  # InitializeSpace
    "GenerationCompleted",  # FindSimilar
    "NodePinned",
    "GenerationCompleted",  # AnswerQuestion
    "GenerationCompleted",  # DiagnoseRisks
    "GenerationCompleted",  # MitigateRisk
    "UserNodeAdded",
    "NodePinned",
]


def canonical_edges(graph: DesignGraph) -> list[tuple[str, str, str]]:
    """Edges as (source name, kind, target name); Q/A nodes by kind."""

    def label(node_id: str) -> str:
        node = graph.nodes[node_id]
        if node.kind in (NodeKind.QUESTION, NodeKind.ANSWER):
            return f"<{node.kind.value}>"
        return node.name

    return sorted(
        (label(e.source), e.kind.value, label(e.target)) for e in graph.edges
    )


def random_graph_ops(rng, steps: int, provider) -> "DesignGraph":
    """In-memory random legal operation sequence through the orchestrator.

    Every generated batch is applied with add_nodes, so an illegal batch
    surfaces as an exception; the caller checks invariants on the result.
    """
    from flexmind.graph import PinSet, add_nodes
    from flexmind.orchestrator import OpKind, execute

    task = make_node(NodeKind.TASK, f"random task {rng.randrange(10**9)}")
    graph = new_graph(task)
    pins = PinSet()
    seq = 0
    counter = 0
    for _ in range(steps):
        seq += 1
        counter += 1
        categories = graph.nodes_of_kind(NodeKind.CATEGORY)
        ideas = graph.nodes_of_kind(NodeKind.IDEA)
        risks = graph.nodes_of_kind(NodeKind.RISK)
        pool = ["init"]
        if categories:
            pool += ["expand", "user_idea"]
        if ideas:
            pool += ["similar", "risks", "ask", "ask"]
        if risks:
            pool += ["mitigate", "user_mitigation"]
        pinnable = [
            n
            for n in graph.nodes.values()
            if n.kind in (NodeKind.IDEA, NodeKind.MITIGATION)
        ]
        if pinnable:
            pool.append("pin")
        if pins.pinned:
            pool.append("unpin")
        action = rng.choice(pool)
        if action == "user_idea":
            parent = rng.choice(categories)
            node = make_node(
                NodeKind.IDEA, f"user idea {counter}", prov=Provenance.USER, seq=seq
            )
            graph = add_nodes(
                graph, [node], [Edge(parent.id, EdgeKind.CONTAINS, node.id)]
            )
            continue
        if action == "user_mitigation":
            parent = rng.choice(risks)
            node = make_node(
                NodeKind.MITIGATION,
                f"user mitigation {counter}",
                prov=Provenance.USER,
                seq=seq,
            )
            graph = add_nodes(
                graph, [node], [Edge(parent.id, EdgeKind.MITIGATES, node.id)]
            )
            continue
        if action == "pin":
            pins = pins.with_pin(rng.choice(pinnable).id)
            continue
        if action == "unpin":
            pins = pins.without(rng.choice(list(pins.pinned)))
            continue
        question = None
        if action == "init":
            op, focus = OpKind.INITIALIZE_SPACE, graph.root
        elif action == "expand":
            op, focus = OpKind.EXPAND_CATEGORY, rng.choice(categories).id
        elif action == "similar":
            op, focus = OpKind.FIND_SIMILAR, rng.choice(ideas).id
        elif action == "risks":
            op, focus = OpKind.DIAGNOSE_RISKS, rng.choice(ideas).id
        elif action == "mitigate":
            op, focus = OpKind.MITIGATE_RISK, rng.choice(risks).id
        else:
            sources = [
                n
                for n in graph.nodes.values()
                if n.kind not in (NodeKind.QUESTION, NodeKind.ANSWER)
            ]
            op, focus = OpKind.ANSWER_QUESTION, rng.choice(sources).id
            question = f"what about detail {counter}?"
        (nodes, edges), _ = execute(
            op, graph, pins, focus, question, provider, next_event_seq=seq
        )
        graph = add_nodes(graph, nodes, edges)
    return graph


def random_event_log(rng) -> list:
    """A legal random event log built in memory (no store involved)."""
    from datetime import timedelta

    from flexmind.store import SessionEvent, edge_to_wire, node_to_wire, replay

    clock = EPOCH + timedelta(seconds=rng.randrange(10**7))

    def tick():
        nonlocal clock
        clock += timedelta(seconds=rng.randrange(1, 120), microseconds=rng.randrange(10**6))
        return clock

    root_id = new_id()
    events = [
        SessionEvent(
            0,
            tick(),
            "SessionCreated",
            {"task": f"random task {rng.randrange(10**9)}", "root_id": root_id, "version": 1},
        )
    ]
    counter = 0
    for seq in range(1, rng.randrange(2, 16)):
        snapshot = replay(events)
        graph, pins = snapshot.graph, snapshot.pins
        categories = graph.nodes_of_kind(NodeKind.CATEGORY)
        ideas = graph.nodes_of_kind(NodeKind.IDEA)
        pool = ["generate_categories", "failed"]
        if categories:
            pool.append("user_idea")
        if ideas:
            pool += ["generate_risk", "pin"]
        if pins.pinned:
            pool.append("unpin")
        action = rng.choice(pool)
        counter += 1
        at = tick()

        def wire(kind, name, prov=Provenance.SYSTEM):
            node = IdeationNode(
                id=new_id(),
                kind=kind,
                name=name,
                description=f"{name} description",
                provenance=prov,
                created_at=at,
                created_by_event=seq,
            )
            return node

        if action == "generate_categories":
            cat = wire(NodeKind.CATEGORY, f"category {counter}")
            idea_nodes = [
                wire(NodeKind.IDEA, f"idea {counter}-{j}") for j in range(rng.randrange(1, 4))
            ]
            nodes = [cat] + idea_nodes
            edges = [Edge(root_id, EdgeKind.CONTAINS, cat.id)] + [
                Edge(cat.id, EdgeKind.CONTAINS, n.id) for n in idea_nodes
            ]
            payload = {
                "op": "InitializeSpace",
                "focus": root_id,
                "nodes": [node_to_wire(n) for n in nodes],
                "edges": [edge_to_wire(e) for e in edges],
                "exchange_digest": f"{rng.getrandbits(64):016x}",
            }
            events.append(SessionEvent(seq, at, "GenerationCompleted", payload))
        elif action == "generate_risk":
            idea = rng.choice(ideas)
            risk = wire(NodeKind.RISK, f"risk {counter}")
            payload = {
                "op": "DiagnoseRisks",
                "focus": idea.id,
                "nodes": [node_to_wire(risk)],
                "edges": [edge_to_wire(Edge(idea.id, EdgeKind.FLAGS_RISK, risk.id))],
                "exchange_digest": f"{rng.getrandbits(64):016x}",
            }
            events.append(SessionEvent(seq, at, "GenerationCompleted", payload))
        elif action == "user_idea":
            parent = rng.choice(categories)
            node = wire(NodeKind.IDEA, f"user idea {counter}", prov=Provenance.USER)
            payload = {
                "node": node_to_wire(node),
                "edges": [edge_to_wire(Edge(parent.id, EdgeKind.CONTAINS, node.id))],
            }
            events.append(SessionEvent(seq, at, "UserNodeAdded", payload))
        elif action == "pin":
            target = rng.choice(ideas)
            events.append(SessionEvent(seq, at, "NodePinned", {"node": target.id}))
        elif action == "unpin":
            target = rng.choice(list(pins.pinned))
            events.append(SessionEvent(seq, at, "NodeUnpinned", {"node": target}))
        else:
            events.append(
                SessionEvent(
                    seq,
                    at,
                    "GenerationFailed",
                    {
                        "op": "FindSimilar",
                        "focus": root_id,
                        "error_class": rng.choice(
                            ["generation_failed", "provider_unavailable"]
                        ),
                        "attempts": rng.randrange(1, 4),
                    },
                )
            )
    return events


def random_engine_actions(engine, rng, steps: int, *, with_ops: bool = True) -> int:
    """Random legal actions on a fresh engine session; returns summed attempts."""
    from flexmind.engine import resolve_node
    from flexmind.orchestrator import OpKind

    sid, _ = engine.create_session(f"random task {rng.randrange(10**9)}")
    attempts = 0
    counter = 0
    for _ in range(steps):
        counter += 1
        snapshot = engine.snapshot(sid)
        graph = snapshot.graph
        categories = graph.nodes_of_kind(NodeKind.CATEGORY)
        ideas = graph.nodes_of_kind(NodeKind.IDEA)
        risks = graph.nodes_of_kind(NodeKind.RISK)
        pool = []
        if with_ops:
            pool.append(("op", OpKind.INITIALIZE_SPACE, graph.root, None))
            if categories:
                pool.append(("op", OpKind.EXPAND_CATEGORY, rng.choice(categories).id, None))
            if ideas:
                idea = rng.choice(ideas)
                pool.append(("op", OpKind.FIND_SIMILAR, idea.id, None))
                pool.append(("op", OpKind.DIAGNOSE_RISKS, idea.id, None))
                pool.append(
                    ("op", OpKind.ANSWER_QUESTION, idea.id, f"why {counter}?")
                )
            if risks:
                pool.append(("op", OpKind.MITIGATE_RISK, rng.choice(risks).id, None))
        if categories:
            pool.append(("user_idea", rng.choice(categories).id))
        if risks:
            pool.append(("user_mitigation", rng.choice(risks).id))
        pinnable = [
            n
            for n in graph.nodes.values()
            if n.kind in (NodeKind.IDEA, NodeKind.MITIGATION)
            and n.id not in snapshot.pins
        ]
        if pinnable:
            pool.append(("pin", rng.choice(pinnable).id))
        if snapshot.pins.pinned:
            pool.append(("unpin", rng.choice(list(snapshot.pins.pinned))))
        if not pool:
            continue
        action = rng.choice(pool)
        if action[0] == "op":
            result = engine.run_op(sid, action[1], action[2], action[3])
            attempts += result.exchange.attempts
        elif action[0] == "user_idea":
            engine.add_user_node(
                sid, action[1], "Idea", f"user idea {counter}", f"user thought {counter}"
            )
        elif action[0] == "user_mitigation":
            engine.add_user_node(
                sid,
                action[1],
                "Mitigation",
                f"user mitigation {counter}",
                f"user workaround {counter}",
            )
        elif action[0] == "pin":
            engine.pin(sid, action[1])
        else:
            engine.unpin(sid, action[1])
    return attempts


class ServerThread:
    """Serve a FastAPI app from a background uvicorn on an ephemeral port."""

    def __init__(self, app):
        import uvicorn

        config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="warning")
        self.server = uvicorn.Server(config)
        self.thread = threading.Thread(target=self.server.run, daemon=True)
        self.base_url = ""

    def __enter__(self) -> "ServerThread":
        self.thread.start()
        deadline = time.time() + 15
        while not self.server.started:
            if time.time() > deadline:
                raise RuntimeError("uvicorn did not start in time")
            time.sleep(0.01)
        port = self.server.servers[0].sockets[0].getsockname()[1]
        self.base_url = f"http://127.0.0.1:{port}"
        return self

    def __exit__(self, *exc) -> None:
        self.server.should_exit = True
        self.thread.join(timeout=15)


def read_sse_frames(response, *, stop, deadline_s: float = 15.0):
    """Collect SSE frames from a streaming httpx response until stop(frames)."""
    frames: list[dict] = []
    current: dict = {}
    started = time.time()
    for line in response.iter_lines():
        if time.time() - started > deadline_s:
            break
        if line == "":
            if current:
                frames.append(current)
                current = {}
            if stop(frames):
                break
        elif line.startswith(":"):
            current.setdefault("comments", []).append(line)
        elif line.startswith("event:"):
            current["event"] = line[len("event:") :].strip()
        elif line.startswith("data:"):
            current["data"] = line[len("data:") :].strip()
    return frames


def canonical_log(events) -> list[dict]:
    """Event log reduced to an id-free, timestamp-free comparable form."""
    labels: dict[str, tuple[str, str]] = {}

    def label(node_id: str):
        return labels.get(node_id, ("?", node_id[:6]))

    out = []
    for event in events:
        p = event.payload
        if event.kind == "SessionCreated":
            labels[p["root_id"]] = ("Task", p["task"])
            out.append({"kind": event.kind, "task": p["task"]})
        elif event.kind in ("GenerationCompleted", "UserNodeAdded"):
            raw_nodes = p["nodes"] if event.kind == "GenerationCompleted" else [p["node"]]
            for n in raw_nodes:
                display = (
                    f"<{n['kind']}>" if n["kind"] in ("Question", "Answer") else n["name"]
                )
                labels[n["id"]] = (n["kind"], display)
            entry = {
                "kind": event.kind,
                "nodes": sorted(
                    (n["kind"], labels[n["id"]][1], n["provenance"], n["description"])
                    for n in raw_nodes
                ),
                "edges": sorted(
                    (label(e["source"]), e["kind"], label(e["target"]))
                    for e in p["edges"]
                ),
            }
            if event.kind == "GenerationCompleted":
                entry["op"] = p["op"]
                entry["focus"] = label(p["focus"])
                entry["digest"] = p["exchange_digest"]
            out.append(entry)
        elif event.kind in ("NodePinned", "NodeUnpinned"):
            out.append({"kind": event.kind, "node": label(p["node"])})
        elif event.kind == "GenerationFailed":
            out.append(
                {
                    "kind": event.kind,
                    "op": p["op"],
                    "focus": label(p["focus"]),
                    "error_class": p["error_class"],
                    "attempts": p["attempts"],
                }
            )
    return out


def run_walkthrough(engine) -> str:
    """Drive the full walkthrough through an engine; returns the session id."""
    from flexmind.engine import resolve_node
    from flexmind.orchestrator import OpKind

    sid, snapshot = engine.create_session(TASK_TEXT)
    engine.run_op(sid, OpKind.INITIALIZE_SPACE, snapshot.graph.root)
    lemon = resolve_node(engine.snapshot(sid), "Lemon Spray").id
    engine.run_op(sid, OpKind.FIND_SIMILAR, lemon)
    pen = resolve_node(engine.snapshot(sid), "pen-style concentrate applicator").id
    engine.pin(sid, pen)
    engine.run_op(sid, OpKind.ANSWER_QUESTION, pen, QUESTION_TEXT)
    engine.run_op(sid, OpKind.DIAGNOSE_RISKS, lemon)
    risk = resolve_node(engine.snapshot(sid), "limited cleaning").id
    engine.run_op(sid, OpKind.MITIGATE_RISK, risk)
    node, _ = engine.add_user_node(
        sid, risk, "Mitigation", USER_MITIGATION_NAME, USER_MITIGATION_DESC
    )
    engine.pin(sid, node.id)
    return sid


def make_node(
    kind: NodeKind,
    name: str,
    *,
    desc: str | None = None,
    prov: Provenance = Provenance.SYSTEM,
    seq: int = 0,
    node_id: str | None = None,
) -> IdeationNode:
    if desc is None:
        desc = "" if kind is NodeKind.TASK else f"{name} description"
    return IdeationNode(
        id=node_id or new_id(),
        kind=kind,
        name=name,
        description=desc,
        provenance=prov,
        created_at=EPOCH,
        created_by_event=seq,
    )


def build_walkthrough_graph() -> tuple[DesignGraph, PinSet, dict[str, str]]:
    """Hand-built graph mirroring the laundry walkthrough, plus a name->id map.

    Construction order follows the session events: initialize (seq 1),
    similar-ideas expansion (seq 2), question/answer (seq 4), risks (seq 5),
    mitigations (seq 6), user mitigation (seq 7).
    """
    ids: dict[str, str] = {}

    def node(kind, name, seq, prov=Provenance.SYSTEM, desc=None):
        n = make_node(kind, name, seq=seq, prov=prov, desc=desc)
        ids[name] = n.id
        return n

    task = node(NodeKind.TASK, TASK_TEXT, 0)
    graph = new_graph(task)

    cats1 = [
        node(NodeKind.CATEGORY, "Chemical Deodorizers", 1),
        node(NodeKind.CATEGORY, "Mechanical Agitation", 1),
        node(NodeKind.CATEGORY, "Steam Refresh", 1),
        node(NodeKind.CATEGORY, "Water Recycling", 1),
    ]
    ideas1 = {
        "Chemical Deodorizers": ["Lemon Spray", "Baking Soda Pouch", "Enzyme Pre-Treat Gel"],
        "Mechanical Agitation": ["Ultrasonic Basin", "Brush-and-Vacuum Dock", "High-Spin Refresh Drum"],
        "Steam Refresh": ["Handheld Steam Wand", "Closet Steam Cabinet", "Steam-Assist Ironing Pad"],
        "Water Recycling": ["Greywater Loop Washer", "Two-Stage Filter Bucket", "Condensate Capture Dryer"],
    }
    batch_nodes = list(cats1)
    batch_edges = [Edge(task.id, EdgeKind.CONTAINS, c.id) for c in cats1]
    for cat in cats1:
        for idea_name in ideas1[cat.name]:
            idea = node(NodeKind.IDEA, idea_name, 1)
            batch_nodes.append(idea)
            batch_edges.append(Edge(cat.id, EdgeKind.CONTAINS, idea.id))
    graph = add_nodes(graph, batch_nodes, batch_edges)

    attr_targeted = node(NodeKind.ATTRIBUTE, "Targeted Application", 2)
    attr_acid = node(NodeKind.ATTRIBUTE, "Natural Acidity", 2)
    cat_stain = node(NodeKind.CATEGORY, "Targeted Stain Treatment", 2)
    cat_boost = node(NodeKind.CATEGORY, "Natural Acidic Boost Appear", 2)
    sim_ideas = {
        ids["Chemical Deodorizers"]: ["Vinegar Mist", "Citric Acid Sachet"],
        cat_stain.id: ["pen-style concentrate applicator", "Micro-Dose Foam Dots"],
        cat_boost.id: ["Citric Soak Tablet", "Lemon Peel Infusion"],
    }
    batch_nodes = [attr_targeted, attr_acid, cat_stain, cat_boost]
    batch_edges = [
        Edge(ids["Lemon Spray"], EdgeKind.ABSTRACTS, attr_targeted.id),
        Edge(ids["Lemon Spray"], EdgeKind.ABSTRACTS, attr_acid.id),
        Edge(task.id, EdgeKind.CONTAINS, cat_stain.id),
        Edge(task.id, EdgeKind.CONTAINS, cat_boost.id),
        Edge(attr_targeted.id, EdgeKind.INSPIRES, cat_stain.id),
        Edge(attr_acid.id, EdgeKind.INSPIRES, cat_boost.id),
        # No Inspires edge back into "Chemical Deodorizers": it is an
        # ancestor of "Lemon Spray" and the edge would close a cycle.
    ]
    for cat_id, idea_names in sim_ideas.items():
        for idea_name in idea_names:
            idea = node(NodeKind.IDEA, idea_name, 2)
            batch_nodes.append(idea)
            batch_edges.append(Edge(cat_id, EdgeKind.CONTAINS, idea.id))
    graph = add_nodes(graph, batch_nodes, batch_edges)

    question = node(
        NodeKind.QUESTION,
        "If some lemon solution remains on the fabric, will it enhance or interfere with detergent?",
        4,
        prov=Provenance.USER,
        desc="If some lemon solution remains on the fabric, will it enhance or interfere with detergent?",
    )
    ids["question"] = question.id
    answer = node(NodeKind.ANSWER, "Trace citrus residue is compatible with detergent", 4)
    ids["answer"] = answer.id
    graph = add_nodes(
        graph,
        [question, answer],
        [
            Edge(ids["pen-style concentrate applicator"], EdgeKind.ASKS, question.id),
            Edge(question.id, EdgeKind.ANSWERS, answer.id),
        ],
    )

    risks = [
        node(NodeKind.RISK, "limited cleaning", 5),
        node(NodeKind.RISK, "fabric discoloration", 5),
        node(NodeKind.RISK, "sticky residue", 5),
    ]
    graph = add_nodes(
        graph,
        risks,
        [Edge(ids["Lemon Spray"], EdgeKind.FLAGS_RISK, r.id) for r in risks],
    )

    mits = [
        node(NodeKind.MITIGATION, "improving the mist technology", 6),
        node(NodeKind.MITIGATION, "add a complementary cleaning agent", 6),
    ]
    graph = add_nodes(
        graph,
        mits,
        [Edge(ids["limited cleaning"], EdgeKind.MITIGATES, m.id) for m in mits],
    )

    user_mit = node(
        NodeKind.MITIGATION,
        "a hydrogen peroxide and lemon mix spray",
        7,
        prov=Provenance.USER,
    )
    graph = add_nodes(
        graph,
        [user_mit],
        [Edge(ids["limited cleaning"], EdgeKind.MITIGATES, user_mit.id)],
    )

    pins = PinSet().with_pin(ids["pen-style concentrate applicator"]).with_pin(user_mit.id)
    return graph, pins, ids
