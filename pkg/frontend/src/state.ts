// Client-side mirror of the server snapshot. The mirror never invents
// nodes: it only applies full snapshots and event frames received from
// the service, in seq order.

import type { EdgeWire, EventLine, NodeWire, SnapshotWire } from "./types.js";

export class SessionState {
  nodes = new Map<string, NodeWire>();
  edges: EdgeWire[] = [];
  pins: string[] = [];
  lastSeq = -1;
  failureCount = 0;
  private edgeKeys = new Set<string>();

  reset(snapshot: SnapshotWire): void {
    this.nodes = new Map(snapshot.nodes.map((n) => [n.id, n]));
    this.edges = [...snapshot.edges];
    this.edgeKeys = new Set(snapshot.edges.map(edgeKey));
    this.pins = [...snapshot.pins];
    this.lastSeq = snapshot.last_seq;
  }

  /** Apply one stream frame; false means out-of-order (caller resyncs). */
  applyEvent(line: EventLine): boolean {
    if (line.seq !== this.lastSeq + 1) {
      return false;
    }
    const payload = line.payload as Record<string, any>;
    switch (line.kind) {
      case "GenerationCompleted":
        for (const node of payload.nodes as NodeWire[]) {
          this.addNode(node);
        }
        for (const edge of payload.edges as EdgeWire[]) {
          this.addEdge(edge);
        }
        break;
      case "UserNodeAdded":
        this.addNode(payload.node as NodeWire);
        for (const edge of payload.edges as EdgeWire[]) {
          this.addEdge(edge);
        }
        break;
      case "NodePinned": {
        const id = payload.node as string;
        if (!this.pins.includes(id)) {
          this.pins.push(id);
        }
        break;
      }
      case "NodeUnpinned":
        this.pins = this.pins.filter((p) => p !== (payload.node as string));
        break;
      case "GenerationFailed":
        this.failureCount += 1;
        break;
      default:
        return false;
    }
    this.lastSeq = line.seq;
    return true;
  }

  private addNode(node: NodeWire): void {
    this.nodes.set(node.id, node);
  }

  private addEdge(edge: EdgeWire): void {
    const key = edgeKey(edge);
    if (!this.edgeKeys.has(key)) {
      this.edgeKeys.add(key);
      this.edges.push(edge);
    }
  }

  node(id: string): NodeWire | undefined {
    return this.nodes.get(id);
  }

  root(): NodeWire | undefined {
    for (const node of this.nodes.values()) {
      if (node.kind === "Task") {
        return node;
      }
    }
    return undefined;
  }

  childrenOf(id: string, edgeKind: string): NodeWire[] {
    const out: NodeWire[] = [];
    for (const edge of this.edges) {
      if (edge.source === id && edge.kind === edgeKind) {
        const node = this.nodes.get(edge.target);
        if (node) {
          out.push(node);
        }
      }
    }
    return out;
  }

  parentOf(id: string): NodeWire | undefined {
    for (const edge of this.edges) {
      if (edge.target === id) {
        return this.nodes.get(edge.source);
      }
    }
    return undefined;
  }

  categories(): NodeWire[] {
    const root = this.root();
    return root ? this.childrenOf(root.id, "Contains") : [];
  }

  isPinned(id: string): boolean {
    return this.pins.includes(id);
  }

  /** Containing Idea for canvas links (e.g. from a pinned Mitigation). */
  ideaAncestor(id: string): NodeWire | undefined {
    let current = this.nodes.get(id);
    let hops = 0;
    while (current && hops <= this.nodes.size) {
      if (current.kind === "Idea") {
        return current;
      }
      current = this.parentOf(current.id);
      hops += 1;
    }
    return undefined;
  }
}

function edgeKey(edge: EdgeWire): string {
  return `${edge.source}|${edge.kind}|${edge.target}`;
}
