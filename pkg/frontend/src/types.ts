// Wire shapes of the session service (JSON endpoints and SSE frames).

export interface NodeWire {
  id: string;
  kind: string;
  name: string;
  description: string;
  provenance: string;
  created_at: string;
  created_by_event: number;
}

export interface EdgeWire {
  source: string;
  kind: string;
  target: string;
}

export interface SnapshotWire {
  nodes: NodeWire[];
  edges: EdgeWire[];
  pins: string[];
  last_seq: number;
}

export interface EventLine {
  seq: number;
  at: string;
  kind: string;
  payload: Record<string, unknown>;
}

export interface CollectionEntry {
  node: NodeWire;
  path: string[];
}

export interface OpResponse {
  added_nodes: NodeWire[];
  added_edges: EdgeWire[];
  answer?: string;
  exchange: { attempts: number; duration_ms: number };
}

export interface SessionInfo {
  session_id: string;
  task: string;
  last_activity: string;
}
