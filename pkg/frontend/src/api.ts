import type {
  CollectionEntry,
  OpResponse,
  SessionInfo,
  SnapshotWire,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

/** Thin typed client for the session service; throws ApiError on non-2xx. */
export class ApiClient {
  private fetchFn: FetchLike;

  constructor(
    public baseUrl: string,
    fetchFn?: FetchLike,
  ) {
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(this.baseUrl + path, init);
    let data: unknown = null;
    try {
      data = await response.json();
    } catch {
      data = null;
    }
    if (!response.ok) {
      const err = (data ?? {}) as { code?: string; message?: string };
      throw new ApiError(
        response.status,
        err.code ?? "unknown",
        err.message ?? `request failed with ${response.status}`,
      );
    }
    return data as T;
  }

  createSession(task: string): Promise<{ session_id: string; snapshot: SnapshotWire }> {
    return this.request("POST", "/v1/sessions", { task });
  }

  listSessions(): Promise<{ sessions: SessionInfo[] }> {
    return this.request("GET", "/v1/sessions");
  }

  getSnapshot(sessionId: string, at?: number): Promise<SnapshotWire> {
    const suffix = at === undefined ? "" : `?at=${at}`;
    return this.request("GET", `/v1/sessions/${sessionId}${suffix}`);
  }

  getCollection(sessionId: string): Promise<{ entries: CollectionEntry[] }> {
    return this.request("GET", `/v1/sessions/${sessionId}/collection`);
  }

  runOp(
    sessionId: string,
    kind: string,
    focus: string,
    question?: string,
  ): Promise<OpResponse> {
    const body: Record<string, string> = { kind, focus };
    if (question !== undefined) {
      body.question = question;
    }
    return this.request("POST", `/v1/sessions/${sessionId}/ops`, body);
  }

  addNode(
    sessionId: string,
    parent: string,
    kind: "Idea" | "Mitigation",
    name: string,
    description: string,
  ): Promise<{ node: import("./types.js").NodeWire }> {
    return this.request("POST", `/v1/sessions/${sessionId}/nodes`, {
      parent,
      kind,
      name,
      description,
    });
  }

  pin(sessionId: string, node: string): Promise<{ pins: string[] }> {
    return this.request("POST", `/v1/sessions/${sessionId}/pins`, { node });
  }

  unpin(sessionId: string, node: string): Promise<{ pins: string[] }> {
    return this.request("DELETE", `/v1/sessions/${sessionId}/pins/${node}`);
  }

  streamUrl(sessionId: string): string {
    return `${this.baseUrl}/v1/sessions/${sessionId}/stream`;
  }
}
