// Application shell: owns the state mirror, the stream connection, and the
// pending-operation lockout. All rendering funnels through render().

import type { ApiClient } from "./api.js";
import { ApiError } from "./api.js";
import { clear, el } from "./dom.js";
import { SseClient, type StreamFrame } from "./sse.js";
import { SessionState } from "./state.js";
import {
  renderCanvas,
  renderExplored,
  renderOverview,
  renderSidebar,
  type Handlers,
  type UiFlags,
  type View,
} from "./views.js";
import type { CollectionEntry, EventLine } from "./types.js";

export type StreamFactory = (
  url: string,
  onFrame: (frame: StreamFrame) => void,
  onStatus: (connected: boolean) => void,
) => SseClient;

const defaultStreamFactory: StreamFactory = (url, onFrame, onStatus) =>
  new SseClient(url, onFrame, onStatus);

export class App {
  state = new SessionState();
  view: View = { kind: "overview" };
  sessionId = "";
  connected = false;
  pendingOp: { kind: string; focus: string } | null = null;
  lastError: { message: string; retry: () => void } | null = null;
  stream: SseClient | null = null;
  private collection: CollectionEntry[] = [];
  private readonly handlers: Handlers;

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
    private streamFactory: StreamFactory = defaultStreamFactory,
  ) {
    this.handlers = {
      navigate: (view) => this.navigate(view),
      initialize: () => {
        const rootNode = this.state.root();
        if (rootNode) {
          void this.runOp("InitializeSpace", rootNode.id);
        }
      },
      findSimilar: (focus) => void this.runOp("FindSimilar", focus),
      diagnoseRisks: (focus) => void this.runOp("DiagnoseRisks", focus),
      mitigate: (risk) => void this.runOp("MitigateRisk", risk),
      ask: (focus, question) => void this.runOp("AnswerQuestion", focus, question),
      togglePin: (node) => void this.togglePin(node),
      addOwn: (parent, kind, name, description) =>
        void this.addOwn(parent, kind, name, description),
    };
  }

  async openSession(sessionId: string): Promise<void> {
    this.sessionId = sessionId;
    await this.resync();
    this.stream = this.streamFactory(
      this.api.streamUrl(sessionId),
      (frame) => this.onFrame(frame),
      (connected) => {
        this.connected = connected;
        this.render();
      },
    );
    this.stream.start();
    this.render();
  }

  close(): void {
    this.stream?.stop();
  }

  navigate(view: View): void {
    this.view = view;
    this.lastError = null;
    if (view.kind === "explored") {
      void this.refreshCollection();
    }
    this.render();
  }

  async resync(): Promise<void> {
    const snapshot = await this.api.getSnapshot(this.sessionId);
    this.state.reset(snapshot);
    if (this.view.kind === "explored") {
      await this.refreshCollection();
    }
    this.render();
  }

  private onFrame(frame: StreamFrame): void {
    if (frame.event === "hello") {
      const hello = JSON.parse(frame.data) as { last_seq: number };
      if (hello.last_seq !== this.state.lastSeq) {
        void this.resync();
      }
      return;
    }
    const line = JSON.parse(frame.data) as EventLine;
    if (!this.state.applyEvent(line)) {
      void this.resync();
      return;
    }
    if (this.view.kind === "explored") {
      void this.refreshCollection();
    }
    this.render();
  }

  private async refreshCollection(): Promise<void> {
    const body = await this.api.getCollection(this.sessionId);
    this.collection = body.entries;
    this.render();
  }

  private describe(error: unknown): string {
    if (error instanceof ApiError) {
      return `${error.message} (${error.code})`;
    }
    return error instanceof Error ? error.message : String(error);
  }

  private async runOp(kind: string, focus: string, question?: string): Promise<void> {
    if (this.pendingOp) {
      return;
    }
    this.pendingOp = { kind, focus };
    this.lastError = null;
    this.render();
    try {
      await this.api.runOp(this.sessionId, kind, focus, question);
    } catch (error) {
      this.lastError = {
        message: this.describe(error),
        retry: () => void this.runOp(kind, focus, question),
      };
    } finally {
      this.pendingOp = null;
      this.render();
    }
  }

  private async togglePin(node: string): Promise<void> {
    this.lastError = null;
    try {
      if (this.state.isPinned(node)) {
        await this.api.unpin(this.sessionId, node);
      } else {
        await this.api.pin(this.sessionId, node);
      }
    } catch (error) {
      this.lastError = {
        message: this.describe(error),
        retry: () => void this.togglePin(node),
      };
      this.render();
    }
  }

  private async addOwn(
    parent: string,
    kind: "Idea" | "Mitigation",
    name: string,
    description: string,
  ): Promise<void> {
    this.lastError = null;
    try {
      await this.api.addNode(this.sessionId, parent, kind, name, description);
    } catch (error) {
      this.lastError = {
        message: this.describe(error),
        retry: () => void this.addOwn(parent, kind, name, description),
      };
      this.render();
    }
  }

  render(): void {
    const flags: UiFlags = {
      pending: this.pendingOp !== null,
      connected: this.connected,
      error: this.lastError,
    };
    clear(this.root);
    const sidebar = renderSidebar(this.state, this.view, this.handlers, flags);
    let main: HTMLElement;
    if (this.view.kind === "overview") {
      main = renderOverview(this.state, this.handlers, flags);
    } else if (this.view.kind === "canvas") {
      main = renderCanvas(this.state, this.view.focus, this.handlers, flags);
    } else {
      main = renderExplored(this.collection, this.state, this.handlers, flags);
    }
    this.root.append(el("div", { class: "layout" }, sidebar, el("main", {}, main)));
  }
}
