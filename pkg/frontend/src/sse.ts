// Minimal SSE client over fetch + ReadableStream. Used instead of
// EventSource so the same code runs in browsers and in the node test
// environment, and so reconnect behavior stays under our control.

import type { FetchLike } from "./api.js";

export interface StreamFrame {
  event: string;
  data: string;
}

export class SseClient {
  retryDelayMs = 500;
  private stopped = true;
  private abort: AbortController | null = null;

  constructor(
    private url: string,
    private onFrame: (frame: StreamFrame) => void,
    private onStatus: (connected: boolean) => void = () => {},
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  start(): void {
    if (!this.stopped) {
      return;
    }
    this.stopped = false;
    void this.loop();
  }

  stop(): void {
    this.stopped = true;
    this.abort?.abort();
  }

  private async loop(): Promise<void> {
    while (!this.stopped) {
      this.abort = new AbortController();
      try {
        const response = await this.fetchFn(this.url, {
          signal: this.abort.signal,
          headers: { accept: "text/event-stream" },
        });
        if (!response.ok || !response.body) {
          throw new Error(`stream returned ${response.status}`);
        }
        this.onStatus(true);
        await this.consume(response.body);
      } catch {
        // fall through to reconnect
      }
      this.onStatus(false);
      if (this.stopped) {
        return;
      }
      await new Promise((resolve) => setTimeout(resolve, this.retryDelayMs));
    }
  }

  private async consume(body: ReadableStream<Uint8Array>): Promise<void> {
    const reader = body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    let event = "";
    let data: string[] = [];
    for (;;) {
      const { done, value } = await reader.read();
      if (done) {
        return;
      }
      buffer += decoder.decode(value, { stream: true });
      let newline: number;
      while ((newline = buffer.indexOf("\n")) >= 0) {
        const line = buffer.slice(0, newline).replace(/\r$/, "");
        buffer = buffer.slice(newline + 1);
        if (line === "") {
          if (event) {
            this.onFrame({ event, data: data.join("\n") });
          }
          event = "";
          data = [];
        } else if (line.startsWith("event:")) {
          event = line.slice("event:".length).trim();
        } else if (line.startsWith("data:")) {
          data.push(line.slice("data:".length).trim());
        }
        // comment lines (heartbeats) are ignored on purpose
      }
    }
  }
}
