// Stream client: one websocket per session, reconnect with HTTP backfill.

import { applyRecord, newSessionView, type SessionView } from "./state.js";
import type { AckRecord, RunRecord, StreamMessage } from "./types.js";

export interface WebSocketLike {
  addEventListener(type: "open" | "message" | "close" | "error", listener: (ev: any) => void): void;
  close(): void;
}

export type WsFactory = (url: string) => WebSocketLike;

export interface GsClientOptions {
  baseUrl: string;
  wsFactory?: WsFactory;
  fetchFn?: typeof fetch;
  reconnectMs?: number;
  now?: () => number;
  /** Called after every state change; drive rendering from here. */
  onChange?: (view: SessionView) => void;
}

const BACKFILL_PAGE = 500;

export class GsClient {
  readonly view: SessionView = newSessionView();

  private readonly baseUrl: string;
  private readonly wsFactory: WsFactory;
  private readonly fetchFn: typeof fetch;
  private readonly reconnectMs: number;
  private readonly now: () => number;
  private readonly onChange: (view: SessionView) => void;

  private ws: WebSocketLike | null = null;
  private buffered: RunRecord[] = [];
  private backfilling = false;
  private closed = false;

  constructor(opts: GsClientOptions) {
    this.baseUrl = opts.baseUrl.replace(/\/$/, "");
    this.wsFactory = opts.wsFactory ?? ((url) => new WebSocket(url));
    this.fetchFn = opts.fetchFn ?? ((...args) => fetch(...args));
    this.reconnectMs = opts.reconnectMs ?? 1000;
    this.now = opts.now ?? (() => Date.now());
    this.onChange = opts.onChange ?? (() => {});
  }

  connect(): void {
    if (this.closed) return;
    this.view.connection = "connecting";
    this.onChange(this.view);
    const url = this.baseUrl.replace(/^http/, "ws") + "/stream";
    this.ws = this.wsFactory(url);
    this.ws.addEventListener("message", (ev) => this.handleMessage(String(ev.data)));
    this.ws.addEventListener("close", () => this.handleClose());
    this.ws.addEventListener("error", () => {});
  }

  close(): void {
    this.closed = true;
    this.ws?.close();
  }

  async sendCommand(
    action: string,
    targets: "all" | string[],
    args?: Record<string, unknown>,
  ): Promise<AckRecord[]> {
    const resp = await this.fetchFn(`${this.baseUrl}/commands`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ action, targets, args }),
    });
    if (!resp.ok) {
      const detail = await resp.text();
      throw new Error(`command rejected (${resp.status}): ${detail}`);
    }
    const body = (await resp.json()) as { acks: AckRecord[] };
    return body.acks;
  }

  async vehicles(): Promise<string[]> {
    const resp = await this.fetchFn(`${this.baseUrl}/vehicles`);
    const body = (await resp.json()) as { vehicles: string[] };
    return body.vehicles;
  }

  private handleMessage(raw: string): void {
    const msg = JSON.parse(raw) as StreamMessage;
    if (msg.type === "hello") {
      this.view.runId = msg.run_id;
      this.view.connection = "connected";
      this.onChange(this.view);
      void this.backfill();
      return;
    }
    if (this.backfilling) {
      // hold live records until the catch-up query lands; seq dedupe
      // in applyRecord makes the overlap harmless
      this.buffered.push(msg);
      return;
    }
    if (applyRecord(this.view, msg, this.now())) {
      this.onChange(this.view);
    }
  }

  private async backfill(): Promise<void> {
    if (!this.view.runId) return;
    this.backfilling = true;
    try {
      let after = this.view.lastSeq;
      for (;;) {
        const resp = await this.fetchFn(
          `${this.baseUrl}/runs/${this.view.runId}/records?after=${after}&limit=${BACKFILL_PAGE}`,
        );
        const body = (await resp.json()) as { records: RunRecord[] };
        if (body.records.length === 0) break;
        for (const rec of body.records) {
          applyRecord(this.view, rec, this.now());
        }
        after = body.records[body.records.length - 1].seq;
      }
    } finally {
      this.backfilling = false;
      for (const rec of this.buffered) {
        applyRecord(this.view, rec, this.now());
      }
      this.buffered = [];
      this.onChange(this.view);
    }
  }

  private handleClose(): void {
    if (this.closed) return;
    this.view.connection = "disconnected";
    this.onChange(this.view);
    setTimeout(() => this.connect(), this.reconnectMs);
  }
}
