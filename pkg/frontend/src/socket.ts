// One resilient socket per session. Reconnects with exponential backoff;
// the server greets every connection with a full snapshot, so resync is
// simply "drop the socket and let it come back".

import { parseServerMessage, type ClientFrame, type ServerMessage } from "./wire";

export type SocketStatus = "connecting" | "open" | "closed";

export interface SocketHandlers {
  onMessage(msg: ServerMessage): void;
  onStatus(status: SocketStatus): void;
}

type WebSocketCtor = new (url: string) => WebSocket;

export class SessionSocket {
  private ws: WebSocket | null = null;
  private backoffMs = 500;
  private readonly maxBackoffMs = 5000;
  private shouldRun = true;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(private readonly url: string,
              private readonly handlers: SocketHandlers,
              private readonly WebSocketImpl: WebSocketCtor =
                globalThis.WebSocket as WebSocketCtor) {}

  connect(): void {
    if (!this.shouldRun) return;
    this.handlers.onStatus("connecting");
    const ws = new this.WebSocketImpl(this.url);
    this.ws = ws;
    ws.onopen = () => {
      this.backoffMs = 500;
      this.handlers.onStatus("open");
    };
    ws.onmessage = (event: MessageEvent) => {
      const msg = parseServerMessage(String(event.data));
      if (msg) this.handlers.onMessage(msg);
    };
    ws.onclose = () => {
      if (ws !== this.ws) return; // superseded by a newer connection
      this.handlers.onStatus("closed");
      if (!this.shouldRun) return;
      this.reconnectTimer = setTimeout(() => this.connect(), this.backoffMs);
      this.backoffMs = Math.min(this.maxBackoffMs, this.backoffMs * 2);
    };
    ws.onerror = () => {
      ws.close();
    };
  }

  /** Force a fresh connection (and with it a fresh snapshot). */
  resync(): void {
    this.ws?.close();
  }

  send(frame: ClientFrame): boolean {
    if (!this.ws || this.ws.readyState !== 1) return false;
    this.ws.send(JSON.stringify(frame));
    return true;
  }

  close(): void {
    this.shouldRun = false;
    if (this.reconnectTimer !== null) clearTimeout(this.reconnectTimer);
    this.ws?.close();
  }
}
