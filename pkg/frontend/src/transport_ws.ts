// Browser transport: the same JSON messages, one per WebSocket text frame,
// with automatic reconnect and exponential backoff.

import type { ClientMessage, ServerMessage } from "./protocol.js";
import { decodeMessage } from "./protocol.js";
import type { Transport } from "./client.js";

export class WsTransport implements Transport {
  private ws: WebSocket | null = null;
  private messageCb: ((msg: ServerMessage) => void) | null = null;
  private closeCb: (() => void) | null = null;
  private closed = false;
  private backoffMs = 500;

  constructor(private url: string, private reconnect = true) {
    this.connect();
  }

  private connect(): void {
    this.ws = new WebSocket(this.url);
    this.ws.onmessage = (ev) => {
      if (this.messageCb) this.messageCb(decodeMessage(String(ev.data)));
    };
    this.ws.onopen = () => {
      this.backoffMs = 500;
    };
    this.ws.onclose = () => {
      if (this.closeCb) this.closeCb();
      if (this.reconnect && !this.closed) {
        setTimeout(() => this.connect(), this.backoffMs);
        this.backoffMs = Math.min(this.backoffMs * 2, 8000);
      }
    };
  }

  send(msg: ClientMessage): void {
    if (this.ws && this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(JSON.stringify(msg));
    }
  }

  onMessage(cb: (msg: ServerMessage) => void): void {
    this.messageCb = cb;
  }

  onClose(cb: () => void): void {
    this.closeCb = cb;
  }

  close(): void {
    this.closed = true;
    this.ws?.close();
  }
}
