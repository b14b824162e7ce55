// Transport-agnostic session client: feeds server messages through the
// view reducer and exposes send() for input modules.

import type { ClientMessage, ServerMessage } from "./protocol.js";
import { ViewState, applyMessage, initialView } from "./view.js";

export interface Transport {
  send(msg: ClientMessage): void;
  onMessage(cb: (msg: ServerMessage) => void): void;
  onClose(cb: () => void): void;
  close(): void;
}

export class SessionClient {
  view: ViewState = initialView();
  private listeners: ((view: ViewState) => void)[] = [];

  constructor(private transport: Transport) {
    transport.onMessage((msg) => {
      this.view = applyMessage(this.view, msg);
      if (this.view.connection !== "open") {
        this.view = { ...this.view, connection: "open" };
      }
      this.emit();
    });
    transport.onClose(() => {
      this.view = { ...this.view, connection: "closed" };
      this.emit();
    });
  }

  onChange(cb: (view: ViewState) => void): void {
    this.listeners.push(cb);
  }

  send(msg: ClientMessage): void {
    this.transport.send(msg);
  }

  setView(view: ViewState): void {
    this.view = view;
    this.emit();
  }

  close(): void {
    this.transport.close();
  }

  private emit(): void {
    for (const cb of this.listeners) cb(this.view);
  }
}
