// Node transport for tests and headless drivers: newline-delimited JSON
// over a raw TCP socket, exactly the server's native framing.

import * as net from "node:net";

import type { ClientMessage, ServerMessage } from "./protocol.js";
import { LineSplitter, encodeMessage } from "./protocol.js";
import type { Transport } from "./client.js";

export class TcpTransport implements Transport {
  private socket: net.Socket;
  private splitter = new LineSplitter();
  private messageCb: ((msg: ServerMessage) => void) | null = null;
  private closeCb: (() => void) | null = null;

  private constructor(socket: net.Socket) {
    this.socket = socket;
    socket.setEncoding("utf-8");
    socket.on("data", (chunk: string) => {
      for (const msg of this.splitter.push(chunk)) {
        if (this.messageCb) this.messageCb(msg);
      }
    });
    socket.on("close", () => {
      if (this.closeCb) this.closeCb();
    });
    socket.on("error", () => undefined);
  }

  static connect(host: string, port: number, timeoutMs = 5000): Promise<TcpTransport> {
    return new Promise((resolve, reject) => {
      const socket = net.createConnection({ host, port });
      const timer = setTimeout(
        () => reject(new Error(`connect timeout ${host}:${port}`)), timeoutMs);
      socket.once("connect", () => {
        clearTimeout(timer);
        resolve(new TcpTransport(socket));
      });
      socket.once("error", (err) => {
        clearTimeout(timer);
        reject(err);
      });
    });
  }

  send(msg: ClientMessage): void {
    this.socket.write(encodeMessage(msg));
  }

  onMessage(cb: (msg: ServerMessage) => void): void {
    this.messageCb = cb;
  }

  onClose(cb: () => void): void {
    this.closeCb = cb;
  }

  close(): void {
    this.socket.end();
    this.socket.destroy();
  }
}
