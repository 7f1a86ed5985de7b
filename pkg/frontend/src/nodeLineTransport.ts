/**
 * Node-only transport speaking the line flavor of the protocol: one JSON
 * object per newline-terminated UTF-8 line over raw TCP. Used by the test
 * suite and by headless tooling; the browser bundle never imports this
 * module.
 */

import * as net from "node:net";
import type { Transport } from "./transport.js";

export class NodeLineTransport implements Transport {
  private socket: net.Socket;
  private buffer = "";
  private messageCb: ((text: string) => void) | null = null;
  private closeCb: (() => void) | null = null;

  private constructor(socket: net.Socket) {
    this.socket = socket;
    socket.setEncoding("utf8");
    socket.on("data", (chunk: string) => this.feed(chunk));
    socket.on("close", () => this.closeCb?.());
    socket.on("error", () => {
      // swallow; 'close' follows and drives recovery
    });
  }

  static connect(host: string, port: number): Promise<NodeLineTransport> {
    return new Promise((resolve, reject) => {
      const socket = net.createConnection({ host, port });
      socket.once("connect", () => resolve(new NodeLineTransport(socket)));
      socket.once("error", reject);
    });
  }

  private feed(chunk: string): void {
    this.buffer += chunk;
    for (;;) {
      const nl = this.buffer.indexOf("\n");
      if (nl < 0) break;
      const line = this.buffer.slice(0, nl).trim();
      this.buffer = this.buffer.slice(nl + 1);
      if (line.length > 0) this.messageCb?.(line);
    }
  }

  send(text: string): void {
    this.socket.write(text + "\n");
  }

  onMessage(cb: (text: string) => void): void {
    this.messageCb = cb;
  }

  onClose(cb: () => void): void {
    this.closeCb = cb;
  }

  close(): void {
    this.socket.end();
  }
}
