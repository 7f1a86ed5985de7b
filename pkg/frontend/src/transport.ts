/**
 * Transport abstraction: the client logic only ever sees "send a message,
 * receive messages, notice the connection dying". The browser build plugs
 * in a WebSocket; tests plug in a raw TCP line transport or an in-memory
 * stub.
 */

export interface Transport {
  send(text: string): void;
  /** Register the message callback; one call per received JSON text. */
  onMessage(cb: (text: string) => void): void;
  onClose(cb: () => void): void;
  close(): void;
}

/** Browser transport: one protocol message per WebSocket text frame. */
export class WebSocketTransport implements Transport {
  private ws: WebSocket;
  private messageCb: ((text: string) => void) | null = null;
  private closeCb: (() => void) | null = null;
  private pending: string[] = [];

  constructor(url: string, onOpen?: () => void) {
    this.ws = new WebSocket(url);
    this.ws.onopen = () => {
      for (const text of this.pending) this.ws.send(text);
      this.pending = [];
      onOpen?.();
    };
    this.ws.onmessage = (ev) => {
      if (typeof ev.data === "string") this.messageCb?.(ev.data);
    };
    this.ws.onclose = () => this.closeCb?.();
    this.ws.onerror = () => {
      // the close event follows; nothing useful to do here
    };
  }

  send(text: string): void {
    if (this.ws.readyState === WebSocket.CONNECTING) {
      this.pending.push(text);
    } else if (this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(text);
    }
    // closing/closed: drop; the close callback drives recovery
  }

  onMessage(cb: (text: string) => void): void {
    this.messageCb = cb;
  }

  onClose(cb: () => void): void {
    this.closeCb = cb;
  }

  close(): void {
    this.ws.close();
  }
}
