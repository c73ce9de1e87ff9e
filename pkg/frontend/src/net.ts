/**
 * Websocket client for the session bridge.
 *
 * Wraps a socket behind a small interface so tests (and the node-based
 * integration runner) can inject their own socket implementation.  Incoming
 * text is decoded and forwarded as frames; decode failures are reported but
 * never throw into the socket callback.  On close the client schedules a
 * reconnect with linear backoff until `close()` is called.
 */

import { decodeServer, encodeOperator } from "./schema.js";
import type { Frame, OperatorMessage } from "./schema.js";

/** The subset of the WebSocket API the client relies on. */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onclose: (() => void) | null;
  onmessage: ((event: { data: unknown }) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ClientEvents {
  onFrame: (frame: Frame) => void;
  onError?: (message: string) => void;
  onOpen?: () => void;
  onClose?: () => void;
}

export class BridgeClient {
  private socket: SocketLike | null = null;
  private closed = false;
  private reconnectDelayMs = 500;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly url: string,
    private readonly events: ClientEvents,
    private readonly factory: SocketFactory
  ) {}

  connect(): void {
    if (this.closed) return;
    const sock = this.factory(this.url);
    this.socket = sock;
    sock.onopen = () => {
      this.reconnectDelayMs = 500;
      this.events.onOpen?.();
    };
    sock.onmessage = (event) => {
      if (typeof event.data !== "string") {
        this.events.onError?.("non-text frame");
        return;
      }
      try {
        const msg = decodeServer(event.data);
        if (msg.kind === "error") {
          this.events.onError?.(msg.detail);
        } else {
          this.events.onFrame(msg.frame);
        }
      } catch (exc) {
        this.events.onError?.(String(exc));
      }
    };
    sock.onclose = () => {
      this.socket = null;
      this.events.onClose?.();
      if (!this.closed) {
        this.timer = setTimeout(() => this.connect(), this.reconnectDelayMs);
        this.reconnectDelayMs = Math.min(5000, this.reconnectDelayMs * 2);
      }
    };
  }

  send(msg: OperatorMessage): boolean {
    if (this.socket === null) return false;
    this.socket.send(encodeOperator(msg));
    return true;
  }

  close(): void {
    this.closed = true;
    if (this.timer !== null) clearTimeout(this.timer);
    this.socket?.close();
    this.socket = null;
  }
}
