// Socket wrapper: parses the frame stream, throttles outbound controls,
// and surfaces disconnects as state (the UI offers reconnection, it never
// reconnects silently mid-set).

import { controlMessage, joinMessage, parseServerFrame, type ServerFrame } from "./protocol.js";
import { ControlThrottle } from "./rate.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  addEventListener(type: string, listener: (ev: any) => void): void;
}

export type SocketFactory = (url: string) => SocketLike;

export interface GameSocketHandlers {
  onFrame: (frame: ServerFrame) => void;
  onStatus: (status: "connecting" | "open" | "closed") => void;
  onSkipped?: (raw: string) => void;
}

const defaultFactory: SocketFactory = (url) => new WebSocket(url) as unknown as SocketLike;

export class GameSocket {
  private socket: SocketLike | null = null;
  private throttle: ControlThrottle;
  private player: number | null = null;
  opened = false;

  constructor(
    readonly url: string,
    private readonly handlers: GameSocketHandlers,
    options: { factory?: SocketFactory; maxControlRate?: number; clock?: () => number } = {},
  ) {
    this.factory = options.factory ?? defaultFactory;
    this.throttle = new ControlThrottle(options.maxControlRate ?? 120, options.clock);
    this.clock = options.clock ?? (() => performance.now() / 1000);
  }

  private readonly factory: SocketFactory;
  private readonly clock: () => number;

  connect(): void {
    this.handlers.onStatus("connecting");
    const socket = this.factory(this.url);
    this.socket = socket;
    socket.addEventListener("open", () => {
      this.opened = true;
      this.handlers.onStatus("open");
      if (this.player !== null) socket.send(joinMessage(this.player));
    });
    socket.addEventListener("message", (ev: MessageEvent) => {
      const frame = parseServerFrame(String(ev.data));
      if (frame === null) {
        this.handlers.onSkipped?.(String(ev.data));
        return;
      }
      this.handlers.onFrame(frame);
    });
    socket.addEventListener("close", () => {
      this.opened = false;
      this.handlers.onStatus("closed");
    });
    socket.addEventListener("error", () => {
      // close follows; status handled there
    });
  }

  join(player: number): void {
    this.player = player;
    if (this.opened && this.socket) this.socket.send(joinMessage(player));
  }

  /** Throttled control send; returns true when a frame actually went out. */
  sendControl(u0: number[]): boolean {
    if (!this.opened || this.socket === null || this.player === null) return false;
    const due = this.throttle.offer(u0);
    if (due === null) return false;
    this.socket.send(controlMessage(this.player, this.clock(), due));
    return true;
  }

  /** Flush a held sample once the rate window reopens (call from a timer). */
  flush(): boolean {
    if (!this.opened || this.socket === null || this.player === null) return false;
    const due = this.throttle.drain();
    if (due === null) return false;
    this.socket.send(controlMessage(this.player, this.clock(), due));
    return true;
  }

  close(): void {
    this.socket?.close();
  }
}
