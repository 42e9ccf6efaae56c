// Wire protocol of the session endpoint: JSON text frames both ways.
// The server is authoritative; every rendered value must trace back to a
// parsed server frame (and its tick index j where applicable).

export interface HelloFrame {
  type: "hello";
  session: string;
  mode: string;
  dt: number;
  n_players: number;
  control_dims: number[];
  players: number[];
  status: string;
  scenario: string;
}

export interface JoinedFrame {
  type: "joined";
  player: number;
  session: string;
}

export interface TickFrame {
  type: "tick";
  j: number;
  t: number;
  set: number;
  phi: number[];
  xi: number[];
  u0: number[][];
  u: number[][];
  eps: (number[] | null)[];
  F: number | null;
  figure: { visible: boolean; dwell: number } | null;
}

export interface SetBoundaryFrame {
  type: "set-boundary";
  set: number;
  j: number;
  t: number;
  reason: string;
  F: number | null;
}

export interface UtteranceFrame {
  type: "utterance";
  n: number;
  j: number;
  t_start: number;
  t_end: number;
  cell: number[] | null;
  omega: number[];
  v: number[];
}

export interface FigureVisibleFrame {
  type: "figure-visible";
  j: number;
  t: number;
}

export interface EndFrame {
  type: "end";
  termination: string;
  summary: Record<string, unknown>;
}

export interface NoticeFrame {
  type: "error" | "warning";
  message: string;
}

export type ServerFrame =
  | HelloFrame
  | JoinedFrame
  | TickFrame
  | SetBoundaryFrame
  | UtteranceFrame
  | FigureVisibleFrame
  | EndFrame
  | NoticeFrame;

export interface ControlMessage {
  type: "control";
  player: number;
  t: number;
  u0: number[];
}

export interface JoinMessage {
  type: "join";
  player: number;
}

export type ClientMessage = ControlMessage | JoinMessage;

const KNOWN_TYPES = new Set([
  "hello",
  "joined",
  "tick",
  "set-boundary",
  "utterance",
  "figure-visible",
  "end",
  "error",
  "warning",
]);

/** Parse one server frame; malformed input yields null (log and skip). */
export function parseServerFrame(raw: string): ServerFrame | null {
  let doc: unknown;
  try {
    doc = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof doc !== "object" || doc === null) return null;
  const frame = doc as { type?: unknown };
  if (typeof frame.type !== "string" || !KNOWN_TYPES.has(frame.type)) return null;
  if (frame.type === "tick") {
    const t = doc as Partial<TickFrame>;
    if (typeof t.j !== "number" || !Array.isArray(t.phi)) return null;
  }
  return doc as ServerFrame;
}

export function controlMessage(player: number, t: number, u0: number[]): string {
  return JSON.stringify({ type: "control", player, t, u0 });
}

export function joinMessage(player: number): string {
  return JSON.stringify({ type: "join", player });
}
