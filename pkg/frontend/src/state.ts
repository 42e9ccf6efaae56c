// Client-side view model: a reduction of the server frame stream.
// Series keep the originating tick index j with every point, so anything
// on screen can be traced to the server frame that produced it.

import type { ServerFrame, TickFrame, UtteranceFrame } from "./protocol.js";

export interface SeriesPoint {
  j: number;
  values: number[];
}

/** Fixed-capacity rolling buffer for chart series. */
export class RollingSeries {
  points: SeriesPoint[] = [];
  constructor(readonly capacity: number) {}

  push(j: number, values: number[]): void {
    this.points.push({ j, values });
    if (this.points.length > this.capacity) {
      this.points.splice(0, this.points.length - this.capacity);
    }
  }

  get length(): number {
    return this.points.length;
  }

  latest(): SeriesPoint | undefined {
    return this.points[this.points.length - 1];
  }
}

export type ConnectionStatus = "connecting" | "open" | "closed";

export interface Banner {
  set: number;
  reason: string;
  j: number;
}

export class ViewModel {
  status: ConnectionStatus = "connecting";
  session = "";
  mode = "";
  dt = 0;
  scenario = "";
  player: number | null = null;
  lastTick: TickFrame | null = null;
  frames = 0;
  setIndex = 0;
  banners: Banner[] = [];
  transcript: UtteranceFrame[] = [];
  figureVisible = false;
  figureEventTick: number | null = null;
  ended: { termination: string } | null = null;
  notices: string[] = [];
  readonly epsSeries: RollingSeries;
  readonly fSeries: RollingSeries;
  readonly phiSeries: RollingSeries;

  constructor(window = 600) {
    this.epsSeries = new RollingSeries(window);
    this.fSeries = new RollingSeries(window);
    this.phiSeries = new RollingSeries(window);
  }
}

/** Fold one server frame into the view model. */
export function applyFrame(vm: ViewModel, frame: ServerFrame): void {
  switch (frame.type) {
    case "hello":
      vm.session = frame.session;
      vm.mode = frame.mode;
      vm.dt = frame.dt;
      vm.scenario = frame.scenario;
      break;
    case "joined":
      vm.player = frame.player;
      break;
    case "tick": {
      vm.lastTick = frame;
      vm.frames += 1;
      vm.setIndex = frame.set;
      vm.phiSeries.push(frame.j, frame.phi);
      const eps = frame.eps.flatMap((e) => e ?? []);
      if (eps.length > 0) vm.epsSeries.push(frame.j, eps);
      if (frame.F !== null) vm.fSeries.push(frame.j, [frame.F]);
      if (frame.figure) vm.figureVisible = frame.figure.visible;
      break;
    }
    case "set-boundary":
      vm.banners.push({ set: frame.set, reason: frame.reason, j: frame.j });
      if (vm.banners.length > 8) vm.banners.shift();
      break;
    case "utterance":
      vm.transcript.push(frame);
      break;
    case "figure-visible":
      vm.figureVisible = true;
      if (vm.figureEventTick === null) vm.figureEventTick = frame.j;
      break;
    case "end":
      vm.ended = { termination: frame.termination };
      break;
    case "error":
    case "warning":
      vm.notices.push(`${frame.type}: ${frame.message}`);
      if (vm.notices.length > 20) vm.notices.shift();
      break;
  }
}
