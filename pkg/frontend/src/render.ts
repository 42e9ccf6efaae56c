// Canvas drawing: everything painted here comes straight from the view
// model, which in turn only holds parsed server frames.

import type { RollingSeries, ViewModel } from "./state.js";

const ARENA_RANGE = 1.6; // world units mapped to the arena half-width

export function drawArena(ctx: CanvasRenderingContext2D, vm: ViewModel, w: number, h: number): void {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#2a3142";
  ctx.lineWidth = 1;
  ctx.strokeRect(0.5, 0.5, w - 1, h - 1);
  // target crosshair at the origin
  const cx = w / 2;
  const cy = h / 2;
  ctx.beginPath();
  ctx.moveTo(cx - 8, cy);
  ctx.lineTo(cx + 8, cy);
  ctx.moveTo(cx, cy - 8);
  ctx.lineTo(cx, cy + 8);
  ctx.strokeStyle = "#3d4660";
  ctx.stroke();

  const toPixel = (p: number[]): [number, number] => [
    cx + ((p[0] ?? 0) / ARENA_RANGE) * (w / 2),
    cy - ((p[1] ?? 0) / ARENA_RANGE) * (h / 2),
  ];

  // state trail
  ctx.beginPath();
  vm.phiSeries.points.forEach((pt, k) => {
    const [x, y] = toPixel(pt.values);
    if (k === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  });
  ctx.strokeStyle = "#4f6b9e";
  ctx.stroke();

  if (vm.lastTick) {
    const [x, y] = toPixel(vm.lastTick.phi);
    ctx.beginPath();
    ctx.arc(x, y, 7, 0, 2 * Math.PI);
    ctx.fillStyle = vm.figureVisible ? "#ffd75e" : "#8fd0ff";
    ctx.fill();
    if (vm.figureVisible) {
      ctx.beginPath();
      ctx.arc(x, y, 14, 0, 2 * Math.PI);
      ctx.strokeStyle = "#ffd75e";
      ctx.stroke();
    }
  }
}

export function drawSeries(
  ctx: CanvasRenderingContext2D,
  series: RollingSeries,
  w: number,
  h: number,
  colors: string[],
): void {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#2a3142";
  ctx.strokeRect(0.5, 0.5, w - 1, h - 1);
  const pts = series.points;
  if (pts.length < 2) return;
  const dims = pts[0].values.length;
  let lo = Infinity;
  let hi = -Infinity;
  for (const p of pts) {
    for (const v of p.values) {
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
  }
  if (!(hi > lo)) {
    hi = lo + 1;
  }
  const pad = 0.1 * (hi - lo);
  lo -= pad;
  hi += pad;
  for (let d = 0; d < dims; d++) {
    ctx.beginPath();
    pts.forEach((p, k) => {
      const x = (k / (pts.length - 1)) * (w - 4) + 2;
      const y = h - 2 - ((p.values[d] - lo) / (hi - lo)) * (h - 4);
      if (k === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    });
    ctx.strokeStyle = colors[d % colors.length];
    ctx.stroke();
  }
}

export function gaugeText(vm: ViewModel): string {
  const f = vm.fSeries.latest();
  if (!f) return "F: n/a";
  return `F: ${f.values[0].toFixed(4)} (tick ${f.j})`;
}

export function statusText(vm: ViewModel): string {
  const who = vm.player === null ? "spectator" : `player ${vm.player}`;
  const tick = vm.lastTick ? `tick ${vm.lastTick.j}` : "no ticks yet";
  const end = vm.ended ? ` | ended: ${vm.ended.termination}` : "";
  return `${vm.status} | ${vm.scenario} (${vm.mode}) | ${who} | set ${vm.setIndex} | ${tick}${end}`;
}
