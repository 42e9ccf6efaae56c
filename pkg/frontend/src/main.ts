// Browser entry: connect, join, steer with pointer or arrow keys, render.

import { GameSocket } from "./net.js";
import { drawArena, drawSeries, gaugeText, statusText } from "./render.js";
import { fetchSessions, freePlayerId, roomMessage, sessionUrl } from "./room.js";
import { applyFrame, ViewModel } from "./state.js";

const params = new URLSearchParams(location.search);
const serverBase = params.get("server") ?? `${location.protocol}//${location.host}`;
const vm = new ViewModel();

const el = (id: string) => document.getElementById(id)!;
const arena = el("arena") as HTMLCanvasElement;
const epsChart = el("eps-chart") as HTMLCanvasElement;
const fChart = el("f-chart") as HTMLCanvasElement;

let socket: GameSocket | null = null;
let controlDim = 2;
const held = { x: 0, y: 0 };
const keys = new Set<string>();

function currentControl(): number[] {
  let x = held.x;
  let y = held.y;
  if (keys.has("ArrowLeft")) x -= 0.6;
  if (keys.has("ArrowRight")) x += 0.6;
  if (keys.has("ArrowDown")) y -= 0.6;
  if (keys.has("ArrowUp")) y += 0.6;
  return controlDim === 1 ? [x] : [x, y].slice(0, controlDim);
}

function connect(sessionId: string, player: number | null): void {
  socket?.close();
  const s = new GameSocket(sessionUrl(serverBase, sessionId), {
    onFrame: (frame) => {
      applyFrame(vm, frame);
      if (frame.type === "hello" && player !== null) {
        controlDim = frame.control_dims[player] ?? 2;
        s.join(player);
      }
      if (frame.type === "set-boundary") {
        flashBanner(`set ${frame.set} ended (${frame.reason}) @ tick ${frame.j}`);
      }
      if (frame.type === "figure-visible") {
        flashBanner(`hidden figure visible @ tick ${frame.j}`);
      }
    },
    onStatus: (status) => {
      vm.status = status;
      (el("reconnect") as HTMLButtonElement).hidden = status !== "closed";
    },
    onSkipped: (raw) => console.warn("skipped malformed frame", raw.slice(0, 120)),
  });
  socket = s;
  s.connect();
  (el("reconnect") as HTMLButtonElement).onclick = () => s.connect();
}

function flashBanner(text: string): void {
  const banner = el("banner");
  banner.textContent = text;
  banner.classList.add("show");
  setTimeout(() => banner.classList.remove("show"), 2500);
}

// pointer steering: offset from arena center, scaled to world units
arena.addEventListener("pointermove", (ev) => {
  const rect = arena.getBoundingClientRect();
  held.x = ((ev.clientX - rect.left) / rect.width - 0.5) * 2.4;
  held.y = (0.5 - (ev.clientY - rect.top) / rect.height) * 2.4;
});
arena.addEventListener("pointerleave", () => {
  held.x = 0;
  held.y = 0;
});
addEventListener("keydown", (ev) => keys.add(ev.key));
addEventListener("keyup", (ev) => keys.delete(ev.key));

// controls stream continuously (zero vectors while idle) within the
// throttle budget; the flush timer releases samples held by the limiter
setInterval(() => {
  if (socket) {
    socket.sendControl(currentControl());
    socket.flush();
  }
}, 50);

function renderLoop(): void {
  drawArena(arena.getContext("2d")!, vm, arena.width, arena.height);
  drawSeries(epsChart.getContext("2d")!, vm.epsSeries, epsChart.width, epsChart.height, [
    "#8fd0ff",
    "#ff9f80",
    "#b0ff9f",
    "#e39fff",
  ]);
  drawSeries(fChart.getContext("2d")!, vm.fSeries, fChart.width, fChart.height, ["#ffd75e"]);
  el("status").textContent = statusText(vm);
  el("gauge").textContent = gaugeText(vm);
  el("figure").textContent = vm.figureVisible
    ? "hidden figure: VISIBLE"
    : vm.figureEventTick !== null
      ? "hidden figure: seen earlier"
      : "hidden figure: not visible";
  // multi-user sessions only tick once the room is full, so flowing
  // frames are the reliable signal that both observers are present
  const present = vm.frames > 0 ? 2 : vm.player !== null ? 1 : 0;
  el("room-msg").textContent = roomMessage(vm.mode, present);
  const list = el("transcript");
  while (list.children.length < vm.transcript.length) {
    const u = vm.transcript[list.children.length];
    const li = document.createElement("li");
    const cell = u.cell ? ` cell [${u.cell.join(",")}]` : "";
    li.textContent = `#${u.n} [${u.t_start.toFixed(2)}, ${u.t_end.toFixed(2)}]${cell} omega=[${u.omega
      .map((x) => x.toFixed(3))
      .join(", ")}]`;
    list.appendChild(li);
  }
  const notices = el("notices");
  notices.textContent = vm.notices.slice(-3).join("\n");
  requestAnimationFrame(renderLoop);
}
requestAnimationFrame(renderLoop);

async function boot(): Promise<void> {
  const explicit = params.get("session");
  const playerParam = params.get("player");
  try {
    const sessions = await fetchSessions(serverBase);
    const ids = Object.keys(sessions);
    const sessionId = explicit ?? ids[0];
    if (!sessionId) {
      el("status").textContent = "no sessions on the server";
      return;
    }
    let player: number | null = playerParam !== null ? Number(playerParam) : null;
    if (player === null) {
      player = freePlayerId(sessions[sessionId] ?? { status: "", mode: "", players: [] }, 8);
    }
    connect(sessionId, player);
  } catch (err) {
    el("status").textContent = `server unreachable: ${err}`;
  }
}

el("join-form").addEventListener("submit", (ev) => {
  ev.preventDefault();
  const code = (el("join-code") as HTMLInputElement).value.trim();
  const player = Number((el("join-player") as HTMLInputElement).value || "0");
  if (code) connect(code, player);
});

void boot();
