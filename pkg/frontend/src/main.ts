// Browser entry point: connect to the server's WebSocket endpoint, fold the
// broadcast stream into the store, repaint on every message and every 250ms
// (the countdown is local rendering of an absolute server deadline).

import { encodeMessage, makeCommand, makeHello } from "./protocol.js";
import { mountSkeleton, paint, viewModel } from "./render.js";
import { DashboardState, applyLine, disconnected, initialState } from "./store.js";

const params = new URLSearchParams(window.location.search);
const sessionId = params.get("session") ?? "milan";
const memberId = params.get("member") ?? "dashboard";
const displayName = params.get("name") ?? memberId;
const role = params.get("role") ?? "developer";
const token = params.get("token") ?? "";
const wsUrl =
  params.get("ws") ?? `ws://${window.location.hostname || "127.0.0.1"}:7524/ws`;

let state: DashboardState = initialState(memberId);
let sock: WebSocket | null = null;

function repaint(): void {
  paint(viewModel(state, Date.now()), document);
}

function send(message: ReturnType<typeof makeCommand>): void {
  if (sock && sock.readyState === WebSocket.OPEN) {
    sock.send(encodeMessage(message));
  }
}

function hello(): void {
  send(makeHello(sessionId, { id: memberId, display_name: displayName, role, full_time: true }, token));
}

function connect(): void {
  sock = new WebSocket(wsUrl);
  sock.onopen = () => hello();
  sock.onmessage = (frame) => {
    state = applyLine(state, String(frame.data), Date.now());
    if (state.gapDetected) {
      hello(); // missed a broadcast: ask for a fresh snapshot
    }
    repaint();
  };
  sock.onclose = () => {
    state = disconnected(state);
    repaint();
    setTimeout(connect, 1500);
  };
  sock.onerror = () => sock?.close();
}

function wire(): void {
  const root = document.getElementById("app") as HTMLElement;
  mountSkeleton(root);
  document.getElementById("btn-ready")!.addEventListener("click", () => {
    send(makeCommand("ready"));
  });
  document.getElementById("btn-start")!.addEventListener("click", () => {
    send(makeCommand("start"));
  });
  document.getElementById("btn-void")!.addEventListener("click", () => {
    const kind = (document.getElementById("void-kind") as HTMLSelectElement).value;
    send(makeCommand("void", { kind, note: "voided from dashboard" }));
  });
  // one delegated handler: every track button maps onto the track command
  root.addEventListener("click", (ev) => {
    const target = ev.target as HTMLElement;
    if (target.classList.contains("btn-track") && !(target as HTMLButtonElement).disabled) {
      const story = target.dataset.story!;
      const ptype = window.prompt("pomodoro type", "Coding") ?? "Coding";
      send(makeCommand("track", { story_id: story, ptype, effort: 2 }));
    }
  });
  repaint();
  setInterval(repaint, 250);
  connect();
}

wire();
