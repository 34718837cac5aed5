// View model and DOM painting. viewModel() is a pure function of the store
// and a local timestamp; paint() applies a model to the mounted skeleton.

import { formatCountdown, minutesLeft, remainingMs } from "./countdown.js";
import {
  DashboardState,
  StoryInfo,
  actualUnits,
  markCount,
  missingReady,
} from "./store.js";

const PHASE_LABEL: Record<string, string> = {
  idle: "Idle",
  work: "Work",
  short_break: "Short break",
  long_break: "Long break",
};

export interface StoryCard {
  id: string;
  title: string;
  estimateLabel: string; // pomodoros with one decimal
  crosses: number;
  overrun: boolean;
  untracked: boolean;
}

export interface ViewModel {
  phase: string;
  phaseLabel: string;
  countdownMs: number;
  countdown: string;
  title: string;
  staleBanner: boolean;
  breakBanner: boolean;
  presence: { memberId: string; label: string; state: string }[];
  roster: { memberId: string; name: string; ready: boolean }[];
  rosterVisible: boolean;
  startEnabled: boolean;
  startTooltip: string;
  readyEnabled: boolean;
  voidEnabled: boolean;
  trackingEnabled: boolean;
  columns: { planned: StoryCard[]; in_progress: StoryCard[]; done: StoryCard[] };
  errorText: string | null;
}

function pomodoros(units: number): string {
  return (units / 2).toFixed(1);
}

function card(state: DashboardState, story: StoryInfo): StoryCard {
  const crosses = markCount(state, story.id);
  return {
    id: story.id,
    title: story.title,
    estimateLabel: pomodoros(story.estimate),
    crosses,
    overrun: story.tracked && actualUnits(state, story.id) > story.estimate && story.estimate > 0,
    untracked: !story.tracked,
  };
}

export function viewModel(state: DashboardState, localNow: number): ViewModel {
  const inBreak = state.phase === "short_break" || state.phase === "long_break";
  const ms = remainingMs(state.deadline, state.skewMs, localNow);
  const missing = missingReady(state);
  const self = state.members.find((m) => m.id === state.selfId);
  const coach = self?.role === "coach";
  const live = state.connected && !state.stale;
  const startable = state.phase === "idle" && live && (missing.length === 0 || coach);

  const columns: ViewModel["columns"] = { planned: [], in_progress: [], done: [] };
  for (const story of state.stories) {
    columns[story.status]?.push(card(state, story));
  }

  const minutes = minutesLeft(ms);
  return {
    phase: state.phase,
    phaseLabel: PHASE_LABEL[state.phase] ?? state.phase,
    countdownMs: ms,
    countdown: state.deadline === null ? "--:--" : formatCountdown(ms),
    title:
      state.phase === "work"
        ? `${minutes}m left – pomosync`
        : `${PHASE_LABEL[state.phase] ?? state.phase} – pomosync`,
    staleBanner: !live,
    breakBanner: inBreak,
    presence: state.presence.map((p) => ({
      memberId: p.member_id,
      label: p.message,
      state: p.state,
    })),
    roster: state.members.map((m) => ({
      memberId: m.id,
      name: m.display_name,
      ready: state.ready.includes(m.id),
    })),
    rosterVisible: state.phase === "idle",
    startEnabled: startable,
    startTooltip:
      missing.length === 0 || state.phase !== "idle"
        ? ""
        : coach
          ? `coach override; waiting for: ${missing.join(", ")}`
          : `waiting for: ${missing.join(", ")}`,
    readyEnabled: state.phase === "idle" && live,
    voidEnabled: state.phase === "work" && live,
    trackingEnabled: live && !inBreak, // break is break: no tracking during breaks
    columns,
    errorText: state.lastError,
  };
}

// -- DOM side ---------------------------------------------------------------

const SKELETON = `
  <div id="banner-stale" class="banner stale" hidden>connection lost: state may be stale; commands disabled until resync</div>
  <header>
    <div id="phase" class="phase-idle">Idle</div>
    <div id="countdown">--:--</div>
  </header>
  <div id="banner-break" class="banner break" hidden>Break is break: tracking re-opens when work resumes</div>
  <section id="controls">
    <button id="btn-ready">ready</button>
    <button id="btn-start" disabled>start</button>
    <select id="void-kind"><option value="external">external</option><option value="internal">internal</option></select>
    <button id="btn-void" disabled>void</button>
  </section>
  <section id="presence"><h2>presence</h2><ul id="presence-list"></ul></section>
  <section id="roster"><h2>ready</h2><ul id="roster-list"></ul></section>
  <section id="board">
    <div class="column"><h2>Planned</h2><div id="board-planned"></div></div>
    <div class="column"><h2>In progress</h2><div id="board-in_progress"></div></div>
    <div class="column"><h2>Done</h2><div id="board-done"></div></div>
  </section>
  <div id="error" class="error" hidden></div>
`;

export function mountSkeleton(root: HTMLElement): void {
  root.innerHTML = SKELETON;
}

function paintCards(container: HTMLElement, cards: StoryCard[], trackingEnabled: boolean): void {
  container.innerHTML = "";
  for (const model of cards) {
    const el = container.ownerDocument.createElement("div");
    el.className = "card" + (model.overrun ? " overrun" : "") + (model.untracked ? " untracked" : "");
    el.dataset.story = model.id;
    const crosses = "✗".repeat(model.crosses);
    el.innerHTML =
      `<div class="card-title"></div>` +
      `<div class="card-meta"><span class="estimate"></span>` +
      `<span class="crosses">${crosses}</span></div>` +
      `<button class="btn-track" data-story="${model.id}" ${trackingEnabled ? "" : "disabled"}>track</button>`;
    (el.querySelector(".card-title") as HTMLElement).textContent = model.title;
    (el.querySelector(".estimate") as HTMLElement).textContent = model.estimateLabel;
    container.appendChild(el);
  }
}

export function paint(model: ViewModel, doc: Document): void {
  const get = (id: string) => doc.getElementById(id) as HTMLElement;
  get("phase").textContent = model.phaseLabel;
  get("phase").className = `phase-${model.phase}`;
  get("countdown").textContent = model.countdown;
  doc.title = model.title;
  get("banner-stale").hidden = !model.staleBanner;
  get("banner-break").hidden = !model.breakBanner;

  const presence = get("presence-list");
  presence.innerHTML = "";
  for (const row of model.presence) {
    const li = doc.createElement("li");
    li.className = `presence-${row.state}`;
    li.textContent = `${row.memberId}: ${row.label}`;
    presence.appendChild(li);
  }

  get("roster").hidden = !model.rosterVisible;
  const roster = get("roster-list");
  roster.innerHTML = "";
  for (const row of model.roster) {
    const li = doc.createElement("li");
    li.textContent = `${row.ready ? "[ready]" : "[  ...  ]"} ${row.name}`;
    roster.appendChild(li);
  }

  const start = get("btn-start") as HTMLButtonElement;
  start.disabled = !model.startEnabled;
  start.title = model.startTooltip;
  (get("btn-ready") as HTMLButtonElement).disabled = !model.readyEnabled;
  (get("btn-void") as HTMLButtonElement).disabled = !model.voidEnabled;

  paintCards(get("board-planned"), model.columns.planned, model.trackingEnabled);
  paintCards(get("board-in_progress"), model.columns.in_progress, model.trackingEnabled);
  paintCards(get("board-done"), model.columns.done, model.trackingEnabled);

  const error = get("error");
  error.hidden = model.errorText === null;
  error.textContent = model.errorText ?? "";
}
