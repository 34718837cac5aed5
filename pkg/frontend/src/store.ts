// One state store; renders derive from it as pure functions.
//
// The store never computes timer transitions. Phase and deadline are copied
// verbatim from snapshots and broadcast events; membership, readiness, the
// pairing, and the story board are folded from the same events the server
// logged, so the board always mirrors the authoritative record.

import { WireMessage, parseMessage } from "./protocol.js";
import { estimateSkew } from "./countdown.js";

export type Phase = "idle" | "work" | "short_break" | "long_break";

export interface MemberInfo {
  id: string;
  display_name: string;
  role: string;
  full_time: boolean;
}

export interface StoryInfo {
  id: string;
  title: string;
  estimate: number; // half-pomodoro units
  tracked: boolean;
  status: "planned" | "in_progress" | "done";
  iteration_id: string;
}

export interface MarkInfo {
  story_id: string;
  pomodoro_seq: number;
  ptype: string;
  effort: number;
}

export interface PairingInfo {
  pairs: [string, string][];
  solo: string[];
}

export interface PresenceRow {
  member_id: string;
  state: string;
  message: string;
  minutes_remaining?: number;
}

export interface DashboardState {
  selfId: string;
  sessionId: string;
  connected: boolean;
  stale: boolean;
  gapDetected: boolean;
  phase: Phase;
  deadline: number | null;
  skewMs: number;
  lastLogSeq: number;
  members: MemberInfo[];
  ready: string[];
  pairing: PairingInfo;
  presence: PresenceRow[];
  stories: StoryInfo[];
  marks: MarkInfo[];
  lastError: string | null;
}

const READY_CLEARING = new Set([
  "started",
  "work_completed",
  "break_started",
  "break_ended",
  "voided",
]);

export function initialState(selfId: string): DashboardState {
  return {
    selfId,
    sessionId: "",
    connected: false,
    stale: true,
    gapDetected: false,
    phase: "idle",
    deadline: null,
    skewMs: 0,
    lastLogSeq: 0,
    members: [],
    ready: [],
    pairing: { pairs: [], solo: [] },
    presence: [],
    stories: [],
    marks: [],
    lastError: null,
  };
}

function foldSnapshot(state: DashboardState, payload: Record<string, any>): DashboardState {
  const session = payload.session;
  const ledger = payload.ledger;
  return {
    ...state,
    sessionId: session.session_id,
    stale: false,
    gapDetected: false,
    phase: session.clock.phase,
    deadline: session.clock.phase_deadline,
    lastLogSeq: payload.last_seq,
    members: session.members,
    ready: [...session.ready],
    pairing: session.pairing,
    stories: ledger.stories,
    marks: ledger.marks,
    lastError: null,
  };
}

function foldEventData(state: DashboardState, type: string, data: Record<string, any>): DashboardState {
  switch (type) {
    case "member_joined":
    case "session_created":
      return { ...state, members: [...state.members, data.member] };
    case "member_left":
      return {
        ...state,
        members: state.members.filter((m) => m.id !== data.member_id),
        ready: state.ready.filter((id) => id !== data.member_id),
      };
    case "ready_declared":
      return state.ready.includes(data.member_id)
        ? state
        : { ...state, ready: [...state.ready, data.member_id] };
    case "pairs_rotated":
      return { ...state, pairing: data.pairing };
    case "story_added":
      return { ...state, stories: [...state.stories, data.story] };
    case "story_estimated":
      return {
        ...state,
        stories: state.stories.map((s) =>
          s.id === data.story_id ? { ...s, estimate: data.estimate } : s,
        ),
      };
    case "story_status_set":
      return {
        ...state,
        stories: state.stories.map((s) =>
          s.id === data.story_id ? { ...s, status: data.status } : s,
        ),
      };
    case "mark_tracked":
      return { ...state, marks: [...state.marks, data.mark] };
    default:
      return state;
  }
}

function foldEvent(state: DashboardState, payload: Record<string, any>): DashboardState {
  const logSeq: number = payload.log_seq;
  if (logSeq <= state.lastLogSeq) {
    return state; // duplicate delivery (e.g. a command retry ack)
  }
  if (logSeq !== state.lastLogSeq + 1) {
    // missed a broadcast: freeze and wait for a snapshot resync
    return { ...state, gapDetected: true, stale: true };
  }
  const event = payload.event;
  let next = foldEventData(state, event.type, event.data ?? {});
  if (READY_CLEARING.has(event.type)) {
    next = { ...next, ready: [] };
  }
  return {
    ...next,
    lastLogSeq: logSeq,
    phase: payload.phase,
    deadline: payload.deadline,
  };
}

export function observe(
  state: DashboardState,
  message: WireMessage,
  localNow: number,
): DashboardState {
  const synced = { ...state, skewMs: estimateSkew(message.server_time, localNow), connected: true };
  switch (message.type) {
    case "snapshot":
      return foldSnapshot(synced, message.payload);
    case "event":
      return foldEvent(synced, message.payload);
    case "presence":
      return { ...synced, presence: message.payload.statuses };
    case "error":
      return { ...synced, lastError: message.payload.reason ?? message.payload.code };
    default:
      return synced;
  }
}

export function applyLine(state: DashboardState, line: string, localNow: number): DashboardState {
  return observe(state, parseMessage(line), localNow);
}

export function disconnected(state: DashboardState): DashboardState {
  return { ...state, connected: false, stale: true };
}

export function actualUnits(state: DashboardState, storyId: string): number {
  return state.marks
    .filter((m) => m.story_id === storyId)
    .reduce((sum, m) => sum + m.effort, 0);
}

export function markCount(state: DashboardState, storyId: string): number {
  return state.marks.filter((m) => m.story_id === storyId).length;
}

export function missingReady(state: DashboardState): string[] {
  return state.members.map((m) => m.id).filter((id) => !state.ready.includes(id)).sort();
}
