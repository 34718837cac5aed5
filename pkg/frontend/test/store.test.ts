import { describe, expect, it } from "vitest";

import { WireMessage } from "../src/protocol.js";
import { DashboardState, applyLine, initialState, observe } from "../src/store.js";

const CONFIG = { work_duration: 25, short_break: 5, long_break: 15, long_break_every: 4 };

function snapshotMessage(overrides: Record<string, any> = {}): WireMessage {
  return {
    v: 1,
    type: "snapshot",
    seq: 1,
    server_time: 1_000,
    payload: {
      last_seq: 3,
      session: {
        session_id: "milan",
        config: CONFIG,
        clock: {
          phase: "idle",
          phase_started_at: null,
          phase_deadline: null,
          consecutive_completed: 0,
          total_completed_today: 0,
        },
        members: [
          { id: "alice", display_name: "Alice", role: "developer", full_time: true },
          { id: "bob", display_name: "Bob", role: "developer", full_time: true },
        ],
        ready: ["alice"],
        pairing: { pairs: [["alice", "bob"]], solo: [] },
        rotation: 0,
        event_log: [],
        ...overrides,
      },
      ledger: {
        stories: [
          {
            id: "S-1",
            title: "Login",
            estimate: 6,
            tracked: true,
            status: "planned",
            iteration_id: "IT-1",
            legacy_points: "",
          },
        ],
        marks: [],
        types: [],
        iterations: ["IT-1"],
      },
    },
  };
}

function eventMessage(
  logSeq: number,
  type: string,
  data: Record<string, any>,
  phase = "idle",
  deadline: number | null = null,
  serverTime = 2_000,
): WireMessage {
  return {
    v: 1,
    type: "event",
    seq: logSeq + 10,
    server_time: serverTime,
    payload: { log_seq: logSeq, event: { type, at: serverTime, data }, phase, deadline },
  };
}

function base(): DashboardState {
  return observe(initialState("alice"), snapshotMessage(), 1_000);
}

describe("snapshot folding", () => {
  it("adopts phase, deadline, members, ready, and the story board", () => {
    const state = base();
    expect(state.sessionId).toBe("milan");
    expect(state.phase).toBe("idle");
    expect(state.deadline).toBeNull();
    expect(state.members.map((m) => m.id)).toEqual(["alice", "bob"]);
    expect(state.ready).toEqual(["alice"]);
    expect(state.stories[0].id).toBe("S-1");
    expect(state.lastLogSeq).toBe(3);
    expect(state.stale).toBe(false);
  });

  it("estimates skew from server_time on every message", () => {
    const state = observe(initialState("a"), snapshotMessage(), 400);
    expect(state.skewMs).toBe(600);
  });
});

describe("event folding", () => {
  it("copies phase and deadline verbatim, never computing them", () => {
    const started = eventMessage(
      4,
      "started",
      { initiator: "alice", participants: { pairs: [], solo: [] }, override: false },
      "work",
      1_502_000,
    );
    const state = observe(base(), started, 2_000);
    expect(state.phase).toBe("work");
    expect(state.deadline).toBe(1_502_000);
    expect(state.lastLogSeq).toBe(4);
  });

  it("clears the ready roster on every transition event", () => {
    const state = observe(
      base(),
      eventMessage(4, "started", { initiator: "a", participants: {}, override: false }, "work", 9),
      2_000,
    );
    expect(state.ready).toEqual([]);
  });

  it("folds membership and readiness from the log", () => {
    let state = base();
    state = observe(
      state,
      eventMessage(4, "member_joined", {
        member: { id: "cara", display_name: "Cara", role: "coach", full_time: true },
      }),
      2_000,
    );
    state = observe(state, eventMessage(5, "ready_declared", { member_id: "cara" }), 2_100);
    expect(state.members.map((m) => m.id)).toEqual(["alice", "bob", "cara"]);
    expect(state.ready).toContain("cara");
    state = observe(state, eventMessage(6, "member_left", { member_id: "cara" }), 2_200);
    expect(state.members.map((m) => m.id)).toEqual(["alice", "bob"]);
    expect(state.ready).not.toContain("cara");
  });

  it("folds the story board: estimates, marks, status moves", () => {
    let state = base();
    state = observe(
      state,
      eventMessage(4, "story_estimated", { story_id: "S-1", estimate: 8, advice: "ok" }),
      2_000,
    );
    state = observe(
      state,
      eventMessage(5, "mark_tracked", {
        mark: { story_id: "S-1", pomodoro_seq: 2, ptype: "Coding", effort: 2 },
      }),
      2_100,
    );
    state = observe(
      state,
      eventMessage(6, "story_status_set", { story_id: "S-1", status: "in_progress" }),
      2_200,
    );
    expect(state.stories[0].estimate).toBe(8);
    expect(state.marks).toHaveLength(1);
    expect(state.stories[0].status).toBe("in_progress");
  });

  it("adopts a rotated pairing verbatim from the event", () => {
    const state = observe(
      base(),
      eventMessage(4, "pairs_rotated", { pairing: { pairs: [["bob", "alice"]], solo: [] } }),
      2_000,
    );
    expect(state.pairing.pairs).toEqual([["bob", "alice"]]);
  });
});

describe("gap handling", () => {
  it("ignores duplicate deliveries", () => {
    const state = base();
    const dup = observe(state, eventMessage(3, "ready_declared", { member_id: "bob" }), 2_000);
    expect(dup.ready).toEqual(["alice"]);
    expect(dup.lastLogSeq).toBe(3);
  });

  it("freezes on a missed sequence number until resync", () => {
    const state = observe(
      base(),
      eventMessage(6, "ready_declared", { member_id: "bob" }, "idle", null),
      2_000,
    );
    expect(state.gapDetected).toBe(true);
    expect(state.stale).toBe(true);
    expect(state.lastLogSeq).toBe(3); // nothing applied
    // a snapshot clears the freeze
    const healed = observe(state, snapshotMessage(), 3_000);
    expect(healed.gapDetected).toBe(false);
    expect(healed.stale).toBe(false);
  });
});

describe("other message types", () => {
  it("keeps the latest presence list", () => {
    const presence: WireMessage = {
      v: 1,
      type: "presence",
      seq: 9,
      server_time: 2_000,
      payload: {
        session_id: "milan",
        statuses: [
          {
            member_id: "alice",
            state: "do_not_disturb",
            message: "do not disturb — 15m left",
            minutes_remaining: 15,
          },
        ],
      },
    };
    const state = observe(base(), presence, 2_000);
    expect(state.presence[0].minutes_remaining).toBe(15);
  });

  it("surfaces server error reasons", () => {
    const error: WireMessage = {
      v: 1,
      type: "error",
      seq: 9,
      server_time: 2_000,
      payload: { code: "not_all_ready", reason: "waiting for bob" },
    };
    expect(observe(base(), error, 2_000).lastError).toBe("waiting for bob");
  });

  it("rejects unknown protocol versions at the parse edge", () => {
    expect(() =>
      applyLine(initialState("a"), '{"v":2,"type":"event","seq":1,"server_time":0,"payload":{}}', 0),
    ).toThrow(/unsupported/);
  });
});
