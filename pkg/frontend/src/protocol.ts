// Wire protocol mirror: the dashboard speaks the same versioned JSON
// envelopes as every other client, one message per WebSocket text frame.

export const PROTOCOL_VERSION = 1;

export type MessageType = "hello" | "snapshot" | "command" | "event" | "presence" | "error";

export interface WireMessage {
  v: number;
  type: MessageType;
  seq: number;
  server_time: number;
  payload: Record<string, any>;
}

const MESSAGE_TYPES = new Set(["hello", "snapshot", "command", "event", "presence", "error"]);

export function parseMessage(line: string): WireMessage {
  const raw = JSON.parse(line);
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new Error("message must be a JSON object");
  }
  if (raw.v !== PROTOCOL_VERSION) {
    throw new Error(`unsupported protocol version ${raw.v}`);
  }
  if (!MESSAGE_TYPES.has(raw.type)) {
    throw new Error(`unknown message type ${raw.type}`);
  }
  if (typeof raw.seq !== "number" || typeof raw.server_time !== "number") {
    throw new Error("seq and server_time must be numbers");
  }
  if (typeof raw.payload !== "object" || raw.payload === null) {
    throw new Error("payload must be an object");
  }
  return raw as WireMessage;
}

export function encodeMessage(message: WireMessage): string {
  return JSON.stringify(message);
}

let outSeq = 0;

export interface MemberIdentity {
  id: string;
  display_name: string;
  role: string;
  full_time: boolean;
}

export function makeHello(
  sessionId: string,
  member: MemberIdentity,
  token = "",
  create = false,
): WireMessage {
  return {
    v: PROTOCOL_VERSION,
    type: "hello",
    seq: ++outSeq,
    server_time: Date.now(),
    payload: { session_id: sessionId, member, create, token },
  };
}

export function makeCommand(
  name: string,
  args: Record<string, any> = {},
  commandId?: string,
): WireMessage {
  const id = commandId ?? `dash-${Date.now().toString(36)}-${(++outSeq).toString(36)}`;
  return {
    v: PROTOCOL_VERSION,
    type: "command",
    seq: ++outSeq,
    server_time: Date.now(),
    payload: { id, name, args },
  };
}
