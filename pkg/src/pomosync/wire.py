"""Versioned wire protocol: newline-delimited UTF-8 JSON messages.

Every message, in either direction, is one envelope per line:

    {"v": 1, "type": ..., "seq": ..., "server_time": ..., "payload": {...}}

Encoding is canonical (sorted keys, no whitespace) so any two encoders
produce identical bytes and golden vectors can pin the format. ``seq`` is a
per-sender message counter; the session event-log sequence that clients use
for gap detection travels inside event payloads as ``log_seq``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any

from .errors import DomainError

PROTOCOL_VERSION = 1

MSG_HELLO = "hello"
MSG_SNAPSHOT = "snapshot"
MSG_COMMAND = "command"
MSG_EVENT = "event"
MSG_PRESENCE = "presence"
MSG_ERROR = "error"

MESSAGE_TYPES = frozenset(
    {MSG_HELLO, MSG_SNAPSHOT, MSG_COMMAND, MSG_EVENT, MSG_PRESENCE, MSG_ERROR}
)

COMMAND_NAMES = frozenset(
    {
        "start",
        "ready",
        "void",
        "interrupt",
        "track",
        "estimate",
        "rotate",
        "journal",
        "story",
        "leave",
    }
)


class MalformedMessage(DomainError):
    code = "malformed_message"


class UnsupportedVersion(DomainError):
    code = "unsupported_version"


@dataclass(frozen=True)
class WireMessage:
    type: str
    seq: int
    server_time: int
    payload: dict[str, Any]
    v: int = PROTOCOL_VERSION

    def to_dict(self) -> dict[str, Any]:
        return {
            "v": self.v,
            "type": self.type,
            "seq": self.seq,
            "server_time": self.server_time,
            "payload": self.payload,
        }


def encode(message: WireMessage) -> bytes:
    """Canonical one-line encoding, newline terminated."""
    text = json.dumps(
        message.to_dict(), sort_keys=True, separators=(",", ":"), ensure_ascii=False
    )
    return text.encode("utf-8") + b"\n"


def decode(line: bytes | str) -> WireMessage:
    """Parse and validate one line.

    Raises MalformedMessage for anything that is not a well-formed envelope
    and UnsupportedVersion when ``v`` is not the protocol version.
    """
    if isinstance(line, bytes):
        try:
            line = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedMessage(f"not valid UTF-8: {exc}") from None
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedMessage(f"not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise MalformedMessage("message must be a JSON object")
    try:
        version = raw["v"]
        mtype = raw["type"]
        seq = raw["seq"]
        server_time = raw["server_time"]
        payload = raw["payload"]
    except KeyError as exc:
        raise MalformedMessage(f"missing envelope field {exc.args[0]!r}") from None
    if not isinstance(version, int) or isinstance(version, bool):
        raise MalformedMessage("v must be an integer")
    if version != PROTOCOL_VERSION:
        raise UnsupportedVersion(f"protocol version {version} unsupported", v=version)
    if mtype not in MESSAGE_TYPES:
        raise MalformedMessage(f"unknown message type {mtype!r}")
    if not isinstance(seq, int) or isinstance(seq, bool):
        raise MalformedMessage("seq must be an integer")
    if not isinstance(server_time, int) or isinstance(server_time, bool):
        raise MalformedMessage("server_time must be an integer")
    if not isinstance(payload, dict):
        raise MalformedMessage("payload must be an object")
    return WireMessage(type=mtype, seq=seq, server_time=server_time, payload=payload)


# -- payload builders: both sides construct messages through these so the
#    shapes stay in one place --


def make_hello(
    seq: int,
    local_time: int,
    *,
    session_id: str,
    member: dict[str, Any],
    create: bool = False,
    config: dict[str, Any] | None = None,
    token: str = "",
) -> WireMessage:
    payload: dict[str, Any] = {
        "session_id": session_id,
        "member": member,
        "create": create,
        "token": token,
    }
    if config is not None:
        payload["config"] = config
    return WireMessage(MSG_HELLO, seq, local_time, payload)


def make_command(
    seq: int,
    local_time: int,
    *,
    command_id: str,
    name: str,
    args: dict[str, Any] | None = None,
) -> WireMessage:
    if name not in COMMAND_NAMES:
        raise MalformedMessage(f"unknown command {name!r}")
    return WireMessage(
        MSG_COMMAND, seq, local_time, {"id": command_id, "name": name, "args": args or {}}
    )


def make_snapshot(
    seq: int,
    server_time: int,
    *,
    session: dict[str, Any],
    ledger: dict[str, Any],
) -> WireMessage:
    payload = {"session": session, "ledger": ledger, "last_seq": len(session["event_log"])}
    return WireMessage(MSG_SNAPSHOT, seq, server_time, payload)


def make_event(
    seq: int,
    server_time: int,
    *,
    log_seq: int,
    event: dict[str, Any],
    phase: str,
    deadline: int | None,
    member_id: str = "",
    command_id: str = "",
    burst_end: bool = False,
) -> WireMessage:
    # phase/deadline echo the authoritative state after the event so clients
    # never compute transitions themselves. burst_end marks the last event a
    # command produced, which is the issuing client's acknowledgement.
    payload: dict[str, Any] = {
        "log_seq": log_seq,
        "event": event,
        "phase": phase,
        "deadline": deadline,
    }
    if member_id:
        payload["member_id"] = member_id
    if command_id:
        payload["command_id"] = command_id
    if burst_end:
        payload["burst_end"] = True
    return WireMessage(MSG_EVENT, seq, server_time, payload)


def make_presence(
    seq: int,
    server_time: int,
    *,
    session_id: str,
    statuses: list[dict[str, Any]],
) -> WireMessage:
    return WireMessage(
        MSG_PRESENCE, seq, server_time, {"session_id": session_id, "statuses": statuses}
    )


def make_error(
    seq: int,
    server_time: int,
    *,
    code: str,
    reason: str,
    command_id: str = "",
    details: dict[str, Any] | None = None,
) -> WireMessage:
    payload: dict[str, Any] = {"code": code, "reason": reason}
    if command_id:
        payload["command_id"] = command_id
    if details:
        payload["details"] = details
    return WireMessage(MSG_ERROR, seq, server_time, payload)
