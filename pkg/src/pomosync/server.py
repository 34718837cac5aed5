"""The virtual timer on a server: authoritative session state over sockets.

One listener speaks three dialects, distinguished by the first bytes of a
connection:

  * newline-delimited JSON (the primary protocol; first line must be hello),
  * ``GET /status/<session_id>`` one-shot HTTP returning the presence document,
  * ``GET /ws`` upgraded to a WebSocket carrying the same JSON messages, one
    per text frame (this is the browser-facing stream the dashboard uses).

All commands for a session are applied under one lock, so the event log is a
total order and every subscriber sees the same events in the same sequence.
Clients never compute transitions: every event message echoes the phase and
absolute deadline after the event, and countdowns are rendered client-side.
"""

from __future__ import annotations

import argparse
import base64
import hashlib
import itertools
import json
import logging
import os
import queue
import re
import socket
import struct
import threading
import time
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, BinaryIO, Callable

from . import session as session_mod
from . import timer, wire
from .archive import Archive, date_of_ms, replay_ledger, resolve_timezone
from .errors import DomainError
from .ledger import (
    Advice,
    Ledger,
    NegativeEstimate,
    SplitRequired,
    Story,
    StoryStatus,
    UnknownPomodoro,
    UnknownStory,
    UntrackedStory,
    advice_for,
)
from .presence import presence_for
from .reports import generate_journal, write_journal_file
from .session import Member, SessionState
from .timer import Interruption, InterruptionKind, TimerConfig

logger = logging.getLogger(__name__)

SEND_QUEUE_LIMIT = 256
REPLY_CACHE_LIMIT = 512
_ID_PATTERN = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")
_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

_SENTINEL = object()


def wall_ms() -> int:
    return int(time.time() * 1000)


@dataclass
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 7524
    data_dir: str = "pomosync-data"
    defaults: TimerConfig = field(default_factory=TimerConfig)
    token: str = ""
    timezone: str | None = None
    tick_interval: float = 0.1


# ---------------------------------------------------------------------------
# WebSocket framing (RFC 6455 subset: unfragmented text/close/ping frames)
# ---------------------------------------------------------------------------


def ws_accept_key(client_key: str) -> str:
    digest = hashlib.sha1((client_key + _WS_GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


def ws_encode_frame(payload: bytes, opcode: int = 0x1, mask: bool = False) -> bytes:
    head = bytes([0x80 | opcode])
    length = len(payload)
    mask_bit = 0x80 if mask else 0
    if length < 126:
        head += bytes([mask_bit | length])
    elif length < 1 << 16:
        head += bytes([mask_bit | 126]) + struct.pack(">H", length)
    else:
        head += bytes([mask_bit | 127]) + struct.pack(">Q", length)
    if mask:
        key = os.urandom(4)
        masked = bytes(b ^ key[i % 4] for i, b in enumerate(payload))
        return head + key + masked
    return head + payload


def ws_read_frame(reader: BinaryIO) -> tuple[int, bytes] | None:
    """Read one frame; returns (opcode, payload) or None at EOF."""
    first = reader.read(2)
    if len(first) < 2:
        return None
    opcode = first[0] & 0x0F
    masked = bool(first[1] & 0x80)
    length = first[1] & 0x7F
    if length == 126:
        length = struct.unpack(">H", reader.read(2))[0]
    elif length == 127:
        length = struct.unpack(">Q", reader.read(8))[0]
    key = reader.read(4) if masked else b""
    payload = reader.read(length) if length else b""
    if len(payload) < length:
        return None
    if masked:
        payload = bytes(b ^ key[i % 4] for i, b in enumerate(payload))
    return opcode, payload


# ---------------------------------------------------------------------------
# Connection and session bookkeeping
# ---------------------------------------------------------------------------


class _Subscriber:
    """One connected client with its own bounded, ordered send queue."""

    def __init__(self, sock: socket.socket, framing: str) -> None:
        self.sock = sock
        self.framing = framing  # "ndjson" | "ws"
        self.queue: queue.Queue = queue.Queue(maxsize=SEND_QUEUE_LIMIT)
        self.session_id = ""
        self.member_id = ""
        self.alive = True  # accepting new messages
        self._closed = False
        self.sender = threading.Thread(target=self._send_loop, daemon=True)
        self.sender.start()

    def enqueue(self, line: bytes) -> bool:
        """Queue one encoded message; False means the client is too slow."""
        if not self.alive:
            return False
        try:
            self.queue.put_nowait(line)
            return True
        except queue.Full:
            return False

    def close(self) -> None:
        """Stop accepting messages, drain what is queued, then tear down."""
        if self._closed:
            return
        self._closed = True
        self.alive = False
        try:
            self.queue.put_nowait(_SENTINEL)
        except queue.Full:
            pass
        if threading.current_thread() is not self.sender:
            self.sender.join(timeout=1.0)
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        try:
            self.sock.close()
        except OSError:
            pass

    def _send_loop(self) -> None:
        while True:
            item = self.queue.get()
            if item is _SENTINEL:
                return
            try:
                if self.framing == "ws":
                    self.sock.sendall(ws_encode_frame(item.rstrip(b"\n")))
                else:
                    self.sock.sendall(item)
            except OSError:
                self.alive = False
                return


class _Slot:
    """One session's authoritative state plus its subscribers and archive."""

    def __init__(self, state: SessionState, ledger: Ledger, archive: Archive, today: str) -> None:
        # re-entrant: teardown paths may drop a subscriber while already
        # inside the serializer
        self.lock = threading.RLock()
        self.state = state
        self.ledger = ledger
        self.archive = archive
        self.subscribers: list[_Subscriber] = []
        self.replies: OrderedDict[tuple[str, str], list[bytes]] = OrderedDict()
        self.last_presence: tuple[str, int | None] | None = None
        self.current_date = today


class SyncServer:
    """Holds every session, serializes commands, broadcasts transitions."""

    def __init__(self, config: ServerConfig, clock: Callable[[], int] | None = None) -> None:
        self.config = config
        self.clock = clock or wall_ms
        self.tz = resolve_timezone(config.timezone)
        self.sessions: dict[str, _Slot] = {}
        self._sessions_lock = threading.Lock()
        self._seq = itertools.count(1)
        self._seq_lock = threading.Lock()
        self._listener: socket.socket | None = None
        self._threads: list[threading.Thread] = []
        self._running = False

    # -- lifecycle --

    def start(self) -> None:
        Path(self.config.data_dir).mkdir(parents=True, exist_ok=True)
        self._recover_sessions()
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        listener.bind((self.config.host, self.config.port))
        listener.listen(32)
        listener.settimeout(0.2)
        self._listener = listener
        self._running = True
        accept = threading.Thread(target=self._accept_loop, daemon=True, name="accept")
        ticker = threading.Thread(target=self._tick_loop, daemon=True, name="ticker")
        self._threads = [accept, ticker]
        accept.start()
        ticker.start()
        logger.info("listening on %s:%s", *listener.getsockname()[:2])

    def stop(self) -> None:
        self._running = False
        if self._listener is not None:
            try:
                self._listener.close()
            except OSError:
                pass
        for slot in list(self.sessions.values()):
            with slot.lock:
                for sub in list(slot.subscribers):
                    sub.close()
                slot.subscribers.clear()
        for thread in self._threads:
            thread.join(timeout=1.0)

    @property
    def address(self) -> tuple[str, int]:
        assert self._listener is not None
        return self._listener.getsockname()[:2]

    def _recover_sessions(self) -> None:
        for path in sorted(Path(self.config.data_dir).glob("*.jsonl")):
            archive = Archive(path)
            events = archive.events()
            if not events:
                continue
            state = session_mod.replay_session(events)
            slot = _Slot(
                state,
                replay_ledger(events),
                archive,
                date_of_ms(events[-1][1].at, self.tz),
            )
            self.sessions[state.session_id] = slot
            logger.info("recovered session %s (%d events)", state.session_id, len(events))

    # -- message plumbing --

    def _next_seq(self) -> int:
        with self._seq_lock:
            return next(self._seq)

    def _send(self, sub: _Subscriber, message: wire.WireMessage) -> None:
        if not sub.enqueue(wire.encode(message)):
            self._drop(sub)

    def _broadcast(self, slot: _Slot, lines: list[bytes]) -> None:
        dead = []
        for sub in slot.subscribers:
            for line in lines:
                if not sub.enqueue(line):
                    dead.append(sub)
                    break
        for sub in dead:
            slot.subscribers.remove(sub)
            sub.close()

    def _drop(self, sub: _Subscriber) -> None:
        slot = self.sessions.get(sub.session_id)
        if slot is not None:
            with slot.lock:
                if sub in slot.subscribers:
                    slot.subscribers.remove(sub)
        sub.close()

    def _commit(
        self,
        slot: _Slot,
        new_state: SessionState,
        member_id: str = "",
        command_id: str = "",
    ) -> list[bytes]:
        """Persist and broadcast the log entries ``new_state`` adds.

        Every event message echoes the authoritative phase and deadline after
        that event; the final event of a command burst carries ``burst_end``
        so the issuing client knows its command has fully applied.
        """
        before = slot.state
        delta = new_state.event_log[before.last_seq :]
        clock = before.clock
        lines = []
        now = self.clock()
        for position, (seq, event) in enumerate(delta):
            if event.type in timer.TIMER_EVENT_TYPES:
                clock = timer.apply_event(clock, before.config, event)
            slot.archive.append_event(before.session_id, seq, event)
            message = wire.make_event(
                self._next_seq(),
                now,
                log_seq=seq,
                event=event.to_dict(),
                phase=clock.phase.value,
                deadline=clock.phase_deadline,
                member_id=member_id,
                command_id=command_id,
                burst_end=bool(command_id) and position == len(delta) - 1,
            )
            lines.append(wire.encode(message))
        slot.state = new_state
        if lines:
            self._broadcast(slot, lines)
        return lines

    def _presence_lines(self, slot: _Slot, now: int) -> list[bytes]:
        connected = {sub.member_id for sub in slot.subscribers if sub.member_id}
        statuses = presence_for(slot.state, connected, now)
        message = wire.make_presence(
            self._next_seq(),
            now,
            session_id=slot.state.session_id,
            statuses=[s.to_dict() for s in statuses],
        )
        return [wire.encode(message)]

    def _refresh_presence(self, slot: _Slot, now: int, force: bool = False) -> None:
        clock = slot.state.clock
        minutes = (
            None
            if clock.phase_deadline is None
            else max(0, -(-(clock.phase_deadline - now) // timer.MS_PER_MINUTE))
        )
        signature = (clock.phase.value, minutes)
        if force or signature != slot.last_presence:
            slot.last_presence = signature
            self._broadcast(slot, self._presence_lines(slot, now))

    def _catch_up(self, slot: _Slot, now: int) -> None:
        """Apply every crossed deadline, then day rollover, before anything else.

        Advance runs first: its events carry the deadline timestamps they
        logically occurred at, which may predate the day boundary, and log
        timestamps must never decrease.
        """
        state, events = session_mod.advance_session(slot.state, now)
        if events:
            self._commit(slot, state)
        today = date_of_ms(now, self.tz)
        if today != slot.current_date:
            slot.current_date = today
            state, _ = session_mod.roll_day(slot.state, now)
            self._commit(slot, state)
        self._refresh_presence(slot, now)

    def poll(self, now: int | None = None) -> None:
        """Advance every session to ``now``; idempotent, safe to call anytime."""
        stamp = self.clock() if now is None else now
        with self._sessions_lock:
            slots = list(self.sessions.values())
        for slot in slots:
            with slot.lock:
                self._catch_up(slot, stamp)

    def _tick_loop(self) -> None:
        while self._running:
            try:
                self.poll()
            except Exception:
                logger.exception("poll failed")
            time.sleep(self.config.tick_interval)

    # -- accepting connections --

    def _accept_loop(self) -> None:
        assert self._listener is not None
        while self._running:
            try:
                sock, _addr = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            thread = threading.Thread(target=self._serve_connection, args=(sock,), daemon=True)
            thread.start()

    def _serve_connection(self, sock: socket.socket) -> None:
        sub: _Subscriber | None = None
        try:
            sock.settimeout(None)  # accepted sockets must block, whatever the listener does
            reader = sock.makefile("rb")
            first = reader.readline()
            if not first:
                sock.close()
                return
            if first.startswith(b"GET "):
                self._serve_http(sock, reader, first)
                return
            sub = _Subscriber(sock, "ndjson")
            self._ndjson_loop(sub, reader, first)
        except OSError:
            pass
        finally:
            if sub is not None:
                self._drop(sub)
            else:
                try:
                    sock.close()
                except OSError:
                    pass

    # -- HTTP-ish: status endpoint and websocket upgrade --

    def _serve_http(self, sock: socket.socket, reader: BinaryIO, request_line: bytes) -> None:
        headers: dict[str, str] = {}
        while True:
            line = reader.readline()
            if not line or line in (b"\r\n", b"\n"):
                break
            name, _, value = line.decode("latin-1").partition(":")
            headers[name.strip().lower()] = value.strip()
        parts = request_line.decode("latin-1").split()
        path = parts[1] if len(parts) >= 2 else "/"

        if headers.get("upgrade", "").lower() == "websocket":
            key = headers.get("sec-websocket-key", "")
            response = (
                "HTTP/1.1 101 Switching Protocols\r\n"
                "Upgrade: websocket\r\n"
                "Connection: Upgrade\r\n"
                f"Sec-WebSocket-Accept: {ws_accept_key(key)}\r\n\r\n"
            )
            sock.sendall(response.encode("latin-1"))
            sub = _Subscriber(sock, "ws")
            try:
                self._ws_loop(sub, reader)
            finally:
                self._drop(sub)
            return

        if path.startswith("/status/"):
            session_id = path[len("/status/") :].strip("/")
            slot = self.sessions.get(session_id)
            if slot is None:
                self._http_reply(sock, 404, {"error": f"no session {session_id!r}"})
                return
            now = self.clock()
            with slot.lock:
                self._catch_up(slot, now)
                connected = {s.member_id for s in slot.subscribers if s.member_id}
                statuses = [s.to_dict() for s in presence_for(slot.state, connected, now)]
            self._http_reply(
                sock,
                200,
                {
                    "v": wire.PROTOCOL_VERSION,
                    "session_id": session_id,
                    "server_time": now,
                    "statuses": statuses,
                },
            )
            return
        self._http_reply(sock, 404, {"error": "unknown path"})

    @staticmethod
    def _http_reply(sock: socket.socket, status: int, body: dict[str, Any]) -> None:
        text = json.dumps(body, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        payload = text.encode("utf-8")
        reason = {200: "OK", 404: "Not Found"}.get(status, "OK")
        head = (
            f"HTTP/1.1 {status} {reason}\r\n"
            "Content-Type: application/json\r\n"
            f"Content-Length: {len(payload)}\r\n"
            "Access-Control-Allow-Origin: *\r\n"
            "Connection: close\r\n\r\n"
        )
        try:
            sock.sendall(head.encode("latin-1") + payload)
        finally:
            try:
                sock.close()
            except OSError:
                pass

    # -- message loops --

    def _ndjson_loop(self, sub: _Subscriber, reader: BinaryIO, first: bytes) -> None:
        line: bytes | None = first
        while sub.alive:
            if line is None:
                line = reader.readline()
            if not line:
                return
            self._dispatch_line(sub, line)
            line = None

    def _ws_loop(self, sub: _Subscriber, reader: BinaryIO) -> None:
        while sub.alive:
            frame = ws_read_frame(reader)
            if frame is None:
                return
            opcode, payload = frame
            if opcode == 0x8:  # close
                return
            if opcode == 0x9:  # ping -> pong
                try:
                    sub.sock.sendall(ws_encode_frame(payload, opcode=0xA))
                except OSError:
                    return
                continue
            if opcode != 0x1:
                continue
            self._dispatch_line(sub, payload)

    def _dispatch_line(self, sub: _Subscriber, line: bytes) -> None:
        now = self.clock()
        try:
            message = wire.decode(line)
        except wire.UnsupportedVersion as exc:
            self._send(
                sub,
                wire.make_error(self._next_seq(), now, code=exc.code, reason=exc.message),
            )
            sub.alive = False
            return
        except wire.MalformedMessage as exc:
            self._send(
                sub,
                wire.make_error(self._next_seq(), now, code=exc.code, reason=exc.message),
            )
            return
        if message.type == wire.MSG_HELLO:
            self._handle_hello(sub, message)
        elif message.type == wire.MSG_COMMAND:
            self._handle_command(sub, message)
        else:
            self._send(
                sub,
                wire.make_error(
                    self._next_seq(),
                    now,
                    code="malformed_message",
                    reason=f"clients do not send {message.type!r} messages",
                ),
            )

    # -- hello / snapshot --

    def _handle_hello(self, sub: _Subscriber, message: wire.WireMessage) -> None:
        now = self.clock()
        payload = message.payload
        try:
            session_id = str(payload.get("session_id", ""))
            member_raw = payload.get("member")
            if not _ID_PATTERN.match(session_id):
                raise DomainError(f"invalid session id {session_id!r}")
            if not isinstance(member_raw, dict):
                raise DomainError("hello must carry a member object")
            member = Member.from_dict(member_raw)
            if not _ID_PATTERN.match(member.id):
                raise DomainError(f"invalid member id {member.id!r}")
            if self.config.token and payload.get("token", "") != self.config.token:
                self._send(
                    sub,
                    wire.make_error(
                        self._next_seq(), now, code="auth_failed", reason="bad session token"
                    ),
                )
                sub.alive = False
                return

            create = bool(payload.get("create", False))
            with self._sessions_lock:
                slot = self.sessions.get(session_id)
                if create:
                    if slot is not None:
                        raise DomainError(
                            f"session {session_id!r} already exists", session_id=session_id
                        )
                    config = (
                        TimerConfig.from_dict(payload["config"])
                        if payload.get("config")
                        else self.config.defaults
                    )
                    state = session_mod.create_session(config, member, session_id, now)
                    archive = Archive(Path(self.config.data_dir) / f"{session_id}.jsonl")
                    slot = _Slot(state, Ledger(), archive, date_of_ms(now, self.tz))
                    # the creation event is already in the log; persist it now
                    for seq, event in state.event_log:
                        archive.append_event(session_id, seq, event)
                    self.sessions[session_id] = slot
                elif slot is None:
                    raise DomainError(f"no session {session_id!r}", session_id=session_id)
        except DomainError as exc:
            self._send(
                sub,
                wire.make_error(
                    self._next_seq(), now, code=exc.code, reason=exc.message, details=exc.details
                ),
            )
            return

        with slot.lock:
            self._catch_up(slot, now)
            if member.id not in slot.state.member_ids() and not create:
                new_state = session_mod.join(slot.state, member, now)
                self._commit(slot, new_state, member_id=member.id)
            if sub.session_id and sub.session_id != session_id:
                # switching sessions: detach from the old one, keep the socket
                old = self.sessions.get(sub.session_id)
                if old is not None and sub in old.subscribers:
                    old.subscribers.remove(sub)
            sub.session_id = session_id
            sub.member_id = member.id
            if sub not in slot.subscribers:
                slot.subscribers.append(sub)
            snapshot = wire.make_snapshot(
                self._next_seq(),
                now,
                session=slot.state.to_dict(),
                ledger=slot.ledger.to_dict(),
            )
            self._send(sub, snapshot)
            self._refresh_presence(slot, now, force=True)

    # -- commands --

    def _handle_command(self, sub: _Subscriber, message: wire.WireMessage) -> None:
        now = self.clock()
        payload = message.payload
        command_id = str(payload.get("id", ""))
        name = payload.get("name", "")
        args = payload.get("args", {})
        if not sub.session_id or not sub.member_id:
            self._send(
                sub,
                wire.make_error(
                    self._next_seq(),
                    now,
                    code="not_joined",
                    reason="send hello before commands",
                    command_id=command_id,
                ),
            )
            return
        slot = self.sessions.get(sub.session_id)
        if slot is None:
            self._send(
                sub,
                wire.make_error(
                    self._next_seq(), now, code="unknown_session", reason="session is gone"
                ),
            )
            return
        if not isinstance(args, dict) or name not in wire.COMMAND_NAMES or not command_id:
            self._send(
                sub,
                wire.make_error(
                    self._next_seq(),
                    now,
                    code="malformed_message",
                    reason=f"bad command envelope (name={name!r})",
                    command_id=command_id,
                ),
            )
            return

        with slot.lock:
            key = (sub.member_id, command_id)
            if key in slot.replies:
                # exactly-once: acknowledge the retry with the original reply
                for line in slot.replies[key]:
                    sub.enqueue(line)
                return
            self._catch_up(slot, now)
            try:
                lines = self._apply_command(slot, sub.member_id, command_id, name, args, now)
            except DomainError as exc:
                error = wire.make_error(
                    self._next_seq(),
                    now,
                    code=exc.code,
                    reason=exc.message,
                    command_id=command_id,
                    details=exc.details,
                )
                encoded = wire.encode(error)
                self._remember_reply(slot, key, [encoded])
                sub.enqueue(encoded)
                return
            except Exception:
                logger.exception("command %s failed internally", name)
                error = wire.make_error(
                    self._next_seq(),
                    now,
                    code="internal_error",
                    reason=f"command {name!r} failed on the server",
                    command_id=command_id,
                )
                sub.enqueue(wire.encode(error))
                return
            self._remember_reply(slot, key, lines)
            self._refresh_presence(slot, now)

    @staticmethod
    def _remember_reply(slot: _Slot, key: tuple[str, str], lines: list[bytes]) -> None:
        slot.replies[key] = lines
        while len(slot.replies) > REPLY_CACHE_LIMIT:
            slot.replies.popitem(last=False)

    def _apply_command(
        self,
        slot: _Slot,
        member_id: str,
        command_id: str,
        name: str,
        args: dict[str, Any],
        now: int,
    ) -> list[bytes]:
        """Apply one command under the session lock; returns the reply lines."""
        state = slot.state
        if name == "ready":
            return self._commit(
                slot, session_mod.declare_ready(state, member_id, now), member_id, command_id
            )
        if name == "start":
            new_state, _ = session_mod.start_shared(state, member_id, now)
            return self._commit(slot, new_state, member_id, command_id)
        if name in ("void", "interrupt"):
            interruption = Interruption(
                kind=InterruptionKind(args.get("kind", "external")),
                deflected=bool(args.get("deflected", name == "interrupt")),
                at=now,
                note=str(args.get("note", "")),
                initiator=member_id,
            )
            if name == "void":
                new_state, _ = session_mod.void_shared(state, interruption)
            else:
                new_state, _ = session_mod.record_interruption(state, interruption)
            return self._commit(slot, new_state, member_id, command_id)
        if name == "rotate":
            return self._commit(
                slot, session_mod.rotate_pairs(state, now), member_id, command_id
            )
        if name == "leave":
            return self._commit(
                slot, session_mod.leave(state, member_id, now), member_id, command_id
            )
        if name == "estimate":
            return self._command_estimate(slot, member_id, command_id, args, now)
        if name == "track":
            return self._command_track(slot, member_id, command_id, args, now)
        if name == "story":
            return self._command_story(slot, member_id, command_id, args, now)
        if name == "journal":
            return self._command_journal(slot, member_id, command_id, args, now)
        raise DomainError(f"command {name!r} not implemented")

    def _command_estimate(
        self, slot: _Slot, member_id: str, command_id: str, args: dict[str, Any], now: int
    ) -> list[bytes]:
        story_id = str(args.get("story_id", ""))
        estimate = int(args.get("estimate", 0))
        # validate before mutating anything: the ledger and the log must agree
        existing = slot.ledger.stories.get(story_id)
        if existing is not None and not existing.tracked:
            raise UntrackedStory(f"story {story_id!r} is untracked exploration")
        if existing is None and not args.get("create", True):
            raise UnknownStory(f"no story {story_id!r}", story_id=story_id)
        if estimate < 0:
            raise NegativeEstimate(f"estimate must be >= 0, got {estimate}")
        if advice_for(estimate) is Advice.SPLIT_REQUIRED:
            raise SplitRequired(
                f"estimate of {estimate} half-units is more than 7 pomodoros: "
                "break the story down",
                advice=Advice.SPLIT_REQUIRED.value,
                story_id=story_id,
            )

        state = slot.state
        if existing is None:
            story = Story(
                id=story_id,
                title=str(args.get("title") or story_id),
                iteration_id=str(args.get("iteration_id", "")),
            )
            slot.ledger.add_story(story)
            state = session_mod.record_ledger_event(
                state, session_mod.STORY_ADDED, {"story": story.to_dict()}, now
            )
        _, advice = slot.ledger.estimate_story(story_id, estimate)
        state = session_mod.record_ledger_event(
            state,
            session_mod.STORY_ESTIMATED,
            {"story_id": story_id, "estimate": estimate, "advice": advice.value},
            now,
        )
        return self._commit(slot, state, member_id, command_id)

    def _command_track(
        self, slot: _Slot, member_id: str, command_id: str, args: dict[str, Any], now: int
    ) -> list[bytes]:
        seq = args.get("pomodoro_seq")
        if seq is None:
            seq = session_mod.last_completed_seq(slot.state)
            if seq is None:
                raise UnknownPomodoro("no completed pomodoro to track against")
        mark = slot.ledger.track(
            str(args.get("story_id", "")),
            int(seq),
            str(args.get("ptype", "")),
            int(args.get("effort", 2)),
            session_mod.pomodoro_outcomes(slot.state),
        )
        state = session_mod.record_ledger_event(
            slot.state, session_mod.MARK_TRACKED, {"mark": mark.to_dict()}, now
        )
        return self._commit(slot, state, member_id, command_id)

    def _command_story(
        self, slot: _Slot, member_id: str, command_id: str, args: dict[str, Any], now: int
    ) -> list[bytes]:
        op = args.get("op", "add")
        story_id = str(args.get("story_id", ""))
        if op == "add":
            story = Story(
                id=story_id,
                title=str(args.get("title") or story_id),
                tracked=bool(args.get("tracked", True)),
                iteration_id=str(args.get("iteration_id", "")),
            )
            slot.ledger.add_story(story)
            state = session_mod.record_ledger_event(
                slot.state, session_mod.STORY_ADDED, {"story": story.to_dict()}, now
            )
            return self._commit(slot, state, member_id, command_id)
        if op == "status":
            status = StoryStatus(args.get("status", "done"))
            slot.ledger.set_status(story_id, status)
            state = session_mod.record_ledger_event(
                slot.state,
                session_mod.STORY_STATUS_SET,
                {"story_id": story_id, "status": status.value},
                now,
            )
            return self._commit(slot, state, member_id, command_id)
        raise DomainError(f"unknown story op {op!r}")

    def _command_journal(
        self, slot: _Slot, member_id: str, command_id: str, args: dict[str, Any], now: int
    ) -> list[bytes]:
        date = str(args.get("date") or date_of_ms(now, self.tz))
        manual = [str(line) for line in args.get("lines", [])]
        entry = generate_journal(slot.archive, member_id, date, manual, tz=self.tz)
        state = session_mod.record_ledger_event(
            slot.state, session_mod.JOURNAL_WRITTEN, entry.to_dict(), now
        )
        lines = self._commit(slot, state, member_id, command_id)
        journal_dir = Path(self.config.data_dir) / "journals" / slot.state.session_id
        write_journal_file(entry, journal_dir)
        return lines


def serve(config: ServerConfig) -> SyncServer:
    """Start a server on the configured address and return it running."""
    server = SyncServer(config)
    server.start()
    return server


def _env(name: str, default: str) -> str:
    return os.environ.get(name, default)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="pomosync-server")
    parser.add_argument("--listen", default=_env("POMOSYNC_LISTEN", "127.0.0.1:7524"),
                        help="host:port to listen on")
    parser.add_argument("--data-dir", default=_env("POMOSYNC_DATA_DIR", "pomosync-data"))
    parser.add_argument("--token", default=_env("POMOSYNC_TOKEN", ""))
    parser.add_argument("--timezone", default=_env("POMOSYNC_TZ", "") or None,
                        help="civil timezone for day boundaries (default: server locale)")
    parser.add_argument("--work-minutes", type=int, default=25)
    parser.add_argument("--short-break", type=int, default=5)
    parser.add_argument("--long-break", type=int, default=15)
    parser.add_argument("--long-break-every", type=int, default=4)
    parser.add_argument("--tick-interval", type=float, default=0.1)
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    host, _, port = args.listen.partition(":")
    config = ServerConfig(
        host=host or "127.0.0.1",
        port=int(port or 7524),
        data_dir=args.data_dir,
        defaults=TimerConfig(
            work_duration=args.work_minutes,
            short_break=args.short_break,
            long_break=args.long_break,
            long_break_every=args.long_break_every,
        ),
        token=args.token,
        timezone=args.timezone,
        tick_interval=args.tick_interval,
    )
    server = serve(config)
    try:
        while True:
            time.sleep(1)
    except KeyboardInterrupt:
        server.stop()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
