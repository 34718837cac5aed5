"""Socket client for the sync server; used by the CLI and the test harness.

The client never computes timer transitions. It remembers the phase and
absolute deadline the server broadcast last, estimates clock skew from
``server_time`` on every message, and renders countdowns from those alone.
"""

from __future__ import annotations

import socket
import time
import uuid
from dataclasses import dataclass, field
from typing import Any, Callable, Iterator

from . import wire
from .timer import MS_PER_MINUTE


class ConnectionFailed(Exception):
    """Could not reach or keep talking to the server."""


class ReadTimeout(ConnectionFailed):
    """No message arrived within the socket timeout; the link may be fine."""


class ServerError(Exception):
    """The server rejected a command; mirrors the wire error payload."""

    def __init__(self, code: str, reason: str, details: dict[str, Any] | None = None) -> None:
        super().__init__(f"{code}: {reason}")
        self.code = code
        self.reason = reason
        self.details = details or {}


def local_ms() -> int:
    return int(time.time() * 1000)


@dataclass
class ClientView:
    """What a well-behaved client knows: snapshot plus the event stream."""

    session: dict[str, Any] = field(default_factory=dict)
    ledger: dict[str, Any] = field(default_factory=dict)
    phase: str = "idle"
    deadline: int | None = None
    last_log_seq: int = 0
    log: list[tuple[int, dict[str, Any]]] = field(default_factory=list)
    skew_ms: int = 0
    gap_detected: bool = False

    def apply_snapshot(self, message: wire.WireMessage) -> None:
        self.session = message.payload["session"]
        self.ledger = message.payload["ledger"]
        self.phase = self.session["clock"]["phase"]
        self.deadline = self.session["clock"]["phase_deadline"]
        self.log = [(int(seq), ev) for seq, ev in self.session["event_log"]]
        self.last_log_seq = message.payload["last_seq"]
        self.gap_detected = False

    def apply_event(self, message: wire.WireMessage) -> None:
        log_seq = int(message.payload["log_seq"])
        if log_seq <= self.last_log_seq:
            return  # duplicate delivery (command retry); already applied
        if log_seq != self.last_log_seq + 1:
            self.gap_detected = True
            return
        self.log.append((log_seq, message.payload["event"]))
        self.last_log_seq = log_seq
        self.phase = message.payload["phase"]
        self.deadline = message.payload["deadline"]

    def observe(self, message: wire.WireMessage, received_at: int) -> None:
        self.skew_ms = message.server_time - received_at
        if message.type == wire.MSG_SNAPSHOT:
            self.apply_snapshot(message)
        elif message.type == wire.MSG_EVENT:
            self.apply_event(message)

    def remaining_ms(self, local_now: int) -> int:
        if self.deadline is None:
            return 0
        return max(0, self.deadline - (local_now + self.skew_ms))

    def minutes_remaining(self, local_now: int) -> int:
        return -(-self.remaining_ms(local_now) // MS_PER_MINUTE)


class PomodoroClient:
    """Blocking line-oriented connection with a local ClientView."""

    def __init__(
        self,
        host: str,
        port: int,
        *,
        timeout: float = 5.0,
        now: Callable[[], int] = local_ms,
    ) -> None:
        self._now = now
        try:
            self.sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise ConnectionFailed(f"cannot connect to {host}:{port}: {exc}") from None
        self.sock.settimeout(timeout)
        self._buffer = bytearray()
        self.view = ClientView()
        self._seq = 0
        self.member_id = ""
        self.session_id = ""

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError:
            pass

    def __enter__(self) -> "PomodoroClient":
        return self

    def __exit__(self, *exc: Any) -> None:
        self.close()

    # -- low-level io --

    def _send(self, message: wire.WireMessage) -> None:
        try:
            self.sock.sendall(wire.encode(message))
        except OSError as exc:
            raise ConnectionFailed(f"send failed: {exc}") from None

    def _read_line(self) -> bytes:
        # hand-rolled buffering: a timed-out recv must not poison later reads
        while True:
            cut = self._buffer.find(b"\n")
            if cut >= 0:
                line = bytes(self._buffer[: cut + 1])
                del self._buffer[: cut + 1]
                return line
            try:
                chunk = self.sock.recv(65536)
            except socket.timeout:
                raise ReadTimeout("no message within the socket timeout") from None
            except OSError as exc:
                raise ConnectionFailed(f"read failed: {exc}") from None
            if not chunk:
                raise ConnectionFailed("server closed the connection")
            self._buffer.extend(chunk)

    def read_message(self) -> wire.WireMessage:
        """Read and fold one server message into the local view."""
        message = wire.decode(self._read_line())
        self.view.observe(message, self._now())
        return message

    def _next_seq(self) -> int:
        self._seq += 1
        return self._seq

    # -- protocol --

    def hello(
        self,
        session_id: str,
        member: dict[str, Any],
        *,
        create: bool = False,
        config: dict[str, Any] | None = None,
        token: str = "",
    ) -> wire.WireMessage:
        """Handshake; returns the snapshot or raises ServerError."""
        self._send(
            wire.make_hello(
                self._next_seq(),
                self._now(),
                session_id=session_id,
                member=member,
                create=create,
                config=config,
                token=token,
            )
        )
        while True:
            message = self.read_message()
            if message.type == wire.MSG_ERROR:
                p = message.payload
                raise ServerError(p["code"], p["reason"], p.get("details"))
            if message.type == wire.MSG_SNAPSHOT:
                self.session_id = session_id
                self.member_id = str(member.get("id", ""))
                return message

    def resync(self) -> wire.WireMessage:
        """Request a fresh snapshot (after a detected gap)."""
        return self.hello(self.session_id, {"id": self.member_id})

    def command(
        self, name: str, args: dict[str, Any] | None = None, *, command_id: str | None = None
    ) -> list[wire.WireMessage]:
        """Send one command and wait for its outcome.

        Returns the event messages the command produced (other interleaved
        broadcasts are folded into the view as they arrive); raises
        ServerError when the server answers with an error for this command.
        """
        command_id = command_id or uuid.uuid4().hex
        self._send(
            wire.make_command(
                self._next_seq(), self._now(), command_id=command_id, name=name, args=args
            )
        )
        collected: list[wire.WireMessage] = []
        while True:
            message = self.read_message()
            if message.type == wire.MSG_ERROR:
                p = message.payload
                if p.get("command_id", "") in ("", command_id):
                    raise ServerError(p["code"], p["reason"], p.get("details"))
                continue
            if message.type == wire.MSG_EVENT and message.payload.get("command_id") == command_id:
                collected.append(message)
                if message.payload.get("burst_end"):
                    return collected
            # other broadcasts keep streaming by; keep waiting for our ack

    def stream(self) -> Iterator[wire.WireMessage]:
        """Follow the broadcast stream; resyncs via snapshot on gaps."""
        while True:
            message = self.read_message()
            if self.view.gap_detected:
                self.resync()
                continue
            yield message

    def pump(self, stop: Callable[[], bool]) -> None:
        """Reader-thread body: fold broadcasts into the view until stopped."""
        while not stop():
            try:
                self.read_message()
            except ConnectionFailed:
                return
            if self.view.gap_detected:
                try:
                    self.resync()
                except (ConnectionFailed, ServerError):
                    return
