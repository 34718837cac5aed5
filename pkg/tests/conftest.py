"""Shared harness: a server on a scripted clock plus blocking test clients."""

from __future__ import annotations

import threading
import time

import pytest

from pomosync.client import PomodoroClient, ReadTimeout
from pomosync.server import ServerConfig, SyncServer
from pomosync.timer import MS_PER_MINUTE


class FakeClock:
    """Settable millisecond clock shared by the server and the tests."""

    def __init__(self, start: int = 0) -> None:
        self._now = start
        self._lock = threading.Lock()

    def __call__(self) -> int:
        with self._lock:
            return self._now

    def set(self, now_ms: int) -> None:
        with self._lock:
            self._now = now_ms

    def advance_minutes(self, minutes: float) -> int:
        with self._lock:
            self._now += int(minutes * MS_PER_MINUTE)
            return self._now


@pytest.fixture
def sync_server(tmp_path):
    clock = FakeClock(0)
    config = ServerConfig(
        host="127.0.0.1",
        port=0,
        data_dir=str(tmp_path / "data"),
        timezone="UTC",
        tick_interval=0.05,
    )
    server = SyncServer(config, clock=clock)
    server.start()
    yield server, clock
    server.stop()


def connect(server: SyncServer, timeout: float = 5.0) -> PomodoroClient:
    host, port = server.address
    return PomodoroClient(host, port, timeout=timeout)


def wait_until(client: PomodoroClient, predicate, timeout: float = 3.0) -> None:
    """Fold incoming messages until the view satisfies the predicate."""
    deadline = time.monotonic() + timeout
    while not predicate(client.view):
        left = deadline - time.monotonic()
        if left <= 0:
            raise AssertionError(f"view never satisfied predicate; {client.view.phase=} "
                                 f"{client.view.last_log_seq=}")
        client.sock.settimeout(min(0.25, left))
        try:
            client.read_message()
        except ReadTimeout:
            continue


def quiesce(client: PomodoroClient, window: float = 0.3) -> list:
    """Read whatever arrives within the window; returns the messages."""
    seen = []
    deadline = time.monotonic() + window
    while True:
        left = deadline - time.monotonic()
        if left <= 0:
            return seen
        client.sock.settimeout(left)
        try:
            seen.append(client.read_message())
        except ReadTimeout:
            return seen
