#!/usr/bin/env python3
"""Record a real server broadcast transcript for the dashboard tests.

Runs the sync server on a scripted clock, drives a short team session, and
captures every line a passive subscriber receives (snapshot, events,
presence) into test/fixtures/transcript.ndjson. Re-run only when the wire
format changes; the checked-in fixture is the contract the dashboard
replays in its tests.

Usage: python3 tools/record_transcript.py  (from the frontend directory,
with the backend package importable, e.g. installed with pip -e)
"""

from __future__ import annotations

import socket
import sys
import threading
import time
from pathlib import Path

from pomosync.client import PomodoroClient
from pomosync.server import ServerConfig, SyncServer
from pomosync.timer import MS_PER_MINUTE


class ScriptedClock:
    def __init__(self) -> None:
        self.now = 0
        self._lock = threading.Lock()

    def __call__(self) -> int:
        with self._lock:
            return self.now

    def advance_minutes(self, minutes: float) -> None:
        with self._lock:
            self.now += int(minutes * MS_PER_MINUTE)


def main() -> int:
    out_path = Path(__file__).resolve().parent.parent / "test" / "fixtures" / "transcript.ndjson"
    clock = ScriptedClock()
    server = SyncServer(
        ServerConfig(host="127.0.0.1", port=0, data_dir="/tmp/pomosync-transcript",
                     timezone="UTC", tick_interval=0.05),
        clock=clock,
    )
    import shutil

    shutil.rmtree("/tmp/pomosync-transcript", ignore_errors=True)
    server.start()
    host, port = server.address

    alice = PomodoroClient(host, port)
    alice.hello("milan", {"id": "alice", "display_name": "Alice", "role": "developer",
                          "full_time": True}, create=True)
    bob = PomodoroClient(host, port)
    bob.hello("milan", {"id": "bob", "display_name": "Bob", "role": "developer",
                        "full_time": True})

    # the recorder plays the dashboard: it joins and then only listens
    recorder = socket.create_connection((host, port), timeout=5)
    hello = (
        b'{"payload":{"create":false,"member":{"display_name":"Dash","full_time":true,'
        b'"id":"dash","role":"customer_proxy"},"session_id":"milan","token":""},'
        b'"seq":1,"server_time":0,"type":"hello","v":1}\n'
    )
    recorder.sendall(hello)

    def settle() -> None:
        time.sleep(0.15)

    alice.command("ready")
    bob.command("ready")
    # dash must be ready too or the start below would be rejected
    dash = PomodoroClient(host, port)
    dash.hello("milan", {"id": "dash", "display_name": "Dash", "role": "customer_proxy",
                         "full_time": True})
    dash.command("ready")
    alice.command("start")
    settle()
    clock.advance_minutes(10)
    server.poll()  # presence minute change mid-work
    settle()
    alice.command("interrupt", {"kind": "external", "note": "phone rang", "deflected": True})
    clock.advance_minutes(15)
    server.poll()  # work completes into the short break
    settle()
    alice.command("estimate", {"story_id": "S-1", "estimate": 6, "iteration_id": "IT-1",
                               "title": "Login flow"})
    bob.command("track", {"story_id": "S-1", "ptype": "Coding", "effort": 2})
    alice.command("rotate")
    clock.advance_minutes(5)
    server.poll()  # break ends into idle
    settle()
    for client in (alice, bob, dash):
        client.command("ready")
    bob.command("start")
    clock.advance_minutes(7)
    server.poll()
    settle()
    bob.command("void", {"kind": "internal", "note": "build broke"})
    settle()

    recorder.settimeout(0.5)
    chunks = []
    try:
        while True:
            chunk = recorder.recv(65536)
            if not chunk:
                break
            chunks.append(chunk)
    except socket.timeout:
        pass
    transcript = b"".join(chunks)

    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_bytes(transcript)
    lines = transcript.count(b"\n")
    print(f"wrote {lines} messages to {out_path}")

    for client in (alice, bob, dash):
        client.close()
    recorder.close()
    server.stop()
    return 0


if __name__ == "__main__":
    sys.exit(main())
