"""Wire protocol: byte-exact golden vectors and envelope validation."""

from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pomosync import wire
from pomosync.wire import MalformedMessage, UnsupportedVersion, WireMessage, decode, encode

_CONFIG = {"work_duration": 25, "short_break": 5, "long_break": 15, "long_break_every": 4}
_ALICE = {"id": "alice", "display_name": "Alice", "role": "developer", "full_time": True}


def build_fixture_messages() -> dict[str, WireMessage]:
    """One representative message per type, fully deterministic."""
    return {
        "hello": wire.make_hello(
            1,
            1700000000000,
            session_id="milan",
            member=_ALICE,
            create=True,
            config=_CONFIG,
            token="tt",
        ),
        "snapshot": wire.make_snapshot(
            2,
            1700000000500,
            session={
                "session_id": "milan",
                "config": _CONFIG,
                "clock": {
                    "phase": "idle",
                    "phase_started_at": None,
                    "phase_deadline": None,
                    "consecutive_completed": 0,
                    "total_completed_today": 0,
                },
                "members": [_ALICE],
                "ready": [],
                "pairing": {"pairs": [], "solo": ["alice"]},
                "rotation": 0,
                "event_log": [
                    [
                        1,
                        {
                            "type": "session_created",
                            "at": 1700000000000,
                            "data": {
                                "session_id": "milan",
                                "config": _CONFIG,
                                "member": _ALICE,
                            },
                        },
                    ]
                ],
            },
            ledger={
                "stories": [],
                "marks": [],
                "types": ["Analyzing", "Coding", "Meeting", "Refactoring", "Spike", "Testing"],
                "iterations": [],
            },
        ),
        "command": wire.make_command(
            3, 1700000001000, command_id="c-1", name="start", args={}
        ),
        "event": wire.make_event(
            4,
            1700000001200,
            log_seq=2,
            event={
                "type": "started",
                "at": 1700000001200,
                "data": {
                    "initiator": "alice",
                    "participants": {"pairs": [], "solo": ["alice"]},
                    "override": False,
                },
            },
            phase="work",
            deadline=1700001501200,
            member_id="alice",
            command_id="c-1",
            burst_end=True,
        ),
        "presence": wire.make_presence(
            5,
            1700000001300,
            session_id="milan",
            statuses=[
                {
                    "member_id": "alice",
                    "state": "do_not_disturb",
                    "message": "do not disturb — 25m left",
                    "minutes_remaining": 25,
                }
            ],
        ),
        "error": wire.make_error(
            6,
            1700000002000,
            code="not_all_ready",
            reason="waiting for bob",
            command_id="c-2",
            details={"missing": ["bob"]},
        ),
    }


# frozen canonical bytes: sorted keys, compact separators, UTF-8, one line
GOLDEN = {
    "hello": (
        b'{"payload":{"config":{"long_break":15,"long_break_every":4,"short_break":5,'
        b'"work_duration":25},"create":true,"member":{"display_name":"Alice","full_time":true,'
        b'"id":"alice","role":"developer"},"session_id":"milan","token":"tt"},"seq":1,'
        b'"server_time":1700000000000,"type":"hello","v":1}\n'
    ),
    "snapshot": (
        b'{"payload":{"last_seq":1,"ledger":{"iterations":[],"marks":[],"stories":[],'
        b'"types":["Analyzing","Coding","Meeting","Refactoring","Spike","Testing"]},'
        b'"session":{"clock":{"consecutive_completed":0,"phase":"idle","phase_deadline":null,'
        b'"phase_started_at":null,"total_completed_today":0},"config":{"long_break":15,'
        b'"long_break_every":4,"short_break":5,"work_duration":25},"event_log":[[1,'
        b'{"at":1700000000000,"data":{"config":{"long_break":15,"long_break_every":4,'
        b'"short_break":5,"work_duration":25},"member":{"display_name":"Alice",'
        b'"full_time":true,"id":"alice","role":"developer"},"session_id":"milan"},'
        b'"type":"session_created"}]],"members":[{"display_name":"Alice","full_time":true,'
        b'"id":"alice","role":"developer"}],"pairing":{"pairs":[],"solo":["alice"]},'
        b'"ready":[],"rotation":0,"session_id":"milan"}},"seq":2,'
        b'"server_time":1700000000500,"type":"snapshot","v":1}\n'
    ),
    "command": (
        b'{"payload":{"args":{},"id":"c-1","name":"start"},"seq":3,'
        b'"server_time":1700000001000,"type":"command","v":1}\n'
    ),
    "event": (
        b'{"payload":{"burst_end":true,"command_id":"c-1","deadline":1700001501200,'
        b'"event":{"at":1700000001200,"data":{"initiator":"alice","override":false,'
        b'"participants":{"pairs":[],"solo":["alice"]}},"type":"started"},"log_seq":2,'
        b'"member_id":"alice","phase":"work"},"seq":4,"server_time":1700000001200,'
        b'"type":"event","v":1}\n'
    ),
    "presence": (
        b'{"payload":{"session_id":"milan","statuses":[{"member_id":"alice",'
        b'"message":"do not disturb \xe2\x80\x94 25m left","minutes_remaining":25,'
        b'"state":"do_not_disturb"}]},"seq":5,"server_time":1700000001300,'
        b'"type":"presence","v":1}\n'
    ),
    "error": (
        b'{"payload":{"code":"not_all_ready","command_id":"c-2",'
        b'"details":{"missing":["bob"]},"reason":"waiting for bob"},"seq":6,'
        b'"server_time":1700000002000,"type":"error","v":1}\n'
    ),
}


def test_every_message_type_has_a_golden_vector():
    assert set(GOLDEN) == set(wire.MESSAGE_TYPES)


@pytest.mark.parametrize("name", sorted(GOLDEN))
def test_golden_encode_is_byte_exact(name):
    message = build_fixture_messages()[name]
    assert encode(message) == GOLDEN[name]


@pytest.mark.parametrize("name", sorted(GOLDEN))
def test_golden_decode_then_encode_is_identity(name):
    decoded = decode(GOLDEN[name])
    assert encode(decoded) == GOLDEN[name]
    assert decoded == build_fixture_messages()[name]


def test_single_line_per_message():
    for name, blob in GOLDEN.items():
        assert blob.endswith(b"\n") and blob.count(b"\n") == 1, name


# -- validation --


def test_unsupported_version_is_its_own_error():
    with pytest.raises(UnsupportedVersion):
        decode(b'{"v":2,"type":"hello","seq":1,"server_time":0,"payload":{}}')


@pytest.mark.parametrize(
    "line",
    [
        b"not json at all",
        b'"just a string"',
        b'{"type":"hello","seq":1,"server_time":0,"payload":{}}',  # missing v
        b'{"v":1,"type":"nope","seq":1,"server_time":0,"payload":{}}',
        b'{"v":1,"type":"hello","seq":"x","server_time":0,"payload":{}}',
        b'{"v":1,"type":"hello","seq":1,"server_time":0,"payload":[]}',
        b'{"v":true,"type":"hello","seq":1,"server_time":0,"payload":{}}',
        b"\xff\xfe",
    ],
)
def test_malformed_messages_rejected(line):
    with pytest.raises(MalformedMessage):
        decode(line)


def test_unknown_command_name_rejected_at_build_time():
    with pytest.raises(MalformedMessage):
        wire.make_command(1, 0, command_id="c", name="dance")


json_scalars = st.one_of(
    st.none(),
    st.booleans(),
    st.integers(min_value=-(2**31), max_value=2**31),
    st.text(max_size=20),
)
json_values = st.recursive(
    json_scalars,
    lambda children: st.one_of(
        st.lists(children, max_size=4), st.dictionaries(st.text(max_size=8), children, max_size=4)
    ),
    max_leaves=12,
)


@given(
    st.sampled_from(sorted(wire.MESSAGE_TYPES)),
    st.integers(min_value=0, max_value=2**40),
    st.integers(min_value=0, max_value=2**45),
    st.dictionaries(st.text(min_size=1, max_size=10), json_values, max_size=6),
)
def test_encode_decode_identity_for_arbitrary_payloads(mtype, seq, server_time, payload):
    message = WireMessage(mtype, seq, server_time, payload)
    assert decode(encode(message)) == message
