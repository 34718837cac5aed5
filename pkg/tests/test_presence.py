"""Presence: phase-derived status, ceiling minutes, offline members."""

from __future__ import annotations

from pomosync.presence import minutes_left, presence_for
from pomosync.session import Member, create_session, declare_ready, join, start_shared
from pomosync.timer import MS_PER_MINUTE, PomodoroClock, TimerConfig, start_pomodoro

MIN = MS_PER_MINUTE


def working_session(now=0):
    state = create_session(TimerConfig(), Member("alice", "Alice"), "s1", now)
    state = join(state, Member("bob", "Bob"), now)
    for mid in state.member_ids():
        state = declare_ready(state, mid, now)
    state, _ = start_shared(state, "alice", now)
    return state


def test_work_with_15_minutes_left_is_do_not_disturb():
    state = working_session()
    statuses = presence_for(state, {"alice", "bob"}, 10 * MIN)
    assert all(s.state == "do_not_disturb" for s in statuses)
    assert all(s.minutes_remaining == 15 for s in statuses)
    assert all("do not disturb" in s.message and "15m" in s.message for s in statuses)


def test_idle_status_has_no_minutes_field():
    state = create_session(TimerConfig(), Member("alice", "Alice"), "s1", 0)
    (status,) = presence_for(state, {"alice"}, 0)
    assert status.state == "idle"
    assert status.minutes_remaining is None
    assert "minutes_remaining" not in status.to_dict()


def test_sixty_one_seconds_rounds_up_to_two_minutes():
    cfg = TimerConfig()
    clock, _ = start_pomodoro(PomodoroClock(), cfg, 0)
    now = clock.phase_deadline - 61_000
    assert minutes_left(clock, now) == 2


def test_disconnected_member_reads_offline():
    state = working_session()
    statuses = {s.member_id: s for s in presence_for(state, {"alice"}, 0)}
    assert statuses["alice"].state == "do_not_disturb"
    assert statuses["bob"].state == "offline"


def test_all_connected_members_share_the_same_status():
    state = working_session()
    first, second = presence_for(state, {"alice", "bob"}, 7 * MIN)
    assert (first.state, first.minutes_remaining) == (second.state, second.minutes_remaining)
