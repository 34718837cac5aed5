"""Team session: readiness policy, pairing rotation, shared void, replay."""

from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pomosync import session, timer
from pomosync.session import (
    DuplicateMember,
    Member,
    NotAllReady,
    NotIdle,
    Pairing,
    Role,
    RotateDuringWork,
    UnknownMember,
    compute_pairing,
    create_session,
    declare_ready,
    join,
    leave,
    pomodoro_outcomes,
    replay_session,
    rotate_pairs,
    start_shared,
    started_snapshot,
    void_shared,
)
from pomosync.timer import (
    Interruption,
    InterruptionKind,
    InvalidConfig,
    MS_PER_MINUTE,
    Phase,
    TimerConfig,
)

MIN = MS_PER_MINUTE


def member(mid: str, role: Role = Role.DEVELOPER) -> Member:
    return Member(id=mid, display_name=mid.upper(), role=role)


def team_of(n: int, coach_first: bool = False):
    state = create_session(
        TimerConfig(), member("m1", Role.COACH if coach_first else Role.DEVELOPER), "s1", 0
    )
    for i in range(2, n + 1):
        state = join(state, member(f"m{i}"), 0)
    return state


def all_ready(state, now=0):
    for mid in state.member_ids():
        state = declare_ready(state, mid, now)
    return state


def interruption(deflected: bool, at: int, initiator="m1") -> Interruption:
    return Interruption(InterruptionKind.EXTERNAL, deflected, at, initiator=initiator)


# -- creation and membership --


def test_create_session_starts_idle_with_one_member():
    state = create_session(TimerConfig(), member("m1"), "s1", 0)
    assert state.clock.phase is Phase.IDLE
    assert state.member_ids() == ("m1",)
    assert [e.type for _, e in state.event_log] == [session.SESSION_CREATED]


def test_create_session_rejects_out_of_range_config():
    with pytest.raises(InvalidConfig):
        create_session(TimerConfig(work_duration=50), member("m1"), "s1", 0)


def test_work_duration_20_is_accepted_at_the_boundary():
    state = create_session(TimerConfig(work_duration=20), member("m1"), "s1", 0)
    assert state.config.work_duration == 20


def test_join_during_idle_activates_immediately():
    state = team_of(2)
    assert state.member_ids() == ("m1", "m2")
    assert set(state.pairing.pairs[0]) == {"m1", "m2"}


def test_duplicate_join_rejected():
    state = team_of(2)
    with pytest.raises(DuplicateMember):
        join(state, member("m2"), 0)


def test_join_during_work_does_not_touch_the_participant_snapshot():
    state = all_ready(team_of(2))
    state, _ = start_shared(state, "m1", 0)
    started_seq = state.last_seq
    before = started_snapshot(state, started_seq)
    state = join(state, member("m3"), 5 * MIN)
    assert started_snapshot(state, started_seq) == before
    assert "m3" not in {m for pair in before.pairs for m in pair} | set(before.solo)
    assert "m3" in state.member_ids()  # active for everything after this pomodoro


def test_leave_mid_work_logs_a_deflected_interruption_and_keeps_work_running():
    state = all_ready(team_of(3))
    state, _ = start_shared(state, "m1", 0)
    state = leave(state, "m3", 5 * MIN)
    types = [e.type for _, e in state.event_log]
    assert types[-2:] == [timer.INTERRUPTION_LOGGED, session.MEMBER_LEFT]
    assert state.clock.phase is Phase.WORK
    assert state.member_ids() == ("m1", "m2")


# -- readiness and the start policy --


def test_ready_only_while_idle():
    state = all_ready(team_of(2))
    state, _ = start_shared(state, "m1", 0)
    with pytest.raises(NotIdle):
        declare_ready(state, "m1", 1 * MIN)


def test_ready_unknown_member():
    with pytest.raises(UnknownMember):
        declare_ready(team_of(2), "ghost", 0)


def test_start_with_all_six_ready_starts():
    state = all_ready(team_of(6))
    state, events = start_shared(state, "m2", 0)
    assert state.clock.phase is Phase.WORK
    assert events[0].data["override"] is False
    assert state.ready == frozenset()  # cleared by the transition


def test_start_with_five_of_six_ready_lists_the_missing_member():
    state = team_of(6)
    for mid in ["m1", "m2", "m3", "m4", "m5"]:
        state = declare_ready(state, mid, 0)
    with pytest.raises(NotAllReady) as exc:
        start_shared(state, "m2", 0)
    assert exc.value.details["missing"] == ["m6"]


def test_coach_override_starts_without_full_readiness_and_is_logged():
    state = team_of(6, coach_first=True)
    for mid in ["m1", "m2", "m3", "m4", "m5"]:
        state = declare_ready(state, mid, 0)
    state, events = start_shared(state, "m1", 0)
    assert state.clock.phase is Phase.WORK
    assert events[0].data["override"] is True


def test_policy_table_default_vs_coach():
    # (ready_count, initiator_role, starts?)
    cases = [
        (6, Role.DEVELOPER, True),
        (5, Role.DEVELOPER, False),
        (5, Role.COACH, True),
        (0, Role.COACH, True),
        (6, Role.COACH, True),
    ]
    for ready_count, role, starts in cases:
        state = create_session(TimerConfig(), member("m1", role), "s1", 0)
        for i in range(2, 7):
            state = join(state, member(f"m{i}"), 0)
        for mid in list(state.member_ids())[:ready_count]:
            state = declare_ready(state, mid, 0)
        if starts:
            state, _ = start_shared(state, "m1", 0)
            assert state.clock.phase is Phase.WORK
        else:
            with pytest.raises(NotAllReady):
                start_shared(state, "m1", 0)


def test_start_while_running_is_not_idle():
    state = all_ready(team_of(2))
    state, _ = start_shared(state, "m1", 0)
    with pytest.raises(NotIdle):
        start_shared(state, "m1", 1 * MIN)


# -- shared void --


def test_any_member_voids_for_everyone_with_zero_credit():
    state = all_ready(team_of(4))
    state, _ = start_shared(state, "m1", 0)
    state, events = void_shared(state, interruption(True, 12 * MIN, initiator="m4"))
    assert events[0].type == timer.VOIDED  # deflected flag is forced off
    assert state.clock.phase is Phase.IDLE
    assert state.clock.total_completed_today == 0
    assert events[0].data["interruption"]["initiator"] == "m4"


def test_void_during_break_is_rejected():
    state = all_ready(team_of(2))
    state, _ = start_shared(state, "m1", 0)
    state, _ = session.advance_session(state, 25 * MIN)
    assert state.clock.phase is Phase.SHORT_BREAK
    with pytest.raises(timer.InterruptOutsideWork):
        void_shared(state, interruption(False, 26 * MIN))


def test_ready_set_empty_after_every_transition_event():
    state = all_ready(team_of(3))
    state, _ = start_shared(state, "m1", 0)
    assert state.ready == frozenset()
    state, _ = session.advance_session(state, 25 * MIN)  # completed + break started
    assert state.ready == frozenset()
    state, _ = session.advance_session(state, 30 * MIN)  # break ended
    assert state.ready == frozenset()
    # void path clears too
    state = all_ready(state, 31 * MIN)
    state, _ = start_shared(state, "m1", 31 * MIN)
    state, _ = void_shared(state, interruption(False, 32 * MIN))
    assert state.ready == frozenset()


# -- pairing rotation --


def test_rotation_matches_the_documented_four_member_schedule():
    assert compute_pairing(["A", "B", "C", "D"], 0) == Pairing((("A", "B"), ("C", "D")), ())
    rotated = compute_pairing(["A", "B", "C", "D"], 1)
    assert rotated.as_pair_set() == {frozenset({"A", "C"}), frozenset({"B", "D"})}


def test_rotation_during_work_is_rejected():
    state = all_ready(team_of(4))
    state, _ = start_shared(state, "m1", 0)
    with pytest.raises(RotateDuringWork):
        rotate_pairs(state, 1 * MIN)


def test_rotation_allowed_during_breaks():
    state = all_ready(team_of(4))
    state, _ = start_shared(state, "m1", 0)
    state, _ = session.advance_session(state, 25 * MIN)
    assert state.clock.phase is Phase.SHORT_BREAK
    rotated = rotate_pairs(state, 26 * MIN)
    assert rotated.rotation == 1


@pytest.mark.parametrize("n", [2, 4, 6, 8])
def test_even_counts_visit_every_pair_before_repeating(n):
    ids = [f"m{i}" for i in range(n)]
    seen: set[frozenset[str]] = set()
    for round_no in range(n - 1):
        pairing = compute_pairing(ids, round_no)
        assert not pairing.solo
        for pair in pairing.as_pair_set():
            assert pair not in seen, f"pair {pair} repeated at round {round_no}"
            seen.add(pair)
    assert seen == {frozenset(c) for c in itertools.combinations(ids, 2)}


@pytest.mark.parametrize("n", [3, 5, 7])
def test_odd_counts_give_each_member_exactly_one_solo_per_cycle(n):
    ids = [f"m{i}" for i in range(n)]
    solos = []
    for round_no in range(n):
        pairing = compute_pairing(ids, round_no)
        assert len(pairing.solo) == 1
        assert len(pairing.pairs) == (n - 1) // 2
        solos.extend(pairing.solo)
    assert sorted(solos) == sorted(ids)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6, 7, 8])
def test_every_member_appears_exactly_once_in_any_rotation(n):
    ids = [f"m{i}" for i in range(n)]
    for round_no in range(2 * n + 1):
        pairing = compute_pairing(ids, round_no)
        placed = [m for pair in pairing.pairs for m in pair] + list(pairing.solo)
        assert sorted(placed) == sorted(ids)


def test_five_members_rotate_two_pairs_one_solo():
    state = team_of(5)
    assert len(state.pairing.pairs) == 2
    assert len(state.pairing.solo) == 1


# -- replay and outcome bookkeeping --


def scripted_session(now=0):
    state = all_ready(team_of(3))
    state, _ = start_shared(state, "m1", now)
    state, _ = session.advance_session(state, now + 25 * MIN)
    state, _ = session.advance_session(state, now + 30 * MIN)
    state = rotate_pairs(state, now + 30 * MIN)
    state = all_ready(state, now + 31 * MIN)
    state, _ = start_shared(state, "m2", now + 31 * MIN)
    state, _ = void_shared(state, interruption(False, now + 40 * MIN, initiator="m3"))
    return state


def test_replay_reproduces_the_session_exactly():
    state = scripted_session()
    assert replay_session(state.event_log) == state


def test_replay_detects_sequence_gaps():
    state = scripted_session()
    holey = state.event_log[:1] + state.event_log[2:]
    with pytest.raises(timer.InvalidHistory):
        replay_session(holey)


def test_outcomes_track_completed_voided_and_running():
    state = scripted_session()
    outcomes = pomodoro_outcomes(state)
    assert sorted(outcomes.values()) == ["completed", "voided"]
    state = all_ready(state, 50 * MIN)
    state, _ = start_shared(state, "m1", 50 * MIN)
    outcomes = pomodoro_outcomes(state)
    assert sorted(outcomes.values()) == ["completed", "running", "voided"]
    assert session.last_completed_seq(state) is not None


def test_at_most_one_pomodoro_active_in_any_log():
    state = scripted_session()
    depth = 0
    for _, event in state.event_log:
        if event.type == timer.STARTED:
            depth += 1
            assert depth == 1
        elif event.type in (timer.WORK_COMPLETED, timer.VOIDED):
            depth -= 1
    assert depth == 0


# -- random command walks: replay identity as a property --


@st.composite
def random_session_walk(draw):
    ops = draw(
        st.lists(
            st.tuples(
                st.sampled_from(
                    ["join", "leave", "ready", "start", "wait", "void", "deflect", "rotate"]
                ),
                st.integers(0, 40),
            ),
            max_size=40,
        )
    )
    state = create_session(TimerConfig(), member("m1"), "sx", 0)
    now = 0
    next_member = 2
    for op, minutes in ops:
        now += minutes * MIN
        state, _ = session.advance_session(state, now)
        if op == "join":
            state = join(state, member(f"m{next_member}"), now)
            next_member += 1
        elif op == "leave" and len(state.members) > 1:
            state = leave(state, state.member_ids()[-1], now)
        elif op == "ready" and state.clock.phase is Phase.IDLE:
            state = declare_ready(state, state.member_ids()[0], now)
        elif op == "start" and state.clock.phase is Phase.IDLE:
            state = all_ready(state, now)
            state, _ = start_shared(state, "m1", now)
        elif op in ("void", "deflect") and state.clock.phase is Phase.WORK:
            state, _ = session.record_interruption(
                state, interruption(op == "deflect", now)
            )
        elif op == "rotate" and state.clock.phase is not Phase.WORK:
            state = rotate_pairs(state, now)
    return state


@settings(max_examples=100)
@given(random_session_walk())
def test_random_walk_replay_identity(state):
    assert replay_session(state.event_log) == state


@settings(max_examples=100)
@given(random_session_walk())
def test_log_sequence_numbers_contiguous_from_one(state):
    assert [seq for seq, _ in state.event_log] == list(range(1, state.last_seq + 1))
