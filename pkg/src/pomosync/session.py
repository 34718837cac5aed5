"""One timer for the whole team: membership, readiness gating, pair rotation.

A session wraps a single PomodoroClock in an append-only event log. All state
here is immutable; every operation returns a new SessionState whose log grew
by the events the operation emitted, and replaying any log rebuilds the state
field-for-field.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Iterable, Sequence

from . import timer
from .errors import DomainError
from .timer import Event, Interruption, InterruptionKind, Phase, PomodoroClock, TimerConfig

# Session-level event types; timer event types are defined in timer.py.
SESSION_CREATED = "session_created"
MEMBER_JOINED = "member_joined"
MEMBER_LEFT = "member_left"
READY_DECLARED = "ready_declared"
PAIRS_ROTATED = "pairs_rotated"

# Ledger event types live in the session log too (one log per session is the
# archive), but they never change SessionState.
STORY_ADDED = "story_added"
STORY_ESTIMATED = "story_estimated"
STORY_STATUS_SET = "story_status_set"
MARK_TRACKED = "mark_tracked"
JOURNAL_WRITTEN = "journal_written"

LEDGER_EVENT_TYPES = frozenset(
    {STORY_ADDED, STORY_ESTIMATED, STORY_STATUS_SET, MARK_TRACKED, JOURNAL_WRITTEN}
)

# Ready state survives only until the next phase transition.
_READY_CLEARING_TYPES = frozenset(
    {timer.STARTED, timer.WORK_COMPLETED, timer.BREAK_STARTED, timer.BREAK_ENDED, timer.VOIDED}
)


class DuplicateMember(DomainError):
    code = "duplicate_member"


class UnknownMember(DomainError):
    code = "unknown_member"


class NotIdle(DomainError):
    code = "not_idle"


class NotAllReady(DomainError):
    code = "not_all_ready"


class RotateDuringWork(DomainError):
    code = "rotate_during_work"


class Role(str, Enum):
    DEVELOPER = "developer"
    COACH = "coach"
    CUSTOMER_PROXY = "customer_proxy"


@dataclass(frozen=True)
class Member:
    id: str
    display_name: str
    role: Role = Role.DEVELOPER
    full_time: bool = True

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "display_name": self.display_name,
            "role": self.role.value,
            "full_time": self.full_time,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Member":
        return cls(
            id=str(data["id"]),
            display_name=str(data.get("display_name", data["id"])),
            role=Role(data.get("role", "developer")),
            full_time=bool(data.get("full_time", True)),
        )


@dataclass(frozen=True)
class Pairing:
    """Who works with whom: unordered pairs plus a solo pool for odd counts."""

    pairs: tuple[tuple[str, str], ...] = ()
    solo: tuple[str, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {"pairs": [list(p) for p in self.pairs], "solo": list(self.solo)}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Pairing":
        return cls(
            pairs=tuple((str(a), str(b)) for a, b in data.get("pairs", [])),
            solo=tuple(str(m) for m in data.get("solo", [])),
        )

    def as_pair_set(self) -> set[frozenset[str]]:
        return {frozenset(p) for p in self.pairs}


_BYE = object()


def compute_pairing(ordered_ids: Sequence[str], rotation: int) -> Pairing:
    """Round-robin tournament pairing for the given rotation count.

    The first member stays fixed while the rest cycle; the fixed member pairs
    with the head of the circle and the remainder pair first-with-last. Odd
    counts get a bye slot, so over a full cycle each member sits out exactly
    once and (for even counts) no pair repeats until all n-1 rounds have run.
    """
    ids = list(ordered_ids)
    if not ids:
        return Pairing()
    if len(ids) == 1:
        return Pairing(solo=(ids[0],))
    fixed, rest = ids[0], list(ids[1:])
    if len(ids) % 2 == 1:
        rest.append(_BYE)
    shift = rotation % len(rest)
    circle = rest[shift:] + rest[:shift]

    pairs: list[tuple[str, str]] = []
    solo: list[str] = []
    head, mid = circle[0], circle[1:]
    if head is _BYE:
        solo.append(fixed)
    else:
        pairs.append((fixed, head))
    i, j = 0, len(mid) - 1
    while i < j:
        a, b = mid[i], mid[j]
        if a is _BYE:
            solo.append(b)
        elif b is _BYE:
            solo.append(a)
        else:
            pairs.append((a, b))
        i += 1
        j -= 1
    return Pairing(pairs=tuple(pairs), solo=tuple(solo))


@dataclass(frozen=True)
class SessionState:
    session_id: str
    config: TimerConfig
    clock: PomodoroClock = field(default_factory=PomodoroClock)
    members: tuple[Member, ...] = ()
    ready: frozenset[str] = frozenset()
    pairing: Pairing = Pairing()
    rotation: int = 0
    event_log: tuple[tuple[int, Event], ...] = ()

    def member_ids(self) -> tuple[str, ...]:
        return tuple(m.id for m in self.members)

    def get_member(self, member_id: str) -> Member:
        for member in self.members:
            if member.id == member_id:
                return member
        raise UnknownMember(f"no member {member_id!r} in session", member_id=member_id)

    @property
    def last_seq(self) -> int:
        return len(self.event_log)

    def to_dict(self) -> dict[str, Any]:
        return {
            "session_id": self.session_id,
            "config": self.config.to_dict(),
            "clock": self.clock.to_dict(),
            "members": [m.to_dict() for m in self.members],
            "ready": sorted(self.ready),
            "pairing": self.pairing.to_dict(),
            "rotation": self.rotation,
            "event_log": [[seq, event.to_dict()] for seq, event in self.event_log],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SessionState":
        return cls(
            session_id=str(data["session_id"]),
            config=TimerConfig.from_dict(data["config"]),
            clock=PomodoroClock.from_dict(data["clock"]),
            members=tuple(Member.from_dict(m) for m in data.get("members", [])),
            ready=frozenset(data.get("ready", [])),
            pairing=Pairing.from_dict(data.get("pairing", {})),
            rotation=int(data.get("rotation", 0)),
            event_log=tuple(
                (int(seq), Event.from_dict(ev)) for seq, ev in data.get("event_log", [])
            ),
        )


def _append(state: SessionState, event: Event) -> SessionState:
    log = state.event_log + ((state.last_seq + 1, event),)
    return replace(state, event_log=log)


def _apply_structural(state: SessionState, event: Event) -> SessionState:
    """Apply one event to everything except the log itself."""
    t = event.type
    if t in timer.TIMER_EVENT_TYPES:
        clock = timer.apply_event(state.clock, state.config, event)
        ready = frozenset() if t in _READY_CLEARING_TYPES else state.ready
        return replace(state, clock=clock, ready=ready)
    if t == SESSION_CREATED:
        member = Member.from_dict(event.data["member"])
        return replace(
            state,
            members=(member,),
            pairing=compute_pairing((member.id,), state.rotation),
        )
    if t == MEMBER_JOINED:
        member = Member.from_dict(event.data["member"])
        members = state.members + (member,)
        return replace(
            state,
            members=members,
            pairing=compute_pairing([m.id for m in members], state.rotation),
        )
    if t == MEMBER_LEFT:
        member_id = event.data["member_id"]
        members = tuple(m for m in state.members if m.id != member_id)
        return replace(
            state,
            members=members,
            ready=state.ready - {member_id},
            pairing=compute_pairing([m.id for m in members], state.rotation),
        )
    if t == READY_DECLARED:
        return replace(state, ready=state.ready | {event.data["member_id"]})
    if t == PAIRS_ROTATED:
        rotation = state.rotation + 1
        return replace(
            state,
            rotation=rotation,
            pairing=compute_pairing(state.member_ids(), rotation),
        )
    if t in LEDGER_EVENT_TYPES:
        return state
    raise timer.InvalidHistory(f"unknown event type {t!r}", event_type=t, at=event.at)


def _emit(state: SessionState, event: Event) -> SessionState:
    return _append(_apply_structural(state, event), event)


def create_session(
    config: TimerConfig, creator: Member, session_id: str, now: int
) -> SessionState:
    """New session with an idle clock and the creator as its only member."""
    state = SessionState(session_id=session_id, config=config)
    event = Event(
        SESSION_CREATED,
        now,
        {"session_id": session_id, "config": config.to_dict(), "member": creator.to_dict()},
    )
    return _emit(state, event)


def join(state: SessionState, member: Member, now: int) -> SessionState:
    """Add a member. During a running pomodoro they observe: the participant
    snapshot taken at start is never revised."""
    if member.id in state.member_ids():
        raise DuplicateMember(f"member {member.id!r} already in session", member_id=member.id)
    return _emit(state, Event(MEMBER_JOINED, now, {"member": member.to_dict()}))


def leave(state: SessionState, member_id: str, now: int) -> SessionState:
    """Remove a member. Leaving mid-pomodoro logs a deflected interruption;
    the team decides separately whether to void."""
    state.get_member(member_id)
    out = state
    if state.clock.phase is Phase.WORK:
        interruption = Interruption(
            kind=InterruptionKind.INTERNAL,
            deflected=True,
            at=now,
            note="member left during work",
            initiator=member_id,
        )
        out = _emit(
            out, Event(timer.INTERRUPTION_LOGGED, now, {"interruption": interruption.to_dict()})
        )
    return _emit(out, Event(MEMBER_LEFT, now, {"member_id": member_id}))


def declare_ready(state: SessionState, member_id: str, now: int) -> SessionState:
    if state.clock.phase is not Phase.IDLE:
        raise NotIdle(f"cannot declare ready while {state.clock.phase.value}")
    state.get_member(member_id)
    return _emit(state, Event(READY_DECLARED, now, {"member_id": member_id}))


def start_shared(
    state: SessionState, initiator_id: str, now: int
) -> tuple[SessionState, list[Event]]:
    """Start the shared pomodoro once everyone is ready; a coach may override.

    The event records the pairing at start as the immutable participant
    snapshot used for effort attribution.
    """
    if state.clock.phase is not Phase.IDLE:
        raise NotIdle(f"cannot start while {state.clock.phase.value}")
    initiator = state.get_member(initiator_id)
    missing = sorted(set(state.member_ids()) - state.ready)
    override = bool(missing)
    if missing and initiator.role is not Role.COACH:
        raise NotAllReady(
            f"waiting for {', '.join(missing)}",
            missing=missing,
        )
    event = Event(
        timer.STARTED,
        now,
        {
            "initiator": initiator_id,
            "participants": state.pairing.to_dict(),
            "override": override,
        },
    )
    return _emit(state, event), [event]


def record_interruption(
    state: SessionState, interruption: Interruption
) -> tuple[SessionState, list[Event]]:
    """Log a deflected interruption or void the shared pomodoro for everyone."""
    if state.clock.phase is not Phase.WORK:
        raise timer.InterruptOutsideWork(
            f"cannot interrupt while {state.clock.phase.value}; no pomodoro is running"
        )
    kind = timer.INTERRUPTION_LOGGED if interruption.deflected else timer.VOIDED
    event = Event(kind, interruption.at, {"interruption": interruption.to_dict()})
    return _emit(state, event), [event]


def void_shared(
    state: SessionState, interruption: Interruption
) -> tuple[SessionState, list[Event]]:
    """Void the shared pomodoro: collective timer, collective failure."""
    return record_interruption(state, replace(interruption, deflected=False))


def advance_session(state: SessionState, now: int) -> tuple[SessionState, list[Event]]:
    """Apply every deadline the clock crossed; clears readiness on transitions."""
    _, events = timer.advance(state.clock, state.config, now)
    out = state
    for event in events:
        out = _emit(out, event)
    return out, events


def roll_day(state: SessionState, now: int) -> tuple[SessionState, list[Event]]:
    event = Event(timer.DAY_ROLLED, now)
    return _emit(state, event), [event]


def rotate_pairs(state: SessionState, now: int) -> SessionState:
    """Advance the round-robin schedule; only legal at break boundaries."""
    if state.clock.phase is Phase.WORK:
        raise RotateDuringWork("pairs rotate at breaks, not mid-pomodoro")
    rotated = compute_pairing(state.member_ids(), state.rotation + 1)
    return _emit(state, Event(PAIRS_ROTATED, now, {"pairing": rotated.to_dict()}))


def record_ledger_event(
    state: SessionState, event_type: str, data: dict[str, Any], now: int
) -> SessionState:
    """Append a ledger-facing event to the session log (no structural change)."""
    if event_type not in LEDGER_EVENT_TYPES:
        raise timer.InvalidHistory(f"{event_type!r} is not a ledger event type", at=now)
    return _emit(state, Event(event_type, now, data))


def replay_session(log: Iterable[tuple[int, Event]]) -> SessionState:
    """Rebuild SessionState from a recorded log; the inverse of live recording.

    Raises InvalidHistory on a gap in sequence numbers, a first event that is
    not session_created, or any event inapplicable where it sits.
    """
    state: SessionState | None = None
    for expected, (seq, event) in enumerate(log, start=1):
        if seq != expected:
            raise timer.InvalidHistory(
                f"event log gap: expected seq {expected}, got {seq}", at=event.at
            )
        if state is None:
            if event.type != SESSION_CREATED:
                raise timer.InvalidHistory(
                    f"history must open with {SESSION_CREATED}, got {event.type}", at=event.at
                )
            state = SessionState(
                session_id=str(event.data["session_id"]),
                config=TimerConfig.from_dict(event.data["config"]),
            )
        state = _emit(state, event)
    if state is None:
        raise timer.InvalidHistory("empty session history", at=0)
    return state


def started_snapshot(state: SessionState, seq: int) -> Pairing:
    """Participant snapshot recorded when pomodoro ``seq`` started."""
    for s, event in state.event_log:
        if s == seq and event.type == timer.STARTED:
            return Pairing.from_dict(event.data["participants"])
    raise timer.InvalidHistory(f"no pomodoro started at seq {seq}", at=0)


def pomodoro_outcomes(state: SessionState) -> dict[int, str]:
    """Map each Started seq to its outcome: completed, voided, or running."""
    outcomes: dict[int, str] = {}
    open_seq: int | None = None
    for seq, event in state.event_log:
        if event.type == timer.STARTED:
            open_seq = seq
            outcomes[seq] = "running"
        elif event.type == timer.WORK_COMPLETED and open_seq is not None:
            outcomes[open_seq] = "completed"
            open_seq = None
        elif event.type == timer.VOIDED and open_seq is not None:
            outcomes[open_seq] = "voided"
            open_seq = None
    return outcomes


def last_completed_seq(state: SessionState) -> int | None:
    """Started seq of the most recently completed pomodoro, if any."""
    best: int | None = None
    for seq, outcome in pomodoro_outcomes(state).items():
        if outcome == "completed" and (best is None or seq > best):
            best = seq
    return best
