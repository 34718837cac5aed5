"""Pure pomodoro state machine: work/break cadence plus the indivisibility rule.

Every operation is a function of (state, input, timestamp) and returns a new
state together with the events it emitted; nothing here does I/O. Timestamps
are integer milliseconds on the caller's epoch (the server uses Unix wall
time). A non-deflected interruption voids the running pomodoro: the elapsed
work is discarded entirely and no counter moves, as if it never started.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Iterable, Sequence

from .errors import DomainError

MS_PER_MINUTE = 60_000


class Phase(str, Enum):
    IDLE = "idle"
    WORK = "work"
    SHORT_BREAK = "short_break"
    LONG_BREAK = "long_break"


BREAK_PHASES = (Phase.SHORT_BREAK, Phase.LONG_BREAK)


class InterruptionKind(str, Enum):
    INTERNAL = "internal"
    EXTERNAL = "external"


# Timer event types. Session-level event types live in session.py; both kinds
# share the Event container below so one log can hold the whole history.
STARTED = "started"
WORK_COMPLETED = "work_completed"
BREAK_STARTED = "break_started"
BREAK_ENDED = "break_ended"
VOIDED = "voided"
INTERRUPTION_LOGGED = "interruption_logged"
DAY_ROLLED = "day_rolled"

TIMER_EVENT_TYPES = frozenset(
    {STARTED, WORK_COMPLETED, BREAK_STARTED, BREAK_ENDED, VOIDED, INTERRUPTION_LOGGED, DAY_ROLLED}
)


class InvalidConfig(DomainError):
    code = "invalid_config"


class StartWhileActive(DomainError):
    code = "start_while_active"


class InterruptOutsideWork(DomainError):
    code = "interrupt_outside_work"


class NoActivePhase(DomainError):
    code = "no_active_phase"


class InvalidHistory(DomainError):
    code = "invalid_history"


@dataclass(frozen=True)
class TimerConfig:
    """Phase durations in whole minutes; validated at construction."""

    work_duration: int = 25
    short_break: int = 5
    long_break: int = 15
    long_break_every: int = 4

    def __post_init__(self) -> None:
        if not 20 <= self.work_duration <= 45:
            raise InvalidConfig(
                f"work_duration must be 20-45 minutes, got {self.work_duration}"
            )
        if self.short_break < 1:
            raise InvalidConfig(f"short_break must be >= 1 minute, got {self.short_break}")
        if self.long_break < self.short_break:
            raise InvalidConfig(
                f"long_break ({self.long_break}) must be >= short_break ({self.short_break})"
            )
        if self.long_break_every < 2:
            raise InvalidConfig(
                f"long_break_every must be >= 2, got {self.long_break_every}"
            )

    @property
    def work_ms(self) -> int:
        return self.work_duration * MS_PER_MINUTE

    @property
    def short_break_ms(self) -> int:
        return self.short_break * MS_PER_MINUTE

    @property
    def long_break_ms(self) -> int:
        return self.long_break * MS_PER_MINUTE

    def to_dict(self) -> dict[str, int]:
        return {
            "work_duration": self.work_duration,
            "short_break": self.short_break,
            "long_break": self.long_break,
            "long_break_every": self.long_break_every,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "TimerConfig":
        return cls(
            work_duration=int(data.get("work_duration", 25)),
            short_break=int(data.get("short_break", 5)),
            long_break=int(data.get("long_break", 15)),
            long_break_every=int(data.get("long_break_every", 4)),
        )


@dataclass(frozen=True)
class PomodoroClock:
    """Authoritative timer state. phase_started_at/phase_deadline are None in Idle."""

    phase: Phase = Phase.IDLE
    phase_started_at: int | None = None
    phase_deadline: int | None = None
    consecutive_completed: int = 0
    total_completed_today: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "phase": self.phase.value,
            "phase_started_at": self.phase_started_at,
            "phase_deadline": self.phase_deadline,
            "consecutive_completed": self.consecutive_completed,
            "total_completed_today": self.total_completed_today,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "PomodoroClock":
        return cls(
            phase=Phase(data["phase"]),
            phase_started_at=data.get("phase_started_at"),
            phase_deadline=data.get("phase_deadline"),
            consecutive_completed=int(data.get("consecutive_completed", 0)),
            total_completed_today=int(data.get("total_completed_today", 0)),
        )


@dataclass(frozen=True)
class Interruption:
    kind: InterruptionKind
    deflected: bool
    at: int
    note: str = ""
    initiator: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "deflected": self.deflected,
            "at": self.at,
            "note": self.note,
            "initiator": self.initiator,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Interruption":
        return cls(
            kind=InterruptionKind(data["kind"]),
            deflected=bool(data["deflected"]),
            at=int(data["at"]),
            note=str(data.get("note", "")),
            initiator=str(data.get("initiator", "")),
        )


@dataclass(frozen=True)
class Event:
    """One log entry. ``data`` holds only JSON-safe values so events survive
    the wire and the archive byte-for-byte."""

    type: str
    at: int
    data: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {"type": self.type, "at": self.at, "data": self.data}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Event":
        return cls(type=str(data["type"]), at=int(data["at"]), data=dict(data.get("data", {})))


def _require(condition: bool, event: Event, reason: str) -> None:
    if not condition:
        raise InvalidHistory(f"{event.type} at {event.at}: {reason}", event_type=event.type, at=event.at)


def apply_event(clock: PomodoroClock, config: TimerConfig, event: Event) -> PomodoroClock:
    """Apply one timer event, validating that it is applicable in this phase.

    Live operations and replay share this single transition function, which is
    what makes replay-of-history equal to live state by construction.
    """
    t = event.type
    if t == STARTED:
        _require(clock.phase is Phase.IDLE, event, "start is only valid while idle")
        return replace(
            clock,
            phase=Phase.WORK,
            phase_started_at=event.at,
            phase_deadline=event.at + config.work_ms,
        )
    if t == WORK_COMPLETED:
        _require(clock.phase is Phase.WORK, event, "no pomodoro is running")
        _require(event.at == clock.phase_deadline, event, "completion must land on the deadline")
        consecutive = clock.consecutive_completed + 1
        if consecutive >= config.long_break_every:
            phase, duration, consecutive = Phase.LONG_BREAK, config.long_break_ms, 0
        else:
            phase, duration = Phase.SHORT_BREAK, config.short_break_ms
        return replace(
            clock,
            phase=phase,
            phase_started_at=event.at,
            phase_deadline=event.at + duration,
            consecutive_completed=consecutive,
            total_completed_today=clock.total_completed_today + 1,
        )
    if t == BREAK_STARTED:
        expected = Phase.LONG_BREAK if event.data.get("kind") == "long" else Phase.SHORT_BREAK
        _require(clock.phase is expected, event, "break kind does not match the clock")
        return clock
    if t == BREAK_ENDED:
        _require(clock.phase in BREAK_PHASES, event, "no break is running")
        _require(event.at == clock.phase_deadline, event, "break end must land on the deadline")
        return replace(clock, phase=Phase.IDLE, phase_started_at=None, phase_deadline=None)
    if t == VOIDED:
        _require(clock.phase is Phase.WORK, event, "only a running pomodoro can be voided")
        # "Never commenced": elapsed work is discarded, no counter moves.
        return replace(clock, phase=Phase.IDLE, phase_started_at=None, phase_deadline=None)
    if t == INTERRUPTION_LOGGED:
        _require(clock.phase is Phase.WORK, event, "interruptions are only logged during work")
        return clock
    if t == DAY_ROLLED:
        return replace(clock, total_completed_today=0)
    raise InvalidHistory(f"unknown timer event type {t!r}", event_type=t, at=event.at)


def start_pomodoro(
    clock: PomodoroClock, config: TimerConfig, now: int
) -> tuple[PomodoroClock, Event]:
    """Begin a pomodoro; starting is always an explicit act, never automatic.

    Raises StartWhileActive when a pomodoro or break is already running.
    """
    if clock.phase is not Phase.IDLE:
        raise StartWhileActive(f"cannot start while {clock.phase.value} is active")
    event = Event(STARTED, now)
    return apply_event(clock, config, event), event


def advance(
    clock: PomodoroClock, config: TimerConfig, now: int
) -> tuple[PomodoroClock, list[Event]]:
    """Idempotent poll: apply every deadline crossed at or before ``now``.

    Events carry the deadline timestamps they logically occurred at, not
    ``now``, so a late poll yields the same history as a punctual one.
    A finished break parks the clock in Idle; it never auto-starts work.
    """
    events: list[Event] = []
    state = clock
    while True:
        deadline = state.phase_deadline
        if deadline is None or now < deadline:
            break
        if state.phase is Phase.WORK:
            completed = Event(WORK_COMPLETED, deadline)
            state = apply_event(state, config, completed)
            kind = "long" if state.phase is Phase.LONG_BREAK else "short"
            break_started = Event(BREAK_STARTED, deadline, {"kind": kind})
            state = apply_event(state, config, break_started)
            events.extend([completed, break_started])
        elif state.phase in BREAK_PHASES:
            ended = Event(BREAK_ENDED, deadline)
            state = apply_event(state, config, ended)
            events.append(ended)
        else:
            break
    return state, events


def log_interruption(
    clock: PomodoroClock, config: TimerConfig, interruption: Interruption
) -> tuple[PomodoroClock, Event]:
    """Record an interruption; a non-deflected one voids the pomodoro.

    Raises InterruptOutsideWork unless a pomodoro is running.
    """
    if clock.phase is not Phase.WORK:
        raise InterruptOutsideWork(
            f"cannot interrupt while {clock.phase.value}; no pomodoro is running"
        )
    kind = INTERRUPTION_LOGGED if interruption.deflected else VOIDED
    event = Event(kind, interruption.at, {"interruption": interruption.to_dict()})
    return apply_event(clock, config, event), event


def roll_day(clock: PomodoroClock, now: int) -> tuple[PomodoroClock, Event]:
    """Reset the daily completion counter at a civil-day boundary."""
    event = Event(DAY_ROLLED, now)
    return replace(clock, total_completed_today=0), event


def remaining(clock: PomodoroClock, now: int) -> int:
    """Milliseconds left in the active phase, clamped at zero.

    Raises NoActivePhase in Idle.
    """
    if clock.phase_deadline is None:
        raise NoActivePhase("the clock is idle")
    return max(0, clock.phase_deadline - now)


def replay(events: Iterable[Event] | Sequence[Event], config: TimerConfig) -> PomodoroClock:
    """Fold a recorded history back into the state it produced live.

    Raises InvalidHistory naming the first event that cannot apply.
    """
    clock = PomodoroClock()
    last_at: int | None = None
    for index, event in enumerate(events):
        if last_at is not None and event.at < last_at:
            raise InvalidHistory(
                f"event {index} ({event.type} at {event.at}): timestamps must not decrease",
                event_type=event.type,
                at=event.at,
            )
        try:
            clock = apply_event(clock, config, event)
        except InvalidHistory as exc:
            raise InvalidHistory(f"event {index}: {exc.message}", **exc.details) from None
        last_at = event.at
    return clock
