"""Machine-readable working status derived from the shared clock.

Every member of a session shows the same phase-derived state: do-not-disturb
with minutes remaining during work, on-break during breaks, idle otherwise.
Members without a live connection read as offline.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Collection

from .session import SessionState
from .timer import BREAK_PHASES, MS_PER_MINUTE, Phase, PomodoroClock


@dataclass(frozen=True)
class PresenceStatus:
    member_id: str
    state: str  # do_not_disturb | on_break | idle | offline
    minutes_remaining: int | None
    message: str

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "member_id": self.member_id,
            "state": self.state,
            "message": self.message,
        }
        if self.minutes_remaining is not None:
            out["minutes_remaining"] = self.minutes_remaining
        return out


def minutes_left(clock: PomodoroClock, now: int) -> int:
    """Whole minutes remaining, rounded up (61s left reads as 2 minutes)."""
    if clock.phase_deadline is None:
        return 0
    return max(0, -(-(clock.phase_deadline - now) // MS_PER_MINUTE))


def _phase_status(clock: PomodoroClock, now: int) -> tuple[str, int | None, str]:
    if clock.phase is Phase.WORK:
        minutes = minutes_left(clock, now)
        return "do_not_disturb", minutes, f"do not disturb — {minutes}m left"
    if clock.phase in BREAK_PHASES:
        minutes = minutes_left(clock, now)
        return "on_break", minutes, f"on break — {minutes}m left"
    return "idle", None, "idle"


def presence_for(
    state: SessionState, connected_ids: Collection[str], now: int
) -> list[PresenceStatus]:
    """Presence for every member; identical phase status for all connected ones."""
    phase_state, minutes, message = _phase_status(state.clock, now)
    statuses = []
    for member in state.members:
        if member.id in connected_ids:
            statuses.append(PresenceStatus(member.id, phase_state, minutes, message))
        else:
            statuses.append(PresenceStatus(member.id, "offline", None, "offline"))
    return statuses
