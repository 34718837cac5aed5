"""Shared pomodoro coordination: one timer rules the whole team.

A server-hosted PomodoroClock drives everyone's work/break rhythm; an effort
ledger prices stories in pair-pomodoros; the archive records each day for
processing and visualizing.
"""

from .ledger import Ledger, Story, TeamCapacity, TrackMark, capacity, meeting_effort
from .session import Member, Pairing, SessionState, create_session
from .timer import Interruption, PomodoroClock, TimerConfig

__version__ = "0.1.0"

__all__ = [
    "Interruption",
    "Ledger",
    "Member",
    "Pairing",
    "PomodoroClock",
    "SessionState",
    "Story",
    "TeamCapacity",
    "TimerConfig",
    "TrackMark",
    "capacity",
    "create_session",
    "meeting_effort",
    "__version__",
]
