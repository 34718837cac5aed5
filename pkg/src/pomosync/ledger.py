"""Pomodoro as the unit of effort: estimates, tracking marks, capacity math.

All effort is stored in integer half-pomodoro units (one pair-pomodoro = 2
units, solo work = 1 unit per person per slot); division by two happens only
when rendering. Voided pomodoros never earn a mark.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Iterable, Mapping

from .errors import DomainError

# Advice thresholds in half-pomodoro units, from the break-down/add-up rules:
# over 7 pomodoros is rejected outright, over 5 draws a warning, and anything
# under 1 pomodoro should be combined with other small tasks.
SPLIT_REQUIRED_ABOVE = 14
SPLIT_SUGGESTED_ABOVE = 10
COMBINE_BELOW = 2

DEFAULT_TYPES = ("Analyzing", "Coding", "Refactoring", "Testing", "Meeting", "Spike")


class UnknownStory(DomainError):
    code = "unknown_story"


class UntrackedStory(DomainError):
    code = "untracked_story"


class NegativeEstimate(DomainError):
    code = "negative_estimate"


class VoidedPomodoro(DomainError):
    code = "voided_pomodoro"


class UnknownPomodoro(DomainError):
    code = "unknown_pomodoro"


class InvalidEffort(DomainError):
    code = "invalid_effort"


class UnknownIteration(DomainError):
    code = "unknown_iteration"


class DuplicateStory(DomainError):
    code = "duplicate_story"


class SplitRequired(DomainError):
    """Error-grade advice: the estimate exceeds the hard break-down threshold."""

    code = "split_required"


class StoryStatus(str, Enum):
    PLANNED = "planned"
    IN_PROGRESS = "in_progress"
    DONE = "done"


class Advice(str, Enum):
    OK = "ok"
    COMBINE_SUGGESTED = "combine_suggested"
    SPLIT_SUGGESTED = "split_suggested"
    SPLIT_REQUIRED = "split_required"


@dataclass(frozen=True)
class Story:
    """A unit of work estimated in pair-pomodoros (stored as half-units).

    Untracked stories are exploration without time pressure: estimate stays 0
    and no marks may reference them. legacy_points is display-only text; no
    arithmetic ever touches it.
    """

    id: str
    title: str
    estimate: int = 0
    tracked: bool = True
    status: StoryStatus = StoryStatus.PLANNED
    iteration_id: str = ""
    legacy_points: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "title": self.title,
            "estimate": self.estimate,
            "tracked": self.tracked,
            "status": self.status.value,
            "iteration_id": self.iteration_id,
            "legacy_points": self.legacy_points,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Story":
        return cls(
            id=str(data["id"]),
            title=str(data.get("title", data["id"])),
            estimate=int(data.get("estimate", 0)),
            tracked=bool(data.get("tracked", True)),
            status=StoryStatus(data.get("status", "planned")),
            iteration_id=str(data.get("iteration_id", "")),
            legacy_points=str(data.get("legacy_points", "")),
        )


@dataclass(frozen=True)
class TrackMark:
    """One cross on the back of a story card: effort 2 for a pair-pomodoro,
    1 for a half (solo) pomodoro."""

    story_id: str
    pomodoro_seq: int
    ptype: str
    effort: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "story_id": self.story_id,
            "pomodoro_seq": self.pomodoro_seq,
            "ptype": self.ptype,
            "effort": self.effort,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "TrackMark":
        return cls(
            story_id=str(data["story_id"]),
            pomodoro_seq=int(data["pomodoro_seq"]),
            ptype=str(data["ptype"]),
            effort=int(data["effort"]),
        )


@dataclass(frozen=True)
class TeamCapacity:
    pairs: int
    pomodoros_per_pair_per_day: int
    total: int


def capacity(pairs: int, pomodoros_per_pair_per_day: int) -> TeamCapacity:
    """Daily team capacity in pair-pomodoros: pairs x pomodoros per pair."""
    if pairs < 0 or pomodoros_per_pair_per_day < 0:
        raise ValueError("capacity arguments must be non-negative")
    return TeamCapacity(pairs, pomodoros_per_pair_per_day, pairs * pomodoros_per_pair_per_day)


def meeting_effort(people: int, slots: int) -> int:
    """Meeting cost in half-pomodoro units: one per person per time slot."""
    if people < 0 or slots < 0:
        raise ValueError("meeting_effort arguments must be non-negative")
    return people * slots


def units_as_pomodoros(units: int) -> str:
    """Render half-units as pomodoros with one fractional digit, e.g. 5 -> '2.5'."""
    whole, half = divmod(units, 2)
    return f"{whole}.{'5' if half else '0'}"


def advice_for(
    estimate: int,
    *,
    split_required_above: int = SPLIT_REQUIRED_ABOVE,
    split_suggested_above: int = SPLIT_SUGGESTED_ABOVE,
    combine_below: int = COMBINE_BELOW,
) -> Advice:
    if estimate > split_required_above:
        return Advice.SPLIT_REQUIRED
    if estimate > split_suggested_above:
        return Advice.SPLIT_SUGGESTED
    if 0 < estimate < combine_below:
        return Advice.COMBINE_SUGGESTED
    return Advice.OK


def breakdown(marks: Iterable[TrackMark]) -> dict[str, int]:
    """Per-type effort totals; the sum always equals the marks' total effort."""
    totals: dict[str, int] = {}
    for mark in marks:
        totals[mark.ptype] = totals.get(mark.ptype, 0) + mark.effort
    return totals


class Ledger:
    """Mutable store of stories, marks, and pomodoro types for one session.

    Mutations run behind the session's single writer; reads are cheap and the
    server snapshots via to_dict(). Story actuals are always derived from the
    marks, never cached, so conservation cannot drift.
    """

    def __init__(self) -> None:
        self.stories: dict[str, Story] = {}
        self.marks: list[TrackMark] = []
        self._types: dict[str, str] = {}  # lowercase -> canonical name
        self._iterations: set[str] = set()
        for name in DEFAULT_TYPES:
            self._types[name.lower()] = name

    # -- pomodoro types (open set, case-insensitive unique) --

    def canonical_type(self, name: str) -> str:
        key = name.strip().lower()
        if not key:
            raise InvalidEffort("pomodoro type name must not be empty")
        if key not in self._types:
            self._types[key] = name.strip()
        return self._types[key]

    def type_names(self) -> list[str]:
        return sorted(self._types.values())

    # -- stories and iterations --

    def add_iteration(self, iteration_id: str) -> None:
        if iteration_id:
            self._iterations.add(iteration_id)

    def iteration_ids(self) -> set[str]:
        return set(self._iterations) | {
            s.iteration_id for s in self.stories.values() if s.iteration_id
        }

    def add_story(self, story: Story) -> Story:
        if story.id in self.stories:
            raise DuplicateStory(f"story {story.id!r} already exists", story_id=story.id)
        if not story.tracked and story.estimate != 0:
            raise UntrackedStory(
                f"untracked story {story.id!r} cannot carry an estimate", story_id=story.id
            )
        self.stories[story.id] = story
        self.add_iteration(story.iteration_id)
        return story

    def get_story(self, story_id: str) -> Story:
        try:
            return self.stories[story_id]
        except KeyError:
            raise UnknownStory(f"no story {story_id!r}", story_id=story_id) from None

    def set_status(self, story_id: str, status: StoryStatus) -> Story:
        story = replace(self.get_story(story_id), status=status)
        self.stories[story_id] = story
        return story

    def estimate_story(
        self,
        story_id: str,
        estimate: int,
        *,
        split_required_above: int = SPLIT_REQUIRED_ABOVE,
        split_suggested_above: int = SPLIT_SUGGESTED_ABOVE,
    ) -> tuple[Story, Advice]:
        """Store an estimate unless it is so large the story must be split.

        SplitRequired is error-grade: the oversize estimate is not stored and
        the story comes back unchanged.
        """
        story = self.get_story(story_id)
        if not story.tracked:
            raise UntrackedStory(
                f"story {story_id!r} is untracked exploration", story_id=story_id
            )
        if estimate < 0:
            raise NegativeEstimate(f"estimate must be >= 0, got {estimate}")
        advice = advice_for(
            estimate,
            split_required_above=split_required_above,
            split_suggested_above=split_suggested_above,
        )
        if advice is Advice.SPLIT_REQUIRED:
            return story, advice
        story = replace(story, estimate=estimate)
        self.stories[story_id] = story
        return story, advice

    # -- tracking --

    def track(
        self,
        story_id: str,
        pomodoro_seq: int,
        ptype: str,
        effort: int,
        outcomes: Mapping[int, str],
    ) -> TrackMark:
        """Append one mark against a completed pomodoro.

        ``outcomes`` maps Started seq to completed/voided/running (see
        session.pomodoro_outcomes); voided pomodoros yield zero credit and
        reject marks outright.
        """
        story = self.get_story(story_id)
        if not story.tracked:
            raise UntrackedStory(
                f"story {story_id!r} is untracked exploration", story_id=story_id
            )
        if effort not in (1, 2):
            raise InvalidEffort(f"effort must be 1 or 2 half-units, got {effort}")
        outcome = outcomes.get(pomodoro_seq)
        if outcome == "voided":
            raise VoidedPomodoro(
                f"pomodoro at seq {pomodoro_seq} was voided; it earns no credit",
                pomodoro_seq=pomodoro_seq,
            )
        if outcome != "completed":
            raise UnknownPomodoro(
                f"no completed pomodoro at seq {pomodoro_seq}", pomodoro_seq=pomodoro_seq
            )
        mark = TrackMark(story_id, pomodoro_seq, self.canonical_type(ptype), effort)
        self.marks.append(mark)
        return mark

    def apply_mark(self, mark: TrackMark) -> None:
        """Append an already-validated mark (archive replay path)."""
        self.marks.append(replace(mark, ptype=self.canonical_type(mark.ptype)))

    def actual_for(self, story_id: str) -> int:
        return sum(m.effort for m in self.marks if m.story_id == story_id)

    # -- queries --

    def stories_in_iteration(self, iteration_id: str) -> list[Story]:
        if iteration_id not in self.iteration_ids():
            raise UnknownIteration(f"no iteration {iteration_id!r}", iteration_id=iteration_id)
        return sorted(
            (s for s in self.stories.values() if s.iteration_id == iteration_id),
            key=lambda s: s.id,
        )

    def iteration_balance(self, iteration_id: str) -> dict[str, int]:
        """Totals in half-units; remaining counts only unfinished tracked stories."""
        stories = [s for s in self.stories_in_iteration(iteration_id) if s.tracked]
        total_estimate = sum(s.estimate for s in stories)
        total_actual = sum(self.actual_for(s.id) for s in stories)
        remaining = sum(
            max(0, s.estimate - self.actual_for(s.id))
            for s in stories
            if s.status is not StoryStatus.DONE
        )
        return {
            "total_estimate": total_estimate,
            "total_actual": total_actual,
            "remaining": remaining,
        }

    def type_breakdown(self, iteration_id: str | None = None) -> dict[str, int]:
        marks = self.marks
        if iteration_id is not None:
            in_iter = {s.id for s in self.stories_in_iteration(iteration_id)}
            marks = [m for m in marks if m.story_id in in_iter]
        return breakdown(marks)

    # -- snapshots --

    def to_dict(self) -> dict[str, Any]:
        return {
            "stories": [self.stories[k].to_dict() for k in sorted(self.stories)],
            "marks": [m.to_dict() for m in self.marks],
            "types": self.type_names(),
            "iterations": sorted(self._iterations),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Ledger":
        out = cls()
        for name in data.get("types", []):
            out.canonical_type(name)
        for iteration_id in data.get("iterations", []):
            out.add_iteration(iteration_id)
        for story in data.get("stories", []):
            out.add_story(Story.from_dict(story))
        for mark in data.get("marks", []):
            out.apply_mark(TrackMark.from_dict(mark))
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Ledger):
            return NotImplemented
        return self.to_dict() == other.to_dict()
