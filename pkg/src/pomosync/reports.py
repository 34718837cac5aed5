"""Processing and visualizing: derived metrics, iteration CSV, daily journal.

Everything here is a pure derivation over archive contents; running the same
bytes through twice yields identical output.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from . import session as session_mod
from . import timer
from .archive import Archive, JournalEntry, build_daily_record, date_of_ms, replay_ledger
from .ledger import Ledger, StoryStatus, TrackMark, breakdown, units_as_pomodoros

CSV_HEADER = ["story_id", "title", "estimate_pomodoros", "actual_pomodoros", "status"]


@dataclass(frozen=True)
class Metrics:
    """Iteration-health numbers derived from the archive."""

    accuracy: dict[str, float]  # finished story id -> actual/estimate
    daily_completed: dict[str, int]  # date -> completed pomodoros
    void_rate: float
    type_breakdown: dict[str, int]
    completed: int
    voided: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "accuracy": {k: round(v, 2) for k, v in sorted(self.accuracy.items())},
            "daily_completed": dict(sorted(self.daily_completed.items())),
            "void_rate": round(self.void_rate, 2),
            "type_breakdown": dict(sorted(self.type_breakdown.items())),
            "completed": self.completed,
            "voided": self.voided,
        }


def _in_period(date: str, period: tuple[str, str] | None) -> bool:
    return period is None or period[0] <= date <= period[1]


def process(
    archive: Archive,
    period: tuple[str, str] | None = None,
    *,
    tz: dt.tzinfo = dt.timezone.utc,
) -> Metrics:
    """Transform the raw archive into information.

    ``period`` is an inclusive (start_date, end_date) pair of ISO dates; None
    covers the whole archive. Raises CorruptArchive (from the read path)
    naming the first bad line.
    """
    events = archive.events()
    ledger = replay_ledger(events)

    completed = 0
    voided = 0
    daily: dict[str, int] = {}
    marks = []
    for _, event in events:
        date = date_of_ms(event.at, tz)
        if not _in_period(date, period):
            continue
        if event.type == timer.WORK_COMPLETED:
            completed += 1
            daily[date] = daily.get(date, 0) + 1
        elif event.type == timer.VOIDED:
            voided += 1
        elif event.type == session_mod.MARK_TRACKED:
            marks.append(event.data["mark"])

    accuracy = {
        story.id: ledger.actual_for(story.id) / story.estimate
        for story in ledger.stories.values()
        if story.tracked and story.status is StoryStatus.DONE and story.estimate > 0
    }
    attempted = completed + voided
    mark_objs = [TrackMark.from_dict(m) for m in marks]
    return Metrics(
        accuracy=accuracy,
        daily_completed=daily,
        void_rate=(voided / attempted) if attempted else 0.0,
        type_breakdown=breakdown(mark_objs),
        completed=completed,
        voided=voided,
    )


def export_iteration_csv(ledger: Ledger, iteration_id: str) -> str:
    """Spreadsheet view of one iteration: UTF-8, LF endings, RFC-4180 quoting.

    Effort renders as pomodoros with one fractional digit (half-units / 2).
    Raises UnknownIteration for an iteration nobody has seen.
    """
    stories = [s for s in ledger.stories_in_iteration(iteration_id) if s.tracked]
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for story in stories:
        writer.writerow(
            [
                story.id,
                story.title,
                units_as_pomodoros(story.estimate),
                units_as_pomodoros(ledger.actual_for(story.id)),
                story.status.value,
            ]
        )
    return buffer.getvalue()


def export_iteration_csv_from_archive(archive: Archive, iteration_id: str) -> str:
    return export_iteration_csv(replay_ledger(archive.events()), iteration_id)


def generate_journal(
    archive: Archive,
    member_id: str,
    date: str,
    manual_lines: list[str],
    *,
    tz: dt.tzinfo = dt.timezone.utc,
) -> JournalEntry:
    """Build the day's entry: manual lines first, then the generated summary.

    Empty inputs yield a minimal entry; calling again for the same member and
    date replaces the previous entry when the result is written back.
    """
    events = archive.events()
    session_id = ""
    for _, event in events:
        if event.type == session_mod.SESSION_CREATED:
            session_id = event.data["session_id"]
            break
    record = build_daily_record(session_id, events, date, tz)
    auto: list[str] = [f"pomodoros completed: {record.completed}"]
    stories = sorted({mark.story_id for mark in record.marks})
    if stories:
        auto.append("stories touched: " + ", ".join(stories))
    tracked_units = sum(mark.effort for mark in record.marks)
    if tracked_units:
        auto.append(f"effort tracked: {units_as_pomodoros(tracked_units)} pomodoros")
    counts = record.interruptions
    total_interruptions = sum(sum(v.values()) for v in counts.values())
    if total_interruptions or record.voided:
        auto.append(
            "interruptions: "
            f"{counts['internal']['deflected'] + counts['internal']['voiding']} internal, "
            f"{counts['external']['deflected'] + counts['external']['voiding']} external "
            f"({record.voided} voiding)"
        )
    return JournalEntry(
        date=date,
        member_id=member_id,
        lines=tuple(manual_lines),
        auto_summary=tuple(auto),
    )


def write_journal_file(entry: JournalEntry, directory: str | Path) -> str:
    """Journal export: one UTF-8 text file per member per day."""
    path = Path(directory) / f"{entry.member_id}__{entry.date}.txt"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(entry.render(), encoding="utf-8")
    return str(path)


def ratio(type_totals: dict[str, int], numerator: str, denominator: str) -> float | None:
    """Effort ratio between two pomodoro types, e.g. coding over refactoring."""
    bottom = type_totals.get(denominator, 0)
    if bottom == 0:
        return None
    return type_totals.get(numerator, 0) / bottom
