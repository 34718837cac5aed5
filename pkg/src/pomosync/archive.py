"""Append-only per-session archive: JSON-lines, self-describing, rescannable.

One file per session. Every line carries a type tag ``t`` and schema version
``v``; a full-file rescan reconstructs all derived state, there is no hidden
state anywhere else. Line types:

    event          {"t":"event","v":1,"session_id":...,"seq":...,"event":{...}}
    daily_record   {"t":"daily_record","v":1,"record":{...}}
    iteration_record {"t":"iteration_record","v":1,"record":{...}}
    audit          {"t":"audit","v":1,"at":...,"note":...}

Re-recording a day appends a superseding record (last one wins) plus an audit
line; nothing is ever rewritten in place.
"""

from __future__ import annotations

import datetime as dt
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterator
from zoneinfo import ZoneInfo

from . import session as session_mod
from . import timer
from .errors import DomainError
from .ledger import Ledger, Story, StoryStatus, TrackMark
from .timer import Event

SCHEMA_VERSION = 1

LINE_EVENT = "event"
LINE_DAILY = "daily_record"
LINE_ITERATION = "iteration_record"
LINE_AUDIT = "audit"

_LINE_TYPES = frozenset({LINE_EVENT, LINE_DAILY, LINE_ITERATION, LINE_AUDIT})


class CorruptArchive(DomainError):
    code = "corrupt_archive"


def local_timezone() -> dt.tzinfo:
    tz = dt.datetime.now().astimezone().tzinfo
    return tz if tz is not None else dt.timezone.utc


def resolve_timezone(name: str | None) -> dt.tzinfo:
    """Named zone, or the server's local zone when unset."""
    if not name:
        return local_timezone()
    if name.upper() == "UTC":
        return dt.timezone.utc
    return ZoneInfo(name)


def date_of_ms(at_ms: int, tz: dt.tzinfo) -> str:
    """Civil date (ISO) of a Unix-epoch millisecond timestamp."""
    return dt.datetime.fromtimestamp(at_ms / 1000, tz).date().isoformat()


def day_window_ms(date: str, tz: dt.tzinfo) -> tuple[int, int]:
    """[start, end) of a civil date in epoch milliseconds."""
    day = dt.date.fromisoformat(date)
    start = dt.datetime.combine(day, dt.time.min, tzinfo=tz)
    end = start + dt.timedelta(days=1)
    return int(start.timestamp() * 1000), int(end.timestamp() * 1000)


@dataclass(frozen=True)
class DailyRecord:
    """Archive of one day's observations, derived purely from the event log."""

    date: str
    session_id: str
    events: tuple[tuple[int, Event], ...]
    completed: int
    voided: int
    interruptions: dict[str, dict[str, int]]
    marks: tuple[TrackMark, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "date": self.date,
            "session_id": self.session_id,
            "events": [[seq, ev.to_dict()] for seq, ev in self.events],
            "completed": self.completed,
            "voided": self.voided,
            "interruptions": self.interruptions,
            "marks": [m.to_dict() for m in self.marks],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "DailyRecord":
        return cls(
            date=str(data["date"]),
            session_id=str(data["session_id"]),
            events=tuple((int(seq), Event.from_dict(ev)) for seq, ev in data["events"]),
            completed=int(data["completed"]),
            voided=int(data["voided"]),
            interruptions={
                k: {kk: int(vv) for kk, vv in v.items()}
                for k, v in data["interruptions"].items()
            },
            marks=tuple(TrackMark.from_dict(m) for m in data["marks"]),
        )


@dataclass(frozen=True)
class IterationRecord:
    iteration_id: str
    start_date: str
    end_date: str
    stories: tuple[dict[str, Any], ...]  # per-story {id, title, estimate, actual, status}
    total_estimate: int
    total_actual: int
    type_breakdown: dict[str, int]

    def to_dict(self) -> dict[str, Any]:
        return {
            "iteration_id": self.iteration_id,
            "start_date": self.start_date,
            "end_date": self.end_date,
            "stories": list(self.stories),
            "total_estimate": self.total_estimate,
            "total_actual": self.total_actual,
            "type_breakdown": self.type_breakdown,
        }


@dataclass(frozen=True)
class JournalEntry:
    """End-of-day activity summary for one member; manual lines first."""

    date: str
    member_id: str
    lines: tuple[str, ...]
    auto_summary: tuple[str, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "date": self.date,
            "member_id": self.member_id,
            "lines": list(self.lines),
            "auto_summary": list(self.auto_summary),
        }

    def render(self) -> str:
        header = f"journal {self.date} {self.member_id}"
        body = list(self.lines) + [f"[auto] {line}" for line in self.auto_summary]
        return "\n".join([header, *body]) + "\n"


class Archive:
    """Reader/writer for one session's JSON-lines file. Single writer only."""

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)

    def exists(self) -> bool:
        return self.path.exists()

    def append_line(self, line: dict[str, Any]) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        encoded = json.dumps(line, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        with open(self.path, "a", encoding="utf-8") as handle:
            handle.write(encoded + "\n")
            handle.flush()
            os.fsync(handle.fileno())

    def append_event(self, session_id: str, seq: int, event: Event) -> None:
        self.append_line(
            {
                "t": LINE_EVENT,
                "v": SCHEMA_VERSION,
                "session_id": session_id,
                "seq": seq,
                "event": event.to_dict(),
            }
        )

    def append_audit(self, at: int, note: str) -> None:
        self.append_line({"t": LINE_AUDIT, "v": SCHEMA_VERSION, "at": at, "note": note})

    def lines(self) -> Iterator[tuple[int, dict[str, Any]]]:
        """Yield (line_number, parsed line); CorruptArchive names bad lines."""
        if not self.path.exists():
            return
        with open(self.path, encoding="utf-8") as handle:
            for number, raw in enumerate(handle, start=1):
                raw = raw.strip()
                if not raw:
                    continue
                try:
                    parsed = json.loads(raw)
                except json.JSONDecodeError as exc:
                    raise CorruptArchive(
                        f"line {number} is not valid JSON: {exc}", line=number
                    ) from None
                if not isinstance(parsed, dict) or parsed.get("t") not in _LINE_TYPES:
                    raise CorruptArchive(
                        f"line {number} has no recognized type tag", line=number
                    )
                if parsed.get("v") != SCHEMA_VERSION:
                    raise CorruptArchive(
                        f"line {number} has unsupported schema version {parsed.get('v')!r}",
                        line=number,
                    )
                yield number, parsed

    def events(self) -> list[tuple[int, Event]]:
        out = []
        for number, line in self.lines():
            if line["t"] == LINE_EVENT:
                try:
                    out.append((int(line["seq"]), Event.from_dict(line["event"])))
                except (KeyError, TypeError, ValueError) as exc:
                    raise CorruptArchive(
                        f"line {number} is not a valid event: {exc}", line=number
                    ) from None
        return out

    def daily_records(self) -> dict[str, DailyRecord]:
        """Latest record per date (append-only store: last one wins)."""
        out: dict[str, DailyRecord] = {}
        for number, line in self.lines():
            if line["t"] == LINE_DAILY:
                try:
                    record = DailyRecord.from_dict(line["record"])
                except (KeyError, TypeError, ValueError) as exc:
                    raise CorruptArchive(
                        f"line {number} is not a valid daily record: {exc}", line=number
                    ) from None
                out[record.date] = record
        return out

    def journal_entries(self) -> dict[tuple[str, str], JournalEntry]:
        """Latest entry per (member, date); upsert semantics by replay order."""
        out: dict[tuple[str, str], JournalEntry] = {}
        for _, line in self.lines():
            if line["t"] == LINE_EVENT and line["event"]["type"] == session_mod.JOURNAL_WRITTEN:
                data = line["event"]["data"]
                entry = JournalEntry(
                    date=str(data["date"]),
                    member_id=str(data["member_id"]),
                    lines=tuple(data.get("lines", [])),
                    auto_summary=tuple(data.get("auto_summary", [])),
                )
                out[(entry.member_id, entry.date)] = entry
        return out


def replay_ledger(events: Iterator[tuple[int, Event]] | list[tuple[int, Event]]) -> Ledger:
    """Fold the ledger-facing events of a session log into a Ledger."""
    out = Ledger()
    for _, event in events:
        if event.type == session_mod.STORY_ADDED:
            out.add_story(Story.from_dict(event.data["story"]))
        elif event.type == session_mod.STORY_ESTIMATED:
            story = out.get_story(event.data["story_id"])
            out.stories[story.id] = Story.from_dict(
                {**story.to_dict(), "estimate": int(event.data["estimate"])}
            )
        elif event.type == session_mod.STORY_STATUS_SET:
            out.set_status(event.data["story_id"], StoryStatus(event.data["status"]))
        elif event.type == session_mod.MARK_TRACKED:
            out.apply_mark(TrackMark.from_dict(event.data["mark"]))
    return out


def _slice_for_date(
    events: list[tuple[int, Event]], date: str, tz: dt.tzinfo
) -> list[tuple[int, Event]]:
    start, end = day_window_ms(date, tz)
    return [(seq, ev) for seq, ev in events if start <= ev.at < end]


def build_daily_record(
    session_id: str,
    events: list[tuple[int, Event]],
    date: str,
    tz: dt.tzinfo,
) -> DailyRecord:
    """Pure derivation of one day's counts from the event log."""
    day = _slice_for_date(events, date, tz)
    completed = sum(1 for _, ev in day if ev.type == timer.WORK_COMPLETED)
    voided = sum(1 for _, ev in day if ev.type == timer.VOIDED)
    interruptions = {
        "internal": {"deflected": 0, "voiding": 0},
        "external": {"deflected": 0, "voiding": 0},
    }
    for _, ev in day:
        if ev.type == timer.INTERRUPTION_LOGGED:
            kind = ev.data["interruption"]["kind"]
            interruptions[kind]["deflected"] += 1
        elif ev.type == timer.VOIDED:
            kind = ev.data["interruption"]["kind"]
            interruptions[kind]["voiding"] += 1
    marks = tuple(
        TrackMark.from_dict(ev.data["mark"])
        for _, ev in day
        if ev.type == session_mod.MARK_TRACKED
    )
    return DailyRecord(
        date=date,
        session_id=session_id,
        events=tuple(day),
        completed=completed,
        voided=voided,
        interruptions=interruptions,
        marks=marks,
    )


def record_day(
    archive: Archive,
    session_id: str,
    date: str,
    *,
    tz: dt.tzinfo | None = None,
    now: int | None = None,
) -> DailyRecord:
    """Derive and append the day's record; re-recording supersedes and audits.

    An empty day yields a zeroed record, not an error.
    """
    tz = tz or local_timezone()
    record = build_daily_record(session_id, archive.events(), date, tz)
    replacing = date in archive.daily_records()
    archive.append_line({"t": LINE_DAILY, "v": SCHEMA_VERSION, "record": record.to_dict()})
    if replacing:
        stamp = now if now is not None else record.events[-1][1].at if record.events else 0
        archive.append_audit(stamp, f"daily record for {date} re-recorded (supersedes earlier)")
    return record


def record_iteration(
    archive: Archive, ledger: Ledger, iteration_id: str, *, start_date: str = "", end_date: str = ""
) -> IterationRecord:
    """Freeze an iteration's spreadsheet row set; totals are checked on write."""
    stories = [s for s in ledger.stories_in_iteration(iteration_id) if s.tracked]
    rows = tuple(
        {
            "id": s.id,
            "title": s.title,
            "estimate": s.estimate,
            "actual": ledger.actual_for(s.id),
            "status": s.status.value,
        }
        for s in stories
    )
    record = IterationRecord(
        iteration_id=iteration_id,
        start_date=start_date,
        end_date=end_date,
        stories=rows,
        total_estimate=sum(r["estimate"] for r in rows),
        total_actual=sum(r["actual"] for r in rows),
        type_breakdown=ledger.type_breakdown(iteration_id),
    )
    if record.total_estimate != sum(r["estimate"] for r in record.stories):
        raise CorruptArchive("iteration totals do not match story sums")
    if record.total_actual != sum(r["actual"] for r in record.stories):
        raise CorruptArchive("iteration totals do not match story sums")
    archive.append_line({"t": LINE_ITERATION, "v": SCHEMA_VERSION, "record": record.to_dict()})
    return record
