"""Command-line client: session commands online, reports offline.

Settings resolve as flags > environment > config file > defaults. The config
file is plain ``key = value`` lines (keys: server, token, member_id,
display_name, role, session, data_dir). Exit codes: 0 success, 1 domain
error, 2 usage error, 3 connection failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from .archive import Archive, build_daily_record, record_day, replay_ledger, resolve_timezone
from .client import ConnectionFailed, PomodoroClient, ServerError, local_ms
from .errors import DomainError
from .reports import export_iteration_csv, generate_journal

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2
EXIT_CONNECT = 3

_PHASE_LINE = {
    "work": "do not disturb",
    "short_break": "on break",
    "long_break": "on break",
    "idle": "idle",
}


@dataclass
class Settings:
    server: str = "127.0.0.1:7524"
    token: str = ""
    member_id: str = ""
    display_name: str = ""
    role: str = "developer"
    session: str = ""
    data_dir: str = "pomosync-data"
    timezone: str | None = None
    as_json: bool = False


def read_config_file(path: str | Path) -> dict[str, str]:
    values: dict[str, str] = {}
    path = Path(path)
    if not path.exists():
        return values
    for raw in path.read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if sep:
            values[key.strip()] = value.strip()
    return values


def resolve_settings(args: argparse.Namespace) -> Settings:
    file_values = read_config_file(args.config)
    settings = Settings()
    settings.server = (
        args.server
        or os.environ.get("POMOSYNC_SERVER", "")
        or file_values.get("server", settings.server)
    )
    settings.token = (
        args.token
        or os.environ.get("POMOSYNC_TOKEN", "")
        or file_values.get("token", "")
    )
    settings.member_id = args.member or file_values.get("member_id", "")
    settings.display_name = args.name or file_values.get("display_name", "")
    settings.role = args.role or file_values.get("role", "developer")
    settings.session = args.session or file_values.get("session", "")
    settings.data_dir = args.data_dir or file_values.get("data_dir", "pomosync-data")
    settings.timezone = args.timezone or file_values.get("timezone") or None
    settings.as_json = bool(args.json)
    return settings


def _require(settings: Settings, parser: argparse.ArgumentParser, *fields: str) -> None:
    for name in fields:
        if not getattr(settings, name):
            parser.error(f"missing {name}; pass --{name.replace('_', '-')} or set it in the config file")


def _connect(settings: Settings) -> PomodoroClient:
    host, _, port = settings.server.partition(":")
    return PomodoroClient(host or "127.0.0.1", int(port or 7524))


def _member_dict(settings: Settings) -> dict:
    return {
        "id": settings.member_id,
        "display_name": settings.display_name or settings.member_id,
        "role": settings.role,
        "full_time": True,
    }


def _emit(settings: Settings, payloads: list[dict], text: str) -> None:
    if settings.as_json:
        for payload in payloads:
            print(json.dumps(payload, sort_keys=True))
    else:
        print(text)


def _join(client: PomodoroClient, settings: Settings, *, create: bool = False, config=None):
    return client.hello(
        settings.session,
        _member_dict(settings),
        create=create,
        config=config,
        token=settings.token,
    )


def _run_command(settings: Settings, name: str, args: dict, success_text) -> int:
    with _connect(settings) as client:
        _join(client, settings)
        events = client.command(name, args)
        payloads = [m.payload for m in events]
        text = success_text(payloads) if callable(success_text) else success_text
        _emit(settings, payloads, text)
    return EXIT_OK


def _status_line(view, now_ms: int) -> str:
    label = _PHASE_LINE.get(view.phase, view.phase)
    if view.phase in ("work", "short_break", "long_break"):
        return f"{label} — {view.minutes_remaining(now_ms)}m left"
    return label


# -- subcommand handlers --


def cmd_session(settings: Settings, args: argparse.Namespace) -> int:
    if args.action == "leave":
        return _run_command(settings, "leave", {}, "left the session")
    create = args.action == "create"
    config = None
    if create and (args.work or args.short_break or args.long_break or args.every):
        config = {
            "work_duration": args.work or 25,
            "short_break": args.short_break or 5,
            "long_break": args.long_break or 15,
            "long_break_every": args.every or 4,
        }
    with _connect(settings) as client:
        snapshot = _join(client, settings, create=create, config=config)
        members = len(snapshot.payload["session"]["members"])
        _emit(
            settings,
            [snapshot.payload],
            f"session {settings.session!r} {'created' if create else 'joined'} "
            f"({members} member{'s' if members != 1 else ''})",
        )
    return EXIT_OK


def cmd_ready(settings: Settings, args: argparse.Namespace) -> int:
    return _run_command(settings, "ready", {}, "ready declared")


def cmd_start(settings: Settings, args: argparse.Namespace) -> int:
    def text(payloads: list[dict]) -> str:
        deadline = payloads[-1]["deadline"]
        return f"pomodoro started; deadline at server time {deadline}"

    return _run_command(settings, "start", {}, text)


def cmd_void(settings: Settings, args: argparse.Namespace) -> int:
    return _run_command(
        settings,
        "void",
        {"kind": args.kind, "note": args.note},
        "pomodoro voided: it never commenced, nobody earns credit",
    )


def cmd_interrupt(settings: Settings, args: argparse.Namespace) -> int:
    if not args.deflected:
        return cmd_void(settings, args)
    return _run_command(
        settings,
        "interrupt",
        {"kind": args.kind, "note": args.note, "deflected": True},
        "interruption logged; the pomodoro continues",
    )


def cmd_estimate(settings: Settings, args: argparse.Namespace) -> int:
    units = round(args.pomodoros * 2)
    if abs(units - args.pomodoros * 2) > 1e-9:
        raise DomainError("estimates are in half-pomodoro steps (e.g. 2 or 2.5)")

    def text(payloads: list[dict]) -> str:
        advice = payloads[-1]["event"]["data"].get("advice", "ok")
        note = {
            "ok": "",
            "split_suggested": " (more than 5 pomodoros: consider breaking it down)",
            "combine_suggested": " (less than 1 pomodoro: consider combining simple tasks)",
        }.get(advice, "")
        return f"estimated {args.story} at {args.pomodoros} pomodoros{note}"

    return _run_command(
        settings,
        "estimate",
        {
            "story_id": args.story,
            "estimate": units,
            "title": args.title or "",
            "iteration_id": args.iteration or "",
        },
        text,
    )


def cmd_track(settings: Settings, args: argparse.Namespace) -> int:
    payload = {
        "story_id": args.story,
        "ptype": args.type,
        "effort": 1 if args.half else 2,
    }
    if args.pomodoro is not None:
        payload["pomodoro_seq"] = args.pomodoro
    label = "half pomodoro" if args.half else "pair pomodoro"
    return _run_command(settings, "track", payload, f"tracked one {label} on {args.story}")


def cmd_rotate(settings: Settings, args: argparse.Namespace) -> int:
    def text(payloads: list[dict]) -> str:
        pairing = payloads[-1]["event"]["data"]["pairing"]
        pairs = " ".join("+".join(pair) for pair in pairing["pairs"])
        solo = (" solo: " + ", ".join(pairing["solo"])) if pairing["solo"] else ""
        return f"pairs rotated: {pairs}{solo}"

    return _run_command(settings, "rotate", {}, text)


def cmd_status(settings: Settings, args: argparse.Namespace) -> int:
    with _connect(settings) as client:
        snapshot = _join(client, settings)
        if not args.watch:
            session = snapshot.payload["session"]
            line = _status_line(client.view, local_ms())
            ready = ", ".join(session["ready"]) or "nobody"
            _emit(
                settings,
                [snapshot.payload],
                f"{line}\nmembers: {len(session['members'])}; ready: {ready}",
            )
            return EXIT_OK
        # watch mode: one reader thread folds the stream, this thread renders
        stop = threading.Event()
        reader = threading.Thread(target=client.pump, args=(stop.is_set,), daemon=True)
        reader.start()
        try:
            while reader.is_alive():
                line = _status_line(client.view, local_ms())
                sys.stdout.write("\r\x1b[2K" + line)
                sys.stdout.flush()
                time.sleep(0.25)
            print()
        except KeyboardInterrupt:
            stop.set()
            print()
        return EXIT_OK


def _archive_for(settings: Settings, parser: argparse.ArgumentParser) -> Archive:
    _require(settings, parser, "session")
    return Archive(Path(settings.data_dir) / f"{settings.session}.jsonl")


def cmd_report(settings: Settings, args: argparse.Namespace, parser) -> int:
    tz = resolve_timezone(settings.timezone)
    store = _archive_for(settings, parser)
    if args.what == "day":
        date = args.date or time.strftime("%Y-%m-%d")
        if args.record:
            record = record_day(store, settings.session, date, tz=tz)
        else:
            record = build_daily_record(settings.session, store.events(), date, tz)
        if settings.as_json:
            print(json.dumps(record.to_dict(), sort_keys=True))
        else:
            counts = record.interruptions
            print(
                f"{date}: {record.completed} completed, {record.voided} voided; "
                f"interruptions internal={sum(counts['internal'].values())} "
                f"external={sum(counts['external'].values())}; "
                f"marks={len(record.marks)}"
            )
        return EXIT_OK
    # iteration report: CSV identical to the export operation
    ledger = replay_ledger(store.events())
    sys.stdout.write(export_iteration_csv(ledger, args.iteration))
    return EXIT_OK


def cmd_journal(settings: Settings, args: argparse.Namespace, parser) -> int:
    if args.action == "add":
        date = args.date or time.strftime("%Y-%m-%d")
        return _run_command(
            settings,
            "journal",
            {"date": date, "lines": args.lines},
            f"journal for {date} written",
        )
    store = _archive_for(settings, parser)
    member = args.journal_member or settings.member_id
    date = args.date or time.strftime("%Y-%m-%d")
    entries = store.journal_entries()
    entry = entries.get((member, date))
    if entry is None:
        # no stored entry: derive a fresh auto-only view of the day
        entry = generate_journal(store, member, date, [], tz=resolve_timezone(settings.timezone))
    if settings.as_json:
        print(json.dumps(entry.to_dict(), sort_keys=True))
    else:
        sys.stdout.write(entry.render())
    return EXIT_OK


def cmd_story(settings: Settings, args: argparse.Namespace) -> int:
    if args.action == "add":
        return _run_command(
            settings,
            "story",
            {
                "op": "add",
                "story_id": args.story,
                "title": args.title or "",
                "iteration_id": args.iteration or "",
                "tracked": not args.untracked,
            },
            f"story {args.story} added",
        )
    return _run_command(
        settings,
        "story",
        {"op": "status", "story_id": args.story, "status": "done"},
        f"story {args.story} marked done",
    )


# -- argument parsing --


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pomosync", description=__doc__)
    parser.add_argument("--server", default="", help="server address host:port")
    parser.add_argument("--token", default="", help="shared session token")
    parser.add_argument("--member", default="", help="your member id")
    parser.add_argument("--name", default="", help="display name")
    parser.add_argument("--role", default="", choices=["", "developer", "coach", "customer_proxy"])
    parser.add_argument("--session", default="", help="session id")
    parser.add_argument("--config", default=os.environ.get("POMOSYNC_CONFIG", "pomosync.conf"))
    parser.add_argument("--data-dir", default="", help="archive directory for offline reports")
    parser.add_argument("--timezone", default="", help="civil timezone for reports")
    parser.add_argument("--json", action="store_true", help="emit raw server payloads")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("session", help="create, join, or leave a session")
    p.add_argument("action", choices=["create", "join", "leave"])
    p.add_argument("--work", type=int, default=0, help="work minutes (create only)")
    p.add_argument("--short-break", type=int, default=0)
    p.add_argument("--long-break", type=int, default=0)
    p.add_argument("--every", type=int, default=0, help="pomodoros per long break")

    sub.add_parser("ready", help="declare yourself ready for the next pomodoro")
    sub.add_parser("start", help="start the shared pomodoro")

    p = sub.add_parser("void", help="void the running pomodoro for everyone")
    p.add_argument("--kind", choices=["internal", "external"], default="external")
    p.add_argument("--note", default="")

    p = sub.add_parser("interrupt", help="log an interruption")
    p.add_argument("--deflected", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--kind", choices=["internal", "external"], default="external")
    p.add_argument("--note", default="")

    p = sub.add_parser("estimate", help="estimate a story in pair-pomodoros")
    p.add_argument("story")
    p.add_argument("pomodoros", type=float)
    p.add_argument("--title", default="")
    p.add_argument("--iteration", default="")

    p = sub.add_parser("track", help="mark a completed pomodoro against a story")
    p.add_argument("story")
    p.add_argument("--type", required=True, help="pomodoro type, e.g. Coding")
    p.add_argument("--half", action="store_true", help="solo work: half-pomodoro credit")
    p.add_argument("--pomodoro", type=int, default=None, help="log seq of the pomodoro")

    sub.add_parser("rotate", help="rotate pairs (round-robin)")

    p = sub.add_parser("status", help="current phase and countdown")
    p.add_argument("--watch", action="store_true")

    p = sub.add_parser("report", help="derive reports from the local archive")
    rp = p.add_subparsers(dest="what", required=True)
    day = rp.add_parser("day")
    day.add_argument("--date", default="")
    day.add_argument("--record", action="store_true", help="append the record to the archive")
    it = rp.add_parser("iteration")
    it.add_argument("iteration")

    p = sub.add_parser("journal", help="end-of-day activity journal")
    jp = p.add_subparsers(dest="action", required=True)
    add = jp.add_parser("add")
    add.add_argument("lines", nargs="*")
    add.add_argument("--date", default="")
    show = jp.add_parser("show")
    show.add_argument("--date", default="")
    show.add_argument("--journal-member", default="")

    p = sub.add_parser("story", help="manage stories directly")
    sp = p.add_subparsers(dest="action", required=True)
    add = sp.add_parser("add")
    add.add_argument("story")
    add.add_argument("--title", default="")
    add.add_argument("--iteration", default="")
    add.add_argument("--untracked", action="store_true")
    done = sp.add_parser("done")
    done.add_argument("story")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    settings = resolve_settings(args)

    online = args.cmd in (
        "session", "ready", "start", "void", "interrupt",
        "estimate", "track", "rotate", "status",
    ) or (args.cmd == "journal" and args.action == "add")
    if online:
        _require(settings, parser, "session", "member_id")

    try:
        if args.cmd == "session":
            return cmd_session(settings, args)
        if args.cmd == "ready":
            return cmd_ready(settings, args)
        if args.cmd == "start":
            return cmd_start(settings, args)
        if args.cmd == "void":
            return cmd_void(settings, args)
        if args.cmd == "interrupt":
            return cmd_interrupt(settings, args)
        if args.cmd == "estimate":
            return cmd_estimate(settings, args)
        if args.cmd == "track":
            return cmd_track(settings, args)
        if args.cmd == "rotate":
            return cmd_rotate(settings, args)
        if args.cmd == "status":
            return cmd_status(settings, args)
        if args.cmd == "report":
            return cmd_report(settings, args, parser)
        if args.cmd == "journal":
            return cmd_journal(settings, args, parser)
        if args.cmd == "story":
            return cmd_story(settings, args)
        parser.error(f"unknown command {args.cmd!r}")
    except ServerError as exc:
        print(f"error: {exc.reason}", file=sys.stderr)
        return EXIT_DOMAIN
    except DomainError as exc:
        print(f"error: {exc.message}", file=sys.stderr)
        return EXIT_DOMAIN
    except ConnectionFailed as exc:
        print(f"connection failed: {exc}", file=sys.stderr)
        return EXIT_CONNECT
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
