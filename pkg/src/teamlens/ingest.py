"""Parsing of raw interaction traces into normalized events.

Three input formats are handled here:

* event lines: one JSON object per line (messages, commits, work logs,
  task assignments);
* commit logs: ``commit``/``author``/``date`` header blocks followed by
  numstat lines (``added<TAB>deleted<TAB>path``);
* outcome tables: CSV with one row per team and sprint.
"""
from __future__ import annotations

import csv
import enum
import json
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import IO, Iterable, Mapping, Sequence

UNASSIGNED = "__unassigned__"


class EventKind(str, enum.Enum):
    MESSAGE = "message"
    COMMIT = "commit"
    WORKLOG = "worklog"
    TASK_ASSIGN = "task_assign"


# fields each kind may carry on top of kind/ts/actor
_KIND_FIELDS = {
    EventKind.MESSAGE: {"recipients", "channel"},
    EventKind.COMMIT: {"files"},
    EventKind.WORKLOG: {"task_id", "co_workers"},
    EventKind.TASK_ASSIGN: {"task_id"},
}


class ParseError(ValueError):
    """A trace record could not be parsed or failed validation."""

    def __init__(self, reason: str, line: int | None = None):
        self.reason = reason
        self.line = line
        super().__init__(f"line {line}: {reason}" if line is not None else reason)


@dataclass(frozen=True)
class FileChange:
    path: str
    added: int = 0
    deleted: int = 0


@dataclass(frozen=True)
class InteractionEvent:
    kind: EventKind
    timestamp: datetime
    actor: str
    recipients: frozenset[str] = frozenset()
    channel: str | None = None
    files: tuple[FileChange, ...] = ()
    task_id: str | None = None
    co_workers: frozenset[str] = frozenset()

    def __post_init__(self):
        validate_event(self)

    def members(self) -> set[str]:
        """Every member named by this event."""
        return {self.actor} | set(self.recipients) | set(self.co_workers)


@dataclass(frozen=True)
class TeamRoster:
    team_id: str
    members: tuple[str, ...]

    def __post_init__(self):
        if len(self.members) < 2:
            raise ValueError(f"team {self.team_id!r}: roster needs at least 2 members")
        if len(set(self.members)) != len(self.members):
            raise ValueError(f"team {self.team_id!r}: duplicate members in roster")
        for m in self.members:
            if not isinstance(m, str) or not m:
                raise ValueError(f"team {self.team_id!r}: member ids must be non-empty strings")

    def __contains__(self, member: object) -> bool:
        return member in self.members

    def __len__(self) -> int:
        return len(self.members)

    def index(self, member: str) -> int:
        return self.members.index(member)


@dataclass(frozen=True)
class SprintWindow:
    label: str
    start: datetime
    end: datetime

    def __post_init__(self):
        if self.start.tzinfo is None or self.end.tzinfo is None:
            raise ValueError(f"sprint {self.label!r}: start/end need a timezone")
        if not self.start < self.end:
            raise ValueError(f"sprint {self.label!r}: start must precede end")

    def contains(self, ts: datetime) -> bool:
        return self.start <= ts < self.end


@dataclass(frozen=True)
class OutcomeRecord:
    team_id: str
    sprint_label: str
    stories_passed: int
    story_points_passed: int
    communication_score: float

    def __post_init__(self):
        if self.stories_passed < 0 or self.story_points_passed < 0:
            raise ValueError("outcome counts must be >= 0")
        if not 1 <= self.communication_score <= 5:
            raise ValueError(
                f"communication_score {self.communication_score} outside Likert range [1, 5]"
            )


def validate_event(ev: InteractionEvent) -> None:
    if not isinstance(ev.actor, str) or not ev.actor:
        raise ParseError("actor must be a non-empty string")
    if ev.timestamp.tzinfo is None:
        raise ParseError("timestamp must carry a timezone")
    for name in ("recipients", "co_workers"):
        for m in getattr(ev, name):
            if not isinstance(m, str) or not m:
                raise ParseError(f"{name} entries must be non-empty strings")
    if ev.actor in ev.recipients:
        raise ParseError("actor in recipients")
    if ev.actor in ev.co_workers:
        raise ParseError("actor in co_workers")
    if ev.kind is EventKind.MESSAGE:
        if not ev.recipients and not ev.channel:
            raise ParseError("message needs recipients or a channel")
    elif ev.recipients or ev.channel is not None:
        raise ParseError(f"recipients/channel not allowed on {ev.kind.value}")
    if ev.kind is EventKind.COMMIT:
        if not ev.files:
            raise ParseError("commit needs at least one file")
        for f in ev.files:
            if not f.path:
                raise ParseError("file path must be non-empty")
            if f.added < 0 or f.deleted < 0:
                raise ParseError(f"negative line count for {f.path}")
    elif ev.files:
        raise ParseError(f"files not allowed on {ev.kind.value}")
    if ev.kind is EventKind.TASK_ASSIGN and not ev.task_id:
        raise ParseError("task_assign needs a task_id")
    if ev.co_workers and ev.kind is not EventKind.WORKLOG:
        raise ParseError(f"co_workers not allowed on {ev.kind.value}")
    if ev.task_id is not None and ev.kind not in (EventKind.WORKLOG, EventKind.TASK_ASSIGN):
        raise ParseError(f"task_id not allowed on {ev.kind.value}")


def parse_timestamp(text: str) -> datetime:
    """Parse an ISO-8601 instant with an explicit zone and normalize to UTC."""
    if not isinstance(text, str):
        raise ParseError("timestamp must be a string")
    s = text.strip()
    if s.endswith(("Z", "z")):
        s = s[:-1] + "+00:00"
    try:
        ts = datetime.fromisoformat(s)
    except ValueError:
        raise ParseError(f"bad timestamp {text!r}") from None
    if ts.tzinfo is None:
        raise ParseError(f"timestamp {text!r} has no zone")
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    ts = ts.astimezone(timezone.utc)
    fmt = "%Y-%m-%dT%H:%M:%S.%fZ" if ts.microsecond else "%Y-%m-%dT%H:%M:%SZ"
    return ts.strftime(fmt)


def _str_list(obj: dict, key: str) -> frozenset[str]:
    value = obj.get(key, [])
    if not isinstance(value, list):
        raise ParseError(f"{key} must be an array")
    for item in value:
        if not isinstance(item, str) or not item:
            raise ParseError(f"{key} entries must be non-empty strings")
    return frozenset(value)


def _count(value, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(f"{what} must be an integer")
    if value < 0:
        raise ParseError(f"{what} must be >= 0")
    return value


def event_from_dict(obj: Mapping) -> InteractionEvent:
    if not isinstance(obj, dict):
        raise ParseError("record is not an object")
    for key in ("kind", "ts", "actor"):
        if key not in obj:
            raise ParseError(f"missing required field {key!r}")
    try:
        kind = EventKind(obj["kind"])
    except ValueError:
        raise ParseError(f"unknown kind {obj['kind']!r}") from None
    unexpected = set(obj) - {"kind", "ts", "actor"} - _KIND_FIELDS[kind]
    if unexpected:
        raise ParseError(f"fields {sorted(unexpected)} not allowed on {kind.value}")
    actor = obj["actor"]
    if not isinstance(actor, str) or not actor:
        raise ParseError("actor must be a non-empty string")

    files: list[FileChange] = []
    raw_files = obj.get("files", [])
    if not isinstance(raw_files, list):
        raise ParseError("files must be an array")
    for f in raw_files:
        if not isinstance(f, dict) or not isinstance(f.get("path"), str):
            raise ParseError("file entries need a string path")
        files.append(
            FileChange(f["path"], _count(f.get("added", 0), "added"), _count(f.get("deleted", 0), "deleted"))
        )
    channel = obj.get("channel")
    if channel is not None and not isinstance(channel, str):
        raise ParseError("channel must be a string")
    task_id = obj.get("task_id")
    if task_id is not None and not isinstance(task_id, str):
        raise ParseError("task_id must be a string")

    return InteractionEvent(
        kind=kind,
        timestamp=parse_timestamp(obj["ts"]),
        actor=actor,
        recipients=_str_list(obj, "recipients"),
        channel=channel,
        files=tuple(files),
        task_id=task_id,
        co_workers=_str_list(obj, "co_workers"),
    )


def event_to_dict(ev: InteractionEvent) -> dict:
    out: dict = {"kind": ev.kind.value, "ts": format_timestamp(ev.timestamp), "actor": ev.actor}
    if ev.kind is EventKind.MESSAGE:
        out["recipients"] = sorted(ev.recipients)
        if ev.channel is not None:
            out["channel"] = ev.channel
    elif ev.kind is EventKind.COMMIT:
        out["files"] = [{"path": f.path, "added": f.added, "deleted": f.deleted} for f in ev.files]
    else:
        if ev.task_id is not None:
            out["task_id"] = ev.task_id
        if ev.kind is EventKind.WORKLOG:
            out["co_workers"] = sorted(ev.co_workers)
    return out


def serialize_events(events: Iterable[InteractionEvent]) -> str:
    return "".join(json.dumps(event_to_dict(ev), sort_keys=True) + "\n" for ev in events)


def _lines(stream: str | IO[str] | Iterable[str]) -> Iterable[str]:
    if isinstance(stream, str):
        return stream.splitlines()
    return (line.rstrip("\r\n") for line in stream)


def parse_events(
    stream: str | IO[str] | Iterable[str],
    *,
    skip_bad_lines: bool = False,
    skipped: list[ParseError] | None = None,
) -> list[InteractionEvent]:
    """Parse newline-delimited event records, preserving input order.

    Blank lines are ignored. A bad line raises :class:`ParseError` carrying
    its 1-based line number, unless ``skip_bad_lines`` is set; then the
    error is appended to ``skipped`` (when given) and parsing continues.
    """
    events = []
    for lineno, line in enumerate(_lines(stream), start=1):
        if not line.strip():
            continue
        try:
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"malformed record: {exc.msg}") from None
            events.append(event_from_dict(obj))
        except ParseError as exc:
            err = ParseError(exc.reason, lineno)
            if not skip_bad_lines:
                raise err from None
            if skipped is not None:
                skipped.append(err)
    return events


_NUMSTAT = re.compile(r"^(\d+|-)\t(\d+|-)\t(.+)$")


@dataclass
class _Block:
    start: int
    hash: str
    author: str | None = None
    date: str | None = None
    date_line: int = 0
    separated: bool = False
    files: list[FileChange] = field(default_factory=list)


def parse_commit_log(
    stream: str | IO[str] | Iterable[str],
    author_map: Mapping[str, str],
    *,
    skip_bad_lines: bool = False,
    skipped: list[ParseError] | None = None,
) -> list[InteractionEvent]:
    """Parse a numstat-style commit log into one commit event per block.

    Each block is ``commit <hash>``, ``author <name>``, ``date <iso>``, a
    blank line, then ``added<TAB>deleted<TAB>path`` lines. ``-`` counts
    (binary files) become 0. Blocks with no file lines (e.g. merges) yield
    no event. Authors are resolved through ``author_map`` by exact string;
    unmapped authors raise a :class:`ParseError` naming every such alias.

    In lenient mode a bad numstat line is dropped, and a block with a bad
    or missing header is dropped whole; each drop appends one error to
    ``skipped``.
    """
    blocks: list[_Block] = []
    cur: _Block | None = None

    def fail(reason: str, line: int) -> None:
        err = ParseError(reason, line)
        if not skip_bad_lines:
            raise err
        if skipped is not None:
            skipped.append(err)

    def close(block: _Block | None) -> None:
        if block is None:
            return
        if block.author is None or block.date is None:
            fail(f"truncated commit block {block.hash!r} (missing author/date)", block.start)
        else:
            blocks.append(block)

    for lineno, line in enumerate(_lines(stream), start=1):
        if line.startswith("commit "):
            close(cur)
            cur = _Block(start=lineno, hash=line[len("commit "):].strip())
            continue
        if cur is None:
            if line.strip():
                fail("content before first commit header", lineno)
            continue
        if cur.author is None and line.startswith("author "):
            cur.author = line[len("author "):].strip()
        elif cur.author is not None and cur.date is None and line.startswith("date "):
            cur.date = line[len("date "):].strip()
            cur.date_line = lineno
        elif not line.strip():
            if cur.date is not None:
                cur.separated = True
        elif cur.date is None:
            # header line out of order or missing; drop the block in lenient mode
            fail(f"truncated commit block {cur.hash!r} (unexpected {line!r})", cur.start)
            cur = None
        elif not cur.separated:
            fail(f"missing blank line after header of commit {cur.hash!r}", lineno)
            cur.separated = True
        else:
            m = _NUMSTAT.match(line)
            if m is None:
                fail(f"bad numstat line {line!r}", lineno)
                continue
            added, deleted, path = m.groups()
            cur.files.append(
                FileChange(path, 0 if added == "-" else int(added), 0 if deleted == "-" else int(deleted))
            )
    close(cur)

    unmapped = sorted({b.author for b in blocks if b.author not in author_map})
    if unmapped:
        raise ParseError("unmapped commit authors: " + ", ".join(repr(a) for a in unmapped))

    events = []
    for b in blocks:
        if not b.files:
            continue
        try:
            ts = parse_timestamp(b.date)
        except ParseError as exc:
            fail(exc.reason, b.date_line)
            continue
        events.append(
            InteractionEvent(EventKind.COMMIT, ts, author_map[b.author], files=tuple(b.files))
        )
    return events


def window_events(
    events: Sequence[InteractionEvent], windows: Sequence[SprintWindow]
) -> dict[str, list[InteractionEvent]]:
    """Bucket events by sprint; the start instant is inclusive, the end exclusive.

    Every window label is a key (possibly empty) and events outside all
    windows land under ``__unassigned__``.
    """
    check_windows(windows)
    buckets: dict[str, list[InteractionEvent]] = {w.label: [] for w in windows}
    buckets[UNASSIGNED] = []
    for ev in events:
        for w in windows:
            if w.contains(ev.timestamp):
                buckets[w.label].append(ev)
                break
        else:
            buckets[UNASSIGNED].append(ev)
    return buckets


def check_windows(windows: Sequence[SprintWindow]) -> None:
    labels = [w.label for w in windows]
    if UNASSIGNED in labels:
        raise ValueError(f"sprint label {UNASSIGNED!r} is reserved")
    if len(set(labels)) != len(labels):
        raise ValueError("duplicate sprint labels")
    for a, b in zip(windows, windows[1:]):
        if b.start < a.end:
            raise ValueError(f"sprints {a.label!r} and {b.label!r} overlap or are unsorted")


OUTCOME_COLUMNS = ("team_id", "sprint_label", "stories_passed", "story_points_passed", "communication_score")


def read_outcomes(stream: str | IO[str]) -> list[OutcomeRecord]:
    lines = stream.splitlines() if isinstance(stream, str) else stream
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != OUTCOME_COLUMNS:
        raise ParseError("outcomes header must be " + ",".join(OUTCOME_COLUMNS), 1)
    records = []
    for lineno, row in enumerate(reader, start=2):
        if not row or not any(c.strip() for c in row):
            continue
        if len(row) != len(OUTCOME_COLUMNS):
            raise ParseError(f"expected {len(OUTCOME_COLUMNS)} columns, got {len(row)}", lineno)
        try:
            records.append(
                OutcomeRecord(
                    row[0].strip(),
                    row[1].strip(),
                    int(row[2]),
                    int(row[3]),
                    float(row[4]),
                )
            )
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
    return records
