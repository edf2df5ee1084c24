"""Parse entry/exit execution logs and reconstruct class-level call relationships.

Input is JSON Lines, one record per method entry or exit. Per-thread call
stacks turn the flat event stream into call edges between classes, per-class
execution counts, and daily activity totals.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from datetime import date, datetime, timedelta, timezone
from enum import Enum
from typing import IO, Iterable, Union

from .errors import IoFailure, MalformedRecord

__all__ = [
    "EventKind",
    "TraceEvent",
    "CallEdge",
    "IngestSummary",
    "FieldMap",
    "Strictness",
    "parse_log",
    "reconstruct_calls",
    "daily_series",
]


class EventKind(Enum):
    ENTRY = "entry"
    EXIT = "exit"


class Strictness(Enum):
    STRICT = "strict"
    LENIENT = "lenient"


@dataclass(frozen=True)
class TraceEvent:
    """One parsed log record (millisecond-resolution timestamp)."""

    timestamp: datetime
    thread_id: str
    class_name: str
    method_name: str
    kind: EventKind


@dataclass(frozen=True, order=True)
class CallEdge:
    """A directed caller -> callee relationship observed at least once."""

    caller: str
    callee: str
    occurrence_count: int = 1


@dataclass
class IngestSummary:
    """Diagnostic counters from parsing and stack reconstruction."""

    events_parsed: int = 0
    events_rejected: int = 0
    unmatched_exits: int = 0
    unclosed_entries: int = 0
    threads_seen: int = 0

    def merged(self, other: "IngestSummary") -> "IngestSummary":
        """Combine parse-side and reconstruction-side counters."""
        return IngestSummary(
            events_parsed=max(self.events_parsed, other.events_parsed),
            events_rejected=self.events_rejected + other.events_rejected,
            unmatched_exits=self.unmatched_exits + other.unmatched_exits,
            unclosed_entries=self.unclosed_entries + other.unclosed_entries,
            threads_seen=max(self.threads_seen, other.threads_seen),
        )


@dataclass(frozen=True)
class FieldMap:
    """Names of the five log fields plus the two accepted event values.

    Production log schemas differ; any of these can be renamed through a
    config file or command-line flags.
    """

    time: str = "time"
    thread: str = "thread"
    class_: str = "class"
    method: str = "method"
    event: str = "event"
    entry_value: str = "entry"
    exit_value: str = "exit"

    @classmethod
    def from_pairs(cls, pairs: Iterable[str]) -> "FieldMap":
        """Build from ``key=value`` strings, e.g. ``["time=ts", "class=cls"]``."""
        fm = cls()
        for pair in pairs:
            key, sep, value = pair.partition("=")
            if not sep or not value:
                raise ValueError(f"field mapping must look like key=value, got {pair!r}")
            fm = fm.with_override(key.strip(), value.strip())
        return fm

    def with_override(self, key: str, value: str) -> "FieldMap":
        key = "class_" if key == "class" else key
        if key not in self.__dataclass_fields__:
            allowed = "time, thread, class, method, event, entry_value, exit_value"
            raise ValueError(f"unknown field-map key {key!r} (allowed: {allowed})")
        return replace(self, **{key: value})


LogStream = Union[IO[bytes], IO[str], Iterable[Union[bytes, str]]]


def _parse_timestamp(raw: str) -> datetime:
    # ISO-8601; a trailing Z is normalized for fromisoformat (3.10 rejects it).
    text = raw.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts


def _decode_record(obj: object, fm: FieldMap) -> TraceEvent:
    if not isinstance(obj, dict):
        raise ValueError("record is not a JSON object")
    missing = [name for name in (fm.time, fm.thread, fm.class_, fm.method, fm.event) if name not in obj]
    if missing:
        raise ValueError(f"missing field(s): {', '.join(missing)}")
    thread_id = str(obj[fm.thread])
    class_name = str(obj[fm.class_])
    if not thread_id:
        raise ValueError("empty thread id")
    if not class_name:
        raise ValueError("empty class name")
    raw_kind = obj[fm.event]
    if raw_kind == fm.entry_value:
        kind = EventKind.ENTRY
    elif raw_kind == fm.exit_value:
        kind = EventKind.EXIT
    else:
        raise ValueError(f"event value {raw_kind!r} is neither {fm.entry_value!r} nor {fm.exit_value!r}")
    try:
        timestamp = _parse_timestamp(str(obj[fm.time]))
    except ValueError as exc:
        raise ValueError(f"bad timestamp {obj[fm.time]!r}: {exc}") from exc
    return TraceEvent(
        timestamp=timestamp,
        thread_id=thread_id,
        class_name=class_name,
        method_name=str(obj[fm.method]),
        kind=kind,
    )


def parse_log(
    stream: LogStream,
    strictness: Strictness = Strictness.LENIENT,
    field_map: FieldMap | None = None,
) -> tuple[list[TraceEvent], IngestSummary]:
    """Parse a JSON Lines log into trace events, in input order.

    Strict mode raises :class:`MalformedRecord` at the first bad line;
    lenient mode skips bad lines and counts them in ``events_rejected``.
    Blank lines are ignored in both modes. A stream that fails mid-read
    raises :class:`IoFailure`.
    """
    fm = field_map or FieldMap()
    events: list[TraceEvent] = []
    summary = IngestSummary()
    threads: set[str] = set()
    try:
        for line_no, raw in enumerate(stream, start=1):
            line = raw.decode("utf-8", errors="replace") if isinstance(raw, bytes) else raw
            if not line.strip():
                continue
            try:
                event = _decode_record(json.loads(line), fm)
            except (ValueError, json.JSONDecodeError) as exc:
                if strictness is Strictness.STRICT:
                    raise MalformedRecord(line_no, str(exc)) from exc
                summary.events_rejected += 1
                continue
            events.append(event)
            threads.add(event.thread_id)
            summary.events_parsed += 1
    except OSError as exc:
        raise IoFailure(f"unreadable input: {exc}") from exc
    summary.threads_seen = len(threads)
    return events, summary


def reconstruct_calls(
    events: Iterable[TraceEvent],
) -> tuple[list[CallEdge], dict[str, int], IngestSummary]:
    """Recover class-level call edges and execution counts from entry/exit events.

    One stack is kept per thread, with frames keyed by (class, method). An
    entry whose stack top belongs to a different class records one caller ->
    callee occurrence; every entry increments the entering class's execution
    count. An exit pops the top frame only if it matches, otherwise it counts
    as an unmatched exit. Frames left open at end of input are counted but
    their entries keep their effect.

    Returns the edges sorted by (caller, callee), the per-class counts, and a
    summary of the reconstruction.
    """
    stacks: dict[str, list[tuple[str, str]]] = {}
    edge_counts: dict[tuple[str, str], int] = {}
    exec_counts: dict[str, int] = {}
    summary = IngestSummary()
    for event in events:
        summary.events_parsed += 1
        stack = stacks.setdefault(event.thread_id, [])
        frame = (event.class_name, event.method_name)
        if event.kind is EventKind.ENTRY:
            if stack and stack[-1][0] != event.class_name:
                key = (stack[-1][0], event.class_name)
                edge_counts[key] = edge_counts.get(key, 0) + 1
            exec_counts[event.class_name] = exec_counts.get(event.class_name, 0) + 1
            stack.append(frame)
        else:
            if stack and stack[-1] == frame:
                stack.pop()
            else:
                summary.unmatched_exits += 1
    summary.unclosed_entries = sum(len(stack) for stack in stacks.values())
    summary.threads_seen = len(stacks)
    edges = [
        CallEdge(caller, callee, count)
        for (caller, callee), count in sorted(edge_counts.items())
    ]
    return edges, exec_counts, summary


def daily_series(
    events: Iterable[TraceEvent],
    day_boundary_offset: int = 0,
) -> dict[date, int]:
    """Total entry events per calendar day, at a day boundary offset in minutes from UTC.

    Days between the first and last observed day with no entries appear with
    count 0. Exit events never contribute.
    """
    tz = timezone(timedelta(minutes=day_boundary_offset))
    buckets: dict[date, int] = {}
    for event in events:
        if event.kind is not EventKind.ENTRY:
            continue
        day = event.timestamp.astimezone(tz).date()
        buckets[day] = buckets.get(day, 0) + 1
    if not buckets:
        return {}
    series: dict[date, int] = {}
    day = min(buckets)
    last = max(buckets)
    while day <= last:
        series[day] = buckets.get(day, 0)
        day += timedelta(days=1)
    return series
