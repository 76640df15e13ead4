"""Reading and writing event logs as XES XML and delimited text."""

from __future__ import annotations

import csv
import gzip
import io
import json
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import BinaryIO
from xml.sax.saxutils import quoteattr

from .model import (
    ATTRIBUTE_KINDS,
    AttributeValue,
    Event,
    EventLog,
    TimestampOrderError,
    Trace,
    attribute_kind,
    to_utc,
)

CASE_KEY = "concept:name"
ACTIVITY_KEY = "concept:name"
TIMESTAMP_KEY = "time:timestamp"

# CSV column names written by write_log
CSV_CASE_COLUMN = "case:concept:name"
CSV_ACTIVITY_COLUMN = "concept:name"
CSV_TIMESTAMP_COLUMN = "time:timestamp"
CSV_TRACE_ATTR_PREFIX = "case:"


class IngestError(Exception):
    """Input could not be read as an event log."""


class XesParseError(IngestError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


class CsvConfigError(IngestError):
    """Mapping does not fit the file (missing columns, bad kinds)."""


@dataclass
class IngestReport:
    traces_read: int = 0
    events_read: int = 0
    rows_skipped: int = 0
    warnings: list[tuple[str, str]] = field(default_factory=list)

    def warn(self, location: str, message: str) -> None:
        self.warnings.append((location, message))


@dataclass(frozen=True)
class CsvMapping:
    case_column: str
    activity_column: str
    timestamp_column: str | None = None
    timestamp_format: str | None = None  # strftime pattern; None means ISO-8601
    attribute_columns: tuple[tuple[str, str], ...] = ()
    trace_attribute_columns: tuple[tuple[str, str], ...] = ()
    delimiter: str = ","

    def __post_init__(self):
        if self.case_column == self.activity_column:
            raise CsvConfigError("case and activity columns must differ")
        if len(self.delimiter) != 1:
            raise CsvConfigError("delimiter must be a single character")
        reserved = {self.case_column, self.activity_column, self.timestamp_column}
        cols = [c for c, _ in self.attribute_columns] + [c for c, _ in self.trace_attribute_columns]
        for col, kind in tuple(self.attribute_columns) + tuple(self.trace_attribute_columns):
            if col in reserved:
                raise CsvConfigError(f"attribute column {col!r} overlaps case/activity/timestamp")
            if kind not in ATTRIBUTE_KINDS:
                raise CsvConfigError(f"unknown attribute kind {kind!r} for column {col!r}")
        if len(set(cols)) != len(cols):
            raise CsvConfigError("attribute columns must be distinct")
        object.__setattr__(self, "attribute_columns", tuple(map(tuple, self.attribute_columns)))
        object.__setattr__(
            self, "trace_attribute_columns", tuple(map(tuple, self.trace_attribute_columns))
        )

    @classmethod
    def from_dict(cls, d: dict) -> "CsvMapping":
        """Attribute entries are ``[column, kind]`` or a bare column name (categorical)."""

        def columns(field_name):
            out = []
            for x in d.get(field_name, ()):
                if isinstance(x, str):
                    out.append((x, "categorical"))
                elif isinstance(x, (list, tuple)) and len(x) == 2:
                    out.append(tuple(x))
                else:
                    raise CsvConfigError(f"{field_name}: expected a column name or [column, kind], got {x!r}")
            return tuple(out)

        if not isinstance(d, dict):
            raise CsvConfigError("CSV mapping must be a JSON object")
        missing = [k for k in ("case_column", "activity_column") if k not in d]
        if missing:
            raise CsvConfigError(f"CSV mapping lacks {', '.join(missing)}")
        return cls(
            case_column=d["case_column"],
            activity_column=d["activity_column"],
            timestamp_column=d.get("timestamp_column"),
            timestamp_format=d.get("timestamp_format"),
            attribute_columns=columns("attribute_columns"),
            trace_attribute_columns=columns("trace_attribute_columns"),
            delimiter=d.get("delimiter", ","),
        )

    def to_dict(self) -> dict:
        return {
            "case_column": self.case_column,
            "activity_column": self.activity_column,
            "timestamp_column": self.timestamp_column,
            "timestamp_format": self.timestamp_format,
            "attribute_columns": [list(x) for x in self.attribute_columns],
            "trace_attribute_columns": [list(x) for x in self.trace_attribute_columns],
            "delimiter": self.delimiter,
        }

    @classmethod
    def load(cls, path: str | Path) -> "CsvMapping":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise CsvConfigError(f"{path}: not valid JSON ({exc})") from exc
        return cls.from_dict(doc)


# --------------------------------------------------------------------------
# value codecs


def parse_timestamp(text: str, fmt: str | None = None) -> datetime:
    """Parse an ISO-8601 instant (or a strftime pattern when ``fmt`` is given)."""
    text = text.strip()
    if fmt:
        return to_utc(datetime.strptime(text, fmt))
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    # fromisoformat on 3.10 only takes 3 or 6 fractional digits
    if "." in text:
        head, _, rest = text.partition(".")
        digits = ""
        while rest and rest[0].isdigit():
            digits, rest = digits + rest[0], rest[1:]
        text = f"{head}.{(digits + '000000')[:6]}{rest}"
    return to_utc(datetime.fromisoformat(text))


def format_timestamp(ts: datetime) -> str:
    ts = to_utc(ts)
    return ts.strftime("%Y-%m-%dT%H:%M:%S.") + f"{ts.microsecond // 1000:03d}+00:00"


def _format_value(value: AttributeValue) -> str:
    kind = attribute_kind(value)
    if kind == "boolean":
        return "true" if value else "false"
    if kind == "timestamp":
        return format_timestamp(value)
    if kind == "numeric":
        return repr(float(value))
    return str(value)


def _parse_value(kind: str, text: str, ts_format: str | None = None) -> AttributeValue:
    if kind == "categorical":
        return text
    if kind == "numeric":
        v = float(text)
        if not math.isfinite(v):
            raise ValueError(f"non-finite number {text!r}")
        return v
    if kind == "integer":
        return int(text)
    if kind == "boolean":
        low = text.strip().lower()
        if low in ("true", "1"):
            return True
        if low in ("false", "0"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if kind == "timestamp":
        return parse_timestamp(text, ts_format)
    raise ValueError(f"unknown kind {kind!r}")


_XES_TAG_KIND = {
    "string": "categorical",
    "id": "categorical",
    "date": "timestamp",
    "int": "integer",
    "float": "numeric",
    "boolean": "boolean",
}
_KIND_XES_TAG = {
    "categorical": "string",
    "timestamp": "date",
    "integer": "int",
    "numeric": "float",
    "boolean": "boolean",
}


def _open_maybe_gzip(source: BinaryIO | bytes) -> BinaryIO:
    if isinstance(source, (bytes, bytearray)):
        source = io.BytesIO(source)
    head = source.peek(2)[:2] if hasattr(source, "peek") else None
    if head is None:
        data = source.read()
        source = io.BytesIO(data)
        head = data[:2]
    if head == b"\x1f\x8b":
        return gzip.GzipFile(fileobj=source)
    return source


# --------------------------------------------------------------------------
# XES


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _collect_attributes(
    elem: ET.Element, report: IngestReport, where: str, prefix: str = ""
) -> dict[str, AttributeValue]:
    """Flatten the attribute children of ``elem``; nested keys are '/'-joined."""
    out: dict[str, AttributeValue] = {}
    for child in elem:
        tag = _local(child.tag)
        if tag in ("trace", "event", "global", "extension", "classifier"):
            continue
        key = child.get("key")
        if tag == "values":
            # list payload container carries no key of its own
            out.update(_collect_attributes(child, report, where, prefix))
            continue
        if key is None:
            continue
        full = f"{prefix}{key}"
        kind = _XES_TAG_KIND.get(tag)
        raw = child.get("value")
        if kind is not None and raw is not None:
            try:
                value = _parse_value(kind, raw)
            except ValueError as exc:
                report.warn(where, f"attribute {full!r}: {exc}; kept as string")
                value = raw
            if full in out:
                report.warn(where, f"duplicate attribute {full!r}; last value wins")
            out[full] = value
        elif tag not in ("list", "container"):
            report.warn(where, f"attribute {full!r} of unsupported type <{tag}> ignored")
        if len(child):
            out.update(_collect_attributes(child, report, where, prefix=full + "/"))
    return out


def _build_trace(case_id: str, events: list[Event], attrs: dict, report: IngestReport, where: str) -> Trace:
    try:
        return Trace(case_id, tuple(events), attrs)
    except TimestampOrderError:
        report.warn(where, "events out of timestamp order; stably re-sorted by timestamp")
        ordered = sorted(events, key=lambda e: e.timestamp)
        return Trace(case_id, tuple(ordered), attrs)


def parse_xes(source: BinaryIO | bytes | str | Path, name: str | None = None) -> tuple[EventLog, IngestReport]:
    """Parse an XES document (optionally gzip-compressed)."""
    if isinstance(source, (str, Path)):
        with open(source, "rb") as fh:
            return parse_xes(fh, name or Path(source).name.split(".")[0])
    stream = _open_maybe_gzip(source)
    report = IngestReport()
    traces: list[Trace] = []
    case_ids: set[str] = set()
    log_name: str | None = None
    depth = 0
    trace_index = 0
    event_index = 0
    current_events: list[Event] = []
    root = None
    try:
        for kind, elem in ET.iterparse(stream, events=("start", "end")):
            tag = _local(elem.tag)
            if kind == "start":
                depth += 1
                if depth == 1:
                    root = elem
                elif tag == "trace" and depth == 2:
                    current_events = []
                    event_index = 0
                continue
            depth -= 1
            if tag == "event" and depth == 2:
                event_index += 1
                where = f"trace {trace_index + 1} event {event_index}"
                attrs = _collect_attributes(elem, report, where)
                activity = attrs.pop(ACTIVITY_KEY, None)
                ts = attrs.pop(TIMESTAMP_KEY, None)
                if not isinstance(activity, str) or not activity:
                    report.rows_skipped += 1
                    report.warn(where, "event without concept:name skipped")
                elif ts is not None and not isinstance(ts, datetime):
                    report.rows_skipped += 1
                    report.warn(where, "unparseable time:timestamp; event skipped")
                else:
                    current_events.append(Event(activity, ts, attrs))
                elem.clear()
            elif tag == "trace" and depth == 1:
                trace_index += 1
                where = f"trace {trace_index}"
                attrs = _collect_attributes(elem, report, where)
                case_id = attrs.pop(CASE_KEY, None)
                if not isinstance(case_id, str) or not case_id:
                    case_id = f"trace_{trace_index - 1}"
                    report.warn(where, f"trace without concept:name; using {case_id!r}")
                if case_id in case_ids:
                    raise IngestError(f"{where}: duplicate case id {case_id!r}")
                if current_events:
                    traces.append(_build_trace(case_id, current_events, attrs, report, where))
                    case_ids.add(case_id)
                    report.traces_read += 1
                    report.events_read += len(current_events)
                else:
                    report.warn(where, "trace has no usable events; dropped")
                if root is not None:
                    # drop processed children so memory stays flat on large logs
                    root.clear()
            elif depth == 1 and tag == "string" and elem.get("key") == "concept:name":
                log_name = elem.get("value")
    except ET.ParseError as exc:
        line = exc.position[0] if getattr(exc, "position", None) else None
        raise XesParseError(str(exc), line) from exc
    return EventLog(name or log_name or "log", tuple(traces)), report


def _xes_attr_lines(attrs, indent: str) -> list[str]:
    lines = []
    for key, value in attrs.items():
        tag = _KIND_XES_TAG[attribute_kind(value)]
        lines.append(f"{indent}<{tag} key={quoteattr(key)} value={quoteattr(_format_value(value))}/>")
    return lines


def _write_xes(log: EventLog, sink: BinaryIO) -> None:
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<log xes.version="1.0" xes.features="nested-attributes" xmlns="http://www.xes-standard.org/">',
        '  <extension name="Concept" prefix="concept" uri="http://www.xes-standard.org/concept.xesext"/>',
        '  <extension name="Time" prefix="time" uri="http://www.xes-standard.org/time.xesext"/>',
        '  <extension name="Organizational" prefix="org" uri="http://www.xes-standard.org/org.xesext"/>',
        f'  <string key="concept:name" value={quoteattr(log.name)}/>',
    ]
    sink.write(("\n".join(out) + "\n").encode("utf-8"))
    for trace in log:
        lines = ["  <trace>", f"    <string key=\"concept:name\" value={quoteattr(trace.case_id)}/>"]
        lines += _xes_attr_lines(trace.trace_attributes, "    ")
        for ev in trace.events:
            lines.append("    <event>")
            lines.append(f"      <string key=\"concept:name\" value={quoteattr(ev.activity)}/>")
            if ev.timestamp is not None:
                lines.append(
                    f"      <date key=\"time:timestamp\" value=\"{format_timestamp(ev.timestamp)}\"/>"
                )
            lines += _xes_attr_lines(ev.attributes, "      ")
            lines.append("    </event>")
        lines.append("  </trace>")
        sink.write(("\n".join(lines) + "\n").encode("utf-8"))
    sink.write(b"</log>\n")


# --------------------------------------------------------------------------
# CSV


def parse_csv(source: BinaryIO | bytes | str | Path, mapping: CsvMapping, name: str | None = None) -> tuple[EventLog, IngestReport]:
    if isinstance(source, (str, Path)):
        with open(source, "rb") as fh:
            return parse_csv(fh, mapping, name or Path(source).name.split(".")[0])
    stream = _open_maybe_gzip(source)
    text = io.TextIOWrapper(stream, encoding="utf-8", newline="")
    reader = csv.DictReader(text, delimiter=mapping.delimiter)
    header = reader.fieldnames or []
    needed = [mapping.case_column, mapping.activity_column]
    if mapping.timestamp_column:
        needed.append(mapping.timestamp_column)
    needed += [c for c, _ in mapping.attribute_columns]
    needed += [c for c, _ in mapping.trace_attribute_columns]
    missing = [c for c in needed if c not in header]
    if missing:
        raise CsvConfigError(f"mapped columns missing from header: {missing}")

    report = IngestReport()
    cases: dict[str, list[tuple[int, Event]]] = {}
    trace_attrs: dict[str, dict] = {}
    for rowno, row in enumerate(reader, start=2):
        where = f"row {rowno}"
        case_id = row[mapping.case_column]
        activity = row[mapping.activity_column]
        if not case_id or not activity:
            report.rows_skipped += 1
            report.warn(where, "empty case id or activity; row skipped")
            continue
        ts = None
        if mapping.timestamp_column:
            try:
                ts = parse_timestamp(row[mapping.timestamp_column], mapping.timestamp_format)
            except (ValueError, TypeError) as exc:
                report.rows_skipped += 1
                report.warn(where, f"unparseable timestamp: {exc}; row skipped")
                continue
        attrs = {}
        try:
            for col, kind in mapping.attribute_columns:
                cell = row[col]
                if cell is None or cell == "":
                    continue
                attrs[col] = _parse_value(kind, cell, mapping.timestamp_format)
        except (ValueError, TypeError) as exc:
            report.rows_skipped += 1
            report.warn(where, f"column {col!r}: {exc}; row skipped")
            continue
        if case_id not in cases:
            cases[case_id] = []
            tattrs = {}
            for col, kind in mapping.trace_attribute_columns:
                cell = row[col]
                if cell:
                    try:
                        tattrs[col[len(CSV_TRACE_ATTR_PREFIX):] if col.startswith(CSV_TRACE_ATTR_PREFIX) else col] = _parse_value(kind, cell, mapping.timestamp_format)
                    except ValueError as exc:
                        report.warn(where, f"trace attribute {col!r}: {exc}; ignored")
            trace_attrs[case_id] = tattrs
        cases[case_id].append((rowno, Event(activity, ts, attrs)))
        report.events_read += 1
    text.detach()

    traces = []
    for case_id, rows in cases.items():
        if mapping.timestamp_column:
            rows = sorted(rows, key=lambda r: (r[1].timestamp, r[0]))
        traces.append(Trace(case_id, tuple(e for _, e in rows), trace_attrs[case_id]))
    report.traces_read = len(traces)
    return EventLog(name or "log", tuple(traces)), report


def infer_csv_mapping(log: EventLog) -> CsvMapping:
    """Mapping that reads back a CSV produced by ``write_log(log, "csv", ...)``."""
    ev_kinds: dict[str, str] = {}
    tr_kinds: dict[str, str] = {}
    for trace in log:
        for k, v in trace.trace_attributes.items():
            tr_kinds.setdefault(k, attribute_kind(v))
        for ev in trace.events:
            for k, v in ev.attributes.items():
                ev_kinds.setdefault(k, attribute_kind(v))
    has_ts = any(ev.timestamp is not None for t in log for ev in t.events)
    return CsvMapping(
        case_column=CSV_CASE_COLUMN,
        activity_column=CSV_ACTIVITY_COLUMN,
        timestamp_column=CSV_TIMESTAMP_COLUMN if has_ts else None,
        attribute_columns=tuple(sorted(ev_kinds.items())),
        trace_attribute_columns=tuple(
            (CSV_TRACE_ATTR_PREFIX + k, kind) for k, kind in sorted(tr_kinds.items())
        ),
    )


def _write_csv(log: EventLog, sink: BinaryIO) -> None:
    mapping = infer_csv_mapping(log)
    ev_cols = [c for c, _ in mapping.attribute_columns]
    tr_cols = [c for c, _ in mapping.trace_attribute_columns]
    header = [CSV_CASE_COLUMN, CSV_ACTIVITY_COLUMN]
    if mapping.timestamp_column:
        header.append(CSV_TIMESTAMP_COLUMN)
    header += tr_cols + ev_cols
    text = io.TextIOWrapper(sink, encoding="utf-8", newline="", write_through=True)
    writer = csv.writer(text, lineterminator="\n")
    writer.writerow(header)
    for trace in log:
        tvals = [
            _format_value(trace.trace_attributes[c[len(CSV_TRACE_ATTR_PREFIX):]])
            if c[len(CSV_TRACE_ATTR_PREFIX):] in trace.trace_attributes
            else ""
            for c in tr_cols
        ]
        for ev in trace.events:
            row = [trace.case_id, ev.activity]
            if mapping.timestamp_column:
                row.append(format_timestamp(ev.timestamp) if ev.timestamp else "")
            row += tvals
            row += [_format_value(ev.attributes[c]) if c in ev.attributes else "" for c in ev_cols]
            writer.writerow(row)
    text.flush()
    text.detach()


def write_log(log: EventLog, format: str, sink: BinaryIO | str | Path) -> None:
    if isinstance(sink, (str, Path)):
        with open(sink, "wb") as fh:
            write_log(log, format, fh)
        return
    if format == "xes":
        _write_xes(log, sink)
    elif format == "csv":
        _write_csv(log, sink)
    else:
        raise ValueError(f"unknown log format {format!r}")


def read_log(path: str | Path, format: str | None = None, mapping: CsvMapping | None = None) -> tuple[EventLog, IngestReport]:
    """Dispatch on ``format`` or, failing that, on the file suffix."""
    path = Path(path)
    if format is None:
        suffixes = [s.lower() for s in path.suffixes if s.lower() != ".gz"]
        format = "csv" if suffixes and suffixes[-1] in (".csv", ".tsv", ".txt") else "xes"
    if format == "xes":
        return parse_xes(path)
    if format == "csv":
        if mapping is None:
            raise CsvConfigError("CSV input needs a column mapping")
        return parse_csv(path, mapping)
    raise ValueError(f"unknown log format {format!r}")
