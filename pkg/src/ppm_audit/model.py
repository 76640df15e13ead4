"""Event-log data model and prefix/label extraction."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Sequence, Tuple, Union

AttributeValue = Union[str, float, int, bool, datetime]

# ordered activity labels of a prefix; tuple equality is the prefix-identity test
ControlFlowKey = Tuple[str, ...]

ATTRIBUTE_KINDS = ("categorical", "numeric", "timestamp", "boolean", "integer")


def attribute_kind(value: AttributeValue) -> str:
    # bool before int: bool is an int subclass
    if isinstance(value, bool):
        return "boolean"
    if isinstance(value, int):
        return "integer"
    if isinstance(value, float):
        return "numeric"
    if isinstance(value, datetime):
        return "timestamp"
    if isinstance(value, str):
        return "categorical"
    raise TypeError(f"unsupported attribute value type: {type(value).__name__}")


def to_utc(ts: datetime) -> datetime:
    """Normalise to an aware UTC datetime truncated to milliseconds.

    Naive datetimes are taken to already be in UTC.
    """
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    else:
        ts = ts.astimezone(timezone.utc)
    return ts.replace(microsecond=(ts.microsecond // 1000) * 1000)


def attribute_signature(attributes: Mapping[str, AttributeValue]) -> tuple:
    """Kind-aware comparable form of an attribute map (1, 1.0 and True differ)."""
    return tuple(sorted((k, attribute_kind(v), v) for k, v in attributes.items()))


def _check_attributes(attributes: Mapping[str, AttributeValue]) -> dict:
    out = {}
    for name, value in attributes.items():
        if not isinstance(name, str):
            raise TypeError(f"attribute name must be str, got {name!r}")
        kind = attribute_kind(value)
        if kind == "numeric" and not math.isfinite(value):
            raise ValueError(f"attribute {name!r} is not finite: {value!r}")
        if kind == "timestamp":
            value = to_utc(value)
        out[name] = value
    return out


@dataclass(frozen=True)
class Event:
    activity: str
    timestamp: datetime | None = None
    attributes: Mapping[str, AttributeValue] = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.activity, str) or not self.activity:
            raise ValueError("event activity must be a non-empty string")
        if self.timestamp is not None:
            object.__setattr__(self, "timestamp", to_utc(self.timestamp))
        object.__setattr__(
            self, "attributes", MappingProxyType(_check_attributes(self.attributes))
        )

    def __eq__(self, other):
        if not isinstance(other, Event):
            return NotImplemented
        return (
            self.activity == other.activity
            and self.timestamp == other.timestamp
            and attribute_signature(self.attributes) == attribute_signature(other.attributes)
        )

    def __hash__(self):
        return hash((self.activity, self.timestamp, attribute_signature(self.attributes)))


class TimestampOrderError(ValueError):
    """Raised when a fully timestamped trace goes backwards in time."""


@dataclass(frozen=True)
class Trace:
    case_id: str
    events: Tuple[Event, ...]
    trace_attributes: Mapping[str, AttributeValue] = field(default_factory=dict)

    def __post_init__(self):
        events = tuple(self.events)
        if not events:
            raise ValueError(f"trace {self.case_id!r} has no events")
        stamps = [e.timestamp for e in events]
        if all(t is not None for t in stamps):
            for i in range(1, len(stamps)):
                if stamps[i] < stamps[i - 1]:
                    raise TimestampOrderError(
                        f"trace {self.case_id!r}: event {i} is earlier than event {i - 1}"
                    )
        object.__setattr__(self, "events", events)
        object.__setattr__(
            self,
            "trace_attributes",
            MappingProxyType(_check_attributes(self.trace_attributes)),
        )

    def __len__(self):
        return len(self.events)

    def __eq__(self, other):
        if not isinstance(other, Trace):
            return NotImplemented
        return (
            self.case_id == other.case_id
            and self.events == other.events
            and attribute_signature(self.trace_attributes)
            == attribute_signature(other.trace_attributes)
        )

    def __hash__(self):
        return hash((self.case_id, self.events))

    @property
    def activities(self) -> ControlFlowKey:
        return tuple(e.activity for e in self.events)

    @property
    def start_time(self) -> datetime | None:
        return self.events[0].timestamp


@dataclass(frozen=True)
class EventLog:
    name: str
    traces: Tuple[Trace, ...] = ()

    def __post_init__(self):
        traces = tuple(self.traces)
        seen = set()
        for t in traces:
            if t.case_id in seen:
                raise ValueError(f"duplicate case id {t.case_id!r} in log {self.name!r}")
            seen.add(t.case_id)
        object.__setattr__(self, "traces", traces)

    def __len__(self):
        return len(self.traces)

    def __iter__(self) -> Iterator[Trace]:
        return iter(self.traces)

    @property
    def case_ids(self) -> list[str]:
        return [t.case_id for t in self.traces]

    @property
    def activity_alphabet(self) -> frozenset[str]:
        return frozenset(e.activity for t in self.traces for e in t.events)

    @property
    def n_events(self) -> int:
        return sum(len(t) for t in self.traces)


@dataclass(frozen=True)
class PrefixSample:
    case_id: str
    prefix: Tuple[Event, ...]
    label: str

    @property
    def prefix_length(self) -> int:
        return len(self.prefix)

    @property
    def key(self) -> ControlFlowKey:
        return control_flow_key(self.prefix)


def control_flow_key(prefix: Sequence[Event]) -> ControlFlowKey:
    """Activity projection of a prefix. All other event data is dropped."""
    if not prefix:
        raise ValueError("control-flow key of an empty prefix is undefined")
    return tuple(e.activity for e in prefix)


def make_prefix_samples(trace: Trace) -> list[PrefixSample]:
    events = trace.events
    return [
        PrefixSample(trace.case_id, events[:p], events[p].activity)
        for p in range(1, len(events))
    ]


def enumerate_log_samples(log: EventLog | Iterable[Trace]) -> list[PrefixSample]:
    samples: list[PrefixSample] = []
    for trace in log:
        samples.extend(make_prefix_samples(trace))
    return samples


def iter_keyed_samples(log: EventLog | Iterable[Trace]) -> Iterator[tuple[ControlFlowKey, str]]:
    """Yield (control-flow key, label) pairs without materialising event prefixes."""
    for trace in log:
        acts = trace.activities
        for p in range(1, len(acts)):
            yield acts[:p], acts[p]


def log_from_sequences(
    name: str, sequences: Iterable[Sequence[str]], case_prefix: str = "case_"
) -> EventLog:
    """Build an attribute-free log from plain activity sequences."""
    return EventLog(
        name,
        tuple(
            Trace(f"{case_prefix}{i}", tuple(Event(a) for a in seq))
            for i, seq in enumerate(sequences, start=1)
        ),
    )
