"""Synthetic generalization-scenario logs, probe prefixes and predictor scoring.

Each scenario is a tiny training log plus prefixes that never occur in it.
A probe states which predictions count as generalizing: one label, any of
a set, or any of a set or the reserved ``__UNKNOWN__`` token.
"""

from __future__ import annotations

import io
import json
import os
import subprocess
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from enum import Enum
from pathlib import Path
from typing import BinaryIO, Iterable, Mapping, Sequence

from .ingest import format_timestamp, parse_timestamp, write_log
from .model import AttributeValue, Event, EventLog, Trace, attribute_kind, control_flow_key

UNKNOWN = "__UNKNOWN__"

SINGLE = "single"
ANY_OF = "any_of"
UNKNOWN_OR = "unknown_or"

UNSEEN_CONTROL_FLOW = "unseen_control_flow"
UNSEEN_ATTRIBUTE_COMBINATION = "unseen_attribute_combination"
UNSEEN_ATTRIBUTE_VALUE = "unseen_attribute_value"
GENERALIZATION_TYPES = (UNSEEN_CONTROL_FLOW, UNSEEN_ATTRIBUTE_COMBINATION, UNSEEN_ATTRIBUTE_VALUE)


class ProtocolError(Exception):
    """Predictions do not match the probe set (missing, unknown or malformed)."""


class ExternalPredictorError(ProtocolError):
    """The external program failed, timed out or wrote unusable output."""

    def __init__(self, message: str, stdout: str = "", stderr: str = ""):
        super().__init__(message)
        self.stdout = stdout
        self.stderr = stderr


class ScenarioId(str, Enum):
    L1 = "L1_concurrency"
    L2 = "L2_concurrency_ambiguity"
    L3 = "L3_loops"
    L4 = "L4_resources"
    L5 = "L5_cost"
    L6 = "L6_drift"

    @property
    def short(self) -> str:
        return self.name

    @classmethod
    def parse(cls, text: str) -> "ScenarioId":
        for sid in cls:
            if text in (sid.value, sid.name) or text.upper() == sid.name:
                return sid
        raise ValueError(f"unknown scenario {text!r}; choose from {[s.name for s in cls]}")


@dataclass(frozen=True)
class Expectation:
    kind: str
    labels: frozenset[str]

    def __post_init__(self):
        if self.kind not in (SINGLE, ANY_OF, UNKNOWN_OR):
            raise ValueError(f"unknown expectation kind {self.kind!r}")
        object.__setattr__(self, "labels", frozenset(self.labels))
        if self.kind == SINGLE and len(self.labels) != 1:
            raise ValueError("a single expectation carries exactly one label")
        if not self.labels:
            raise ValueError("expectation needs at least one label")

    def accepts(self, prediction: str) -> bool:
        if self.kind == UNKNOWN_OR and prediction == UNKNOWN:
            return True
        return prediction in self.labels


def single(label: str) -> Expectation:
    return Expectation(SINGLE, frozenset([label]))


def any_of(*labels: str) -> Expectation:
    return Expectation(ANY_OF, frozenset(labels))


def unknown_or(*labels: str) -> Expectation:
    return Expectation(UNKNOWN_OR, frozenset(labels))


@dataclass(frozen=True)
class ScenarioProbe:
    probe_id: str
    prefix: tuple[Event, ...]
    expectation: Expectation
    generalization_type: str


@dataclass(frozen=True)
class GeneratedScenario:
    id: ScenarioId
    training_log: EventLog
    probes: tuple[ScenarioProbe, ...]
    replication: int = 1
    metadata: Mapping[str, str] = field(default_factory=dict)


# --------------------------------------------------------------------------
# table transcriptions


def _month(year: int, month: int) -> datetime:
    return datetime(year, month, 1, tzinfo=timezone.utc)


def _plain(*acts: str) -> tuple[Event, ...]:
    return tuple(Event(a) for a in acts)


def _res(*pairs: tuple[str, str]) -> tuple[Event, ...]:
    return tuple(Event(a, attributes={"resource": r}) for a, r in pairs)


def _cost(*pairs: tuple[str, float]) -> tuple[Event, ...]:
    return tuple(Event(a, attributes={"cost": float(c)}) for a, c in pairs)


def _timed(*pairs: tuple[str, datetime]) -> tuple[Event, ...]:
    return tuple(Event(a, timestamp=t) for a, t in pairs)


_TABLE_ROWS: dict[ScenarioId, list[tuple[Event, ...]]] = {
    ScenarioId.L1: [
        _plain("A", "B", "C1", "C2", "C3", "D", "E"),
        _plain("A", "B", "C2", "C1", "C3", "D", "E"),
        _plain("A", "B", "C2", "C3", "C1", "D", "E"),
        _plain("A", "B", "C3", "C1", "C2", "D", "E"),
        _plain("A", "B", "C3", "C2", "C1", "D", "E"),
    ],
    ScenarioId.L2: [
        _plain("A", "B", "C", "D", "E", "F", "G", "H"),
        _plain("A", "B", "C", "F", "D", "G", "E", "H"),
        _plain("A", "B", "C", "D", "F", "E", "G", "H"),
        _plain("A", "B", "F", "C", "D", "G", "H", "E"),
    ],
    ScenarioId.L3: [
        _plain("A", "B", "C", "D"),
        _plain("A", "B", "B", "C", "D"),
    ],
    ScenarioId.L4: [
        _res(("A", "R1"), ("B", "R100"), ("C", "R2")),
        _res(("A", "R1"), ("B", "R101"), ("C", "R2")),
        _res(("A", "R1"), ("B", "R101"), ("C", "R2")),
    ],
    ScenarioId.L5: [
        _cost(("A", 2), ("B", 2), ("C", 2)),
        _cost(("A", 499), ("B", 499), ("C", 499)),
        _cost(("A", 501), ("B", 501), ("D", 501)),
    ],
    ScenarioId.L6: [
        _timed(("A", _month(2022, 5)), ("B", _month(2022, 6)), ("C", _month(2022, 6))),
        _timed(("A", _month(2022, 7)), ("B", _month(2022, 7)), ("C", _month(2022, 7))),
        _timed(("A", _month(2023, 4)), ("B", _month(2023, 5)), ("D", _month(2023, 5))),
    ],
}

_PROBES: dict[ScenarioId, list[tuple[tuple[Event, ...], Expectation, str]]] = {
    ScenarioId.L1: [
        (_plain("A", "B", "C1", "C3", "C2", "D"), single("E"), UNSEEN_CONTROL_FLOW),
        (_plain("A", "B", "C1", "C3", "C2"), single("D"), UNSEEN_CONTROL_FLOW),
    ],
    ScenarioId.L2: [
        (_plain("A", "B", "C", "D", "F", "G"), any_of("E", "H"), UNSEEN_CONTROL_FLOW),
    ],
    ScenarioId.L3: [
        (_plain("A", "B", "B", "B", "C"), single("D"), UNSEEN_CONTROL_FLOW),
    ],
    ScenarioId.L4: [
        (_res(("A", "R1"), ("B", "R1")), single("C"), UNSEEN_ATTRIBUTE_COMBINATION),
        (_res(("A", "R1"), ("F", "R100")), unknown_or("C"), UNSEEN_ATTRIBUTE_VALUE),
        (_res(("A", "R1"), ("B", "R37")), unknown_or("C"), UNSEEN_ATTRIBUTE_VALUE),
    ],
    ScenarioId.L5: [
        (_cost(("A", 2), ("B", 499)), single("C"), UNSEEN_ATTRIBUTE_COMBINATION),
        (_cost(("A", 200), ("B", 200)), single("C"), UNSEEN_ATTRIBUTE_VALUE),
    ],
    ScenarioId.L6: [
        (_timed(("A", _month(2022, 7)), ("B", _month(2023, 5))), single("D"), UNSEEN_ATTRIBUTE_COMBINATION),
        (_timed(("A", _month(2024, 6)), ("B", _month(2024, 6))), single("D"), UNSEEN_ATTRIBUTE_VALUE),
    ],
}

_METADATA: dict[ScenarioId, dict[str, str]] = {
    ScenarioId.L2: {
        "label_discrepancy": (
            "the accompanying prose names E or D as the continuation after G, but in the "
            "table only E and H ever follow G; the probe accepts E or H"
        ),
    },
}
_COMMON_METADATA = {
    "ground_truth": "assumed plausible labels, not observed outcomes",
}


def table_rows(sid: ScenarioId) -> list[tuple[Event, ...]]:
    return list(_TABLE_ROWS[ScenarioId.parse(sid) if isinstance(sid, str) else sid])


def _strip_timestamps(events: Sequence[Event]) -> tuple[Event, ...]:
    return tuple(Event(e.activity, None, dict(e.attributes)) for e in events)


def _uses_attribute_equality(sid: ScenarioId) -> bool:
    return sid in (ScenarioId.L4, ScenarioId.L5, ScenarioId.L6)


def _stamp(events: tuple[Event, ...], base: datetime, row: int, rep: int, replication: int) -> tuple[Event, ...]:
    start = base + timedelta(days=(row * replication + rep))
    return tuple(
        Event(e.activity, start + timedelta(hours=i), dict(e.attributes)) for i, e in enumerate(events)
    )


def generate(
    sid: ScenarioId | str, replication: int = 1, base_timestamp: datetime | None = None
) -> GeneratedScenario:
    """Build the training log and probes for one scenario.

    Rows are repeated ``replication`` times each (copies adjacent, rows in
    table order). ``base_timestamp`` gives L1-L5 synthetic per-event times
    (one day per trace, one hour per event) so temporal splits apply to
    them; L6 always keeps its month-granular table times.
    """
    sid = ScenarioId.parse(sid) if isinstance(sid, str) else sid
    if replication < 1:
        raise ValueError(f"replication must be >= 1, got {replication}")
    traces = []
    for row, events in enumerate(_TABLE_ROWS[sid]):
        for rep in range(replication):
            if base_timestamp is not None and sid is not ScenarioId.L6:
                events_out = _stamp(events, base_timestamp, row, rep, replication)
            else:
                events_out = events
            traces.append(Trace(f"{sid.name}-r{row + 1}-{rep + 1}", events_out))
    log = EventLog(sid.value, tuple(traces))

    probes = tuple(
        ScenarioProbe(f"{sid.name}-p{i}", prefix, exp, gtype)
        for i, (prefix, exp, gtype) in enumerate(_PROBES[sid], start=1)
    )
    alphabet = log.activity_alphabet
    for p in probes:
        if not p.expectation.labels <= alphabet:
            raise AssertionError(f"{p.probe_id}: expected labels outside the log alphabet")

    _assert_unseen(sid, log, probes)
    meta = dict(_COMMON_METADATA)
    meta.update(_METADATA.get(sid, {}))
    return GeneratedScenario(sid, log, probes, replication, meta)


def _assert_unseen(sid: ScenarioId, log: EventLog, probes: Iterable[ScenarioProbe]) -> None:
    if _uses_attribute_equality(sid):
        # synthetic per-trace stamps are irrelevant for L4/L5; L6 compares its table times
        strip = sid is not ScenarioId.L6
        seen = set()
        for t in log:
            ev = _strip_timestamps(t.events) if strip else t.events
            for p in range(1, len(ev)):
                seen.add(ev[:p])
        for probe in probes:
            prefix = _strip_timestamps(probe.prefix) if strip else probe.prefix
            if prefix in seen:
                raise AssertionError(f"{probe.probe_id} occurs in the training samples")
    else:
        seen = {t.activities[:p] for t in log for p in range(1, len(t))}
        for probe in probes:
            if control_flow_key(probe.prefix) in seen:
                raise AssertionError(f"{probe.probe_id} occurs in the training samples")


def generate_all(replication: int = 1, base_timestamp: datetime | None = None) -> list[GeneratedScenario]:
    return [generate(sid, replication, base_timestamp) for sid in ScenarioId]


# --------------------------------------------------------------------------
# probe / prediction files


def _event_to_json(e: Event) -> dict:
    d = {
        "activity": e.activity,
        "attributes": {
            k: {"kind": attribute_kind(v), "value": _json_value(v)} for k, v in sorted(e.attributes.items())
        },
    }
    if e.timestamp is not None:
        d["timestamp"] = format_timestamp(e.timestamp)
    return d


def _json_value(v: AttributeValue):
    kind = attribute_kind(v)
    if kind == "timestamp":
        return format_timestamp(v)
    return v


def _event_from_json(d: dict) -> Event:
    attrs = {}
    for k, spec in d.get("attributes", {}).items():
        kind, value = spec["kind"], spec["value"]
        if kind == "timestamp":
            value = parse_timestamp(value)
        elif kind == "numeric":
            value = float(value)
        attrs[k] = value
    ts = d.get("timestamp")
    return Event(d["activity"], parse_timestamp(ts) if ts else None, attrs)


def probe_to_json(probe: ScenarioProbe, sid: ScenarioId) -> dict:
    return {
        "probe_id": probe.probe_id,
        "scenario": sid.value,
        "prefix": [_event_to_json(e) for e in probe.prefix],
        "expectation": {"kind": probe.expectation.kind, "labels": sorted(probe.expectation.labels)},
        "generalization_type": probe.generalization_type,
    }


def probe_from_json(d: dict) -> ScenarioProbe:
    exp = d["expectation"]
    return ScenarioProbe(
        d["probe_id"],
        tuple(_event_from_json(e) for e in d["prefix"]),
        Expectation(exp["kind"], frozenset(exp["labels"])),
        d["generalization_type"],
    )


def export_probes(scenario: GeneratedScenario, sink: BinaryIO | str | Path) -> None:
    if isinstance(sink, (str, Path)):
        with open(sink, "wb") as fh:
            return export_probes(scenario, fh)
    for probe in scenario.probes:
        line = json.dumps(probe_to_json(probe, scenario.id), ensure_ascii=False)
        sink.write((line + "\n").encode("utf-8"))


def import_probes(source: BinaryIO | str | Path) -> list[ScenarioProbe]:
    if isinstance(source, (str, Path)):
        with open(source, "rb") as fh:
            return import_probes(fh)
    probes = []
    for lineno, raw in enumerate(io.TextIOWrapper(source, encoding="utf-8"), start=1):
        if raw.strip():
            try:
                probes.append(probe_from_json(json.loads(raw)))
            except (ValueError, KeyError, TypeError) as exc:
                raise ProtocolError(f"probe file line {lineno}: {exc}") from exc
    return probes


def read_predictions(source: BinaryIO | str | Path) -> dict[str, str]:
    """Parse a prediction JSONL file into {probe_id: prediction}."""
    if isinstance(source, (str, Path)):
        with open(source, "rb") as fh:
            return read_predictions(fh)
    out: dict[str, str] = {}
    dupes = []
    try:
        lines = source.read().decode("utf-8").splitlines()
    except UnicodeDecodeError as exc:
        raise ProtocolError(f"prediction file is not UTF-8: {exc}") from exc
    for lineno, raw in enumerate(lines, start=1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
            pid, pred = obj["probe_id"], obj["prediction"]
        except (ValueError, KeyError, TypeError) as exc:
            raise ProtocolError(f"prediction line {lineno} is malformed: {raw[:80]!r}") from exc
        if not isinstance(pid, str) or not isinstance(pred, str):
            raise ProtocolError(f"prediction line {lineno}: probe_id and prediction must be strings")
        if pid in out:
            dupes.append(pid)
        out[pid] = pred
    if dupes:
        raise ProtocolError(f"duplicate predictions for probes: {sorted(set(dupes))}")
    return out


def write_predictions(predictions: Mapping[str, str], sink: BinaryIO | str | Path) -> None:
    if isinstance(sink, (str, Path)):
        with open(sink, "wb") as fh:
            return write_predictions(predictions, fh)
    for pid, pred in predictions.items():
        sink.write((json.dumps({"probe_id": pid, "prediction": pred}, ensure_ascii=False) + "\n").encode("utf-8"))


# --------------------------------------------------------------------------
# scoring


@dataclass(frozen=True)
class ProbeResult:
    probe_id: str
    prediction: str
    satisfied: bool
    expectation_kind: str
    generalization_type: str


@dataclass(frozen=True)
class ScoreCard:
    scenario: str
    results: tuple[ProbeResult, ...]

    @property
    def overall_rate(self) -> float:
        return sum(r.satisfied for r in self.results) / len(self.results) if self.results else 0.0

    @property
    def per_type_rates(self) -> dict[str, float]:
        rates = {}
        for gtype in GENERALIZATION_TYPES:
            hits = [r.satisfied for r in self.results if r.generalization_type == gtype]
            if hits:
                rates[gtype] = sum(hits) / len(hits)
        return rates

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "results": [
                {
                    "probe_id": r.probe_id,
                    "prediction": r.prediction,
                    "satisfied": r.satisfied,
                    "expectation_kind": r.expectation_kind,
                    "generalization_type": r.generalization_type,
                }
                for r in self.results
            ],
            "per_type_rates": self.per_type_rates,
            "overall_rate": self.overall_rate,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def score(scenario: GeneratedScenario, predictions: Mapping[str, str]) -> ScoreCard:
    expected_ids = [p.probe_id for p in scenario.probes]
    missing = [pid for pid in expected_ids if pid not in predictions]
    unknown = sorted(set(predictions) - set(expected_ids))
    if missing or unknown:
        raise ProtocolError(f"prediction set mismatch: missing={missing} unknown={unknown}")
    results = tuple(
        ProbeResult(
            p.probe_id,
            predictions[p.probe_id],
            p.expectation.accepts(predictions[p.probe_id]),
            p.expectation.kind,
            p.generalization_type,
        )
        for p in scenario.probes
    )
    return ScoreCard(scenario.id.value, results)


def write_scenario_inputs(scenario: GeneratedScenario, workdir: str | Path) -> tuple[Path, Path]:
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    log_path = workdir / "training.xes"
    probe_path = workdir / "probes.jsonl"
    write_log(scenario.training_log, "xes", log_path)
    export_probes(scenario, probe_path)
    return log_path, probe_path


def run_external_predictor(
    scenario: GeneratedScenario,
    command: Sequence[str],
    timeout: float = 300.0,
    workdir: str | Path | None = None,
) -> ScoreCard:
    """Run ``command + [training.xes, probes.jsonl, predictions.jsonl]`` and score it."""
    if workdir is None:
        with tempfile.TemporaryDirectory(prefix=f"{scenario.id.name}-") as tmp:
            return run_external_predictor(scenario, command, timeout, tmp)
    log_path, probe_path = write_scenario_inputs(scenario, workdir)
    out_path = Path(workdir) / "predictions.jsonl"
    argv = list(command) + [str(log_path), str(probe_path), str(out_path)]
    try:
        proc = subprocess.run(
            argv, cwd=workdir, capture_output=True, text=True, timeout=timeout,
            env=dict(os.environ),
        )
    except subprocess.TimeoutExpired as exc:
        raise ExternalPredictorError(
            f"predictor timed out after {timeout:g}s",
            _as_text(exc.stdout), _as_text(exc.stderr),
        ) from exc
    except OSError as exc:
        raise ExternalPredictorError(f"could not start predictor: {exc}") from exc
    if proc.returncode != 0:
        raise ExternalPredictorError(
            f"predictor exited with status {proc.returncode}", proc.stdout, proc.stderr
        )
    if not out_path.exists():
        raise ExternalPredictorError("predictor wrote no prediction file", proc.stdout, proc.stderr)
    try:
        predictions = read_predictions(out_path)
    except ProtocolError as exc:
        raise ExternalPredictorError(str(exc), proc.stdout, proc.stderr) from exc
    return score(scenario, predictions)


def _as_text(data) -> str:
    if data is None:
        return ""
    return data.decode("utf-8", "replace") if isinstance(data, bytes) else data


def render_table(log: EventLog) -> str:
    """One line per trace in the notation of the scenario tables."""
    lines = []
    for trace in log:
        parts = []
        for e in trace.events:
            extras = []
            if "resource" in e.attributes:
                extras.append(str(e.attributes["resource"]))
            if "cost" in e.attributes:
                extras.append(f"{e.attributes['cost']:g}€")
            if e.timestamp is not None and log.name == ScenarioId.L6.value:
                extras.append(e.timestamp.strftime("%B %Y"))
            parts.append(f"({e.activity}, {', '.join(extras)})" if extras else e.activity)
        lines.append("<" + ", ".join(parts) + ">")
    return "\n".join(lines) + "\n"
