import gzip
import io
from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ppm_audit.ingest import (
    CsvConfigError,
    CsvMapping,
    IngestError,
    XesParseError,
    infer_csv_mapping,
    parse_csv,
    parse_timestamp,
    parse_xes,
    read_log,
    write_log,
)
from ppm_audit.model import Event, EventLog, Trace
from ppm_audit.scenarios import ScenarioId, generate

XES_HEAD = '<?xml version="1.0" encoding="UTF-8"?>\n<log xes.version="1.0" xmlns="http://www.xes-standard.org/">\n'


def xes(body: str) -> bytes:
    return (XES_HEAD + body + "</log>\n").encode("utf-8")


def test_xes_single_trace():
    log, rep = parse_xes(xes(
        '<trace><string key="concept:name" value="c1"/>'
        '<event><string key="concept:name" value="A"/></event>'
        '<event><string key="concept:name" value="B"/></event></trace>'
    ))
    assert [t.activities for t in log] == [("A", "B")]
    assert log.traces[0].case_id == "c1"
    assert (rep.traces_read, rep.events_read, rep.rows_skipped) == (1, 2, 0)


def test_xes_attribute_kinds():
    log, _ = parse_xes(xes(
        '<trace><string key="concept:name" value="c1"/><int key="prio" value="3"/>'
        '<event><string key="concept:name" value="A"/><string key="org:resource" value="R1"/>'
        '<date key="time:timestamp" value="2012-01-01T10:00:00.5+01:00"/>'
        '<float key="amount" value="12.5"/><boolean key="ok" value="true"/>'
        '<id key="uid" value="x-1"/></event></trace>'
    ))
    t = log.traces[0]
    assert t.trace_attributes == {"prio": 3}
    e = t.events[0]
    assert e.attributes["org:resource"] == "R1"
    assert e.attributes["amount"] == 12.5
    assert e.attributes["ok"] is True
    assert e.attributes["uid"] == "x-1"
    assert e.timestamp == datetime(2012, 1, 1, 9, 0, 0, 500000, tzinfo=timezone.utc)


def test_xes_nested_attributes_flattened():
    log, _ = parse_xes(xes(
        '<trace><string key="concept:name" value="c"/><event>'
        '<string key="concept:name" value="A"/>'
        '<string key="addr" value="home"><string key="city" value="Mannheim"/></string>'
        '<list key="tags"><values><string key="t" value="x"/></values></list>'
        '</event></trace>'
    ))
    attrs = log.traces[0].events[0].attributes
    assert attrs["addr"] == "home"
    assert attrs["addr/city"] == "Mannheim"
    assert attrs["tags/t"] == "x"


def test_xes_missing_names():
    log, rep = parse_xes(xes(
        '<trace><event><string key="concept:name" value="A"/></event>'
        '<event><string key="org:resource" value="R"/></event></trace>'
    ))
    assert log.traces[0].case_id == "trace_0"
    assert log.traces[0].activities == ("A",)
    assert rep.rows_skipped == 1
    assert len(rep.warnings) == 2


def test_xes_malformed_reports_line():
    with pytest.raises(XesParseError) as info:
        parse_xes(xes("<trace>\n<event>\n</trace>\n"))
    assert info.value.line is not None and info.value.line >= 3


def test_xes_duplicate_case_rejected():
    body = '<trace><string key="concept:name" value="c"/><event><string key="concept:name" value="A"/></event></trace>'
    with pytest.raises(IngestError, match="duplicate"):
        parse_xes(xes(body * 2))


def test_xes_gzip(tmp_path):
    raw = xes('<trace><string key="concept:name" value="c"/><event><string key="concept:name" value="A"/></event></trace>')
    p = tmp_path / "log.xes.gz"
    p.write_bytes(gzip.compress(raw))
    log, _ = read_log(p)
    assert log.name == "log"
    assert log.traces[0].activities == ("A",)


def test_xes_out_of_order_events_resorted_with_warning():
    log, rep = parse_xes(xes(
        '<trace><string key="concept:name" value="c"/>'
        '<event><string key="concept:name" value="B"/><date key="time:timestamp" value="2020-01-02T00:00:00Z"/></event>'
        '<event><string key="concept:name" value="A"/><date key="time:timestamp" value="2020-01-01T00:00:00Z"/></event>'
        '</trace>'
    ))
    assert log.traces[0].activities == ("A", "B")
    assert any("order" in m for _, m in rep.warnings)


# ---------------------------------------------------------------- CSV

MAP = CsvMapping("case", "act", "ts")


def test_csv_grouping():
    data = b"case,act,ts\nc1,A,2020-01-01T00:00:00Z\nc1,B,2020-01-02T00:00:00Z\nc2,A,2020-01-03T00:00:00Z\n"
    log, rep = parse_csv(data, MAP)
    assert [t.activities for t in log] == [("A", "B"), ("A",)]
    assert (rep.traces_read, rep.events_read) == (2, 3)


def test_csv_sorts_by_time_stably():
    data = (
        b"case,act,ts\n"
        b"c1,B,2020-01-02T00:00:00Z\n"
        b"c1,X,2020-01-01T00:00:00Z\n"
        b"c1,Y,2020-01-01T00:00:00Z\n"
    )
    log, _ = parse_csv(data, MAP)
    assert log.traces[0].activities == ("X", "Y", "B")


def test_csv_file_order_without_timestamp():
    data = b"case,act\nc1,B\nc1,A\n"
    log, _ = parse_csv(data, CsvMapping("case", "act"))
    assert log.traces[0].activities == ("B", "A")


def test_csv_bad_timestamp_skipped():
    data = b"case,act,ts\nc1,A,2020-01-01T00:00:00Z\nc1,B,not-a-date\nc1,C,2020-01-03T00:00:00Z\n"
    log, rep = parse_csv(data, MAP)
    assert rep.events_read == 2
    assert rep.rows_skipped == 1
    assert log.traces[0].activities == ("A", "C")


def test_csv_missing_column():
    with pytest.raises(CsvConfigError):
        parse_csv(b"case,activity\nc,A\n", MAP)


def test_csv_strftime_and_delimiter():
    m = CsvMapping("case", "act", "ts", timestamp_format="%d.%m.%Y %H:%M", delimiter=";",
                   attribute_columns=(("amount", "numeric"),))
    log, _ = parse_csv("case;act;ts;amount\nc;A;02.01.2020 10:30;3,5\nc;B;03.01.2020 10:30;4\n".encode(), m)
    # "3,5" is not a float: row skipped
    assert log.traces[0].activities == ("B",)
    assert log.traces[0].events[0].timestamp == datetime(2020, 1, 3, 10, 30, tzinfo=timezone.utc)


def test_mapping_invariants():
    with pytest.raises(CsvConfigError):
        CsvMapping("a", "a")
    with pytest.raises(CsvConfigError):
        CsvMapping("case", "act", "ts", attribute_columns=(("ts", "categorical"),))
    with pytest.raises(CsvConfigError):
        CsvMapping("case", "act", attribute_columns=(("x", "colour"),))


def test_parse_timestamp_variants():
    assert parse_timestamp("2020-01-01T00:00:00Z") == datetime(2020, 1, 1, tzinfo=timezone.utc)
    assert parse_timestamp("2020-01-01T00:00:00.1234567+02:00") == datetime(
        2019, 12, 31, 22, 0, 0, 123000, tzinfo=timezone.utc
    )


# ---------------------------------------------------------------- round trips


def _roundtrip(log, fmt):
    buf = io.BytesIO()
    write_log(log, fmt, buf)
    data = buf.getvalue()
    if fmt == "xes":
        return parse_xes(data, name=log.name)[0]
    return parse_csv(data, infer_csv_mapping(log), name=log.name)[0]


@pytest.mark.parametrize("fmt", ["xes", "csv"])
def test_empty_log_roundtrip(fmt):
    assert len(_roundtrip(EventLog("empty"), fmt)) == 0


@pytest.mark.parametrize("fmt", ["xes", "csv"])
def test_l1_roundtrip(fmt):
    log = generate(ScenarioId.L1).training_log
    back = _roundtrip(log, fmt)
    assert len(back) == 5
    assert [t.activities for t in back] == [t.activities for t in log]


@pytest.mark.parametrize("fmt", ["xes", "csv"])
def test_l5_costs_roundtrip(fmt):
    log = generate(ScenarioId.L5).training_log
    back = _roundtrip(log, fmt)
    costs = [e.attributes["cost"] for t in back for e in t.events]
    assert sorted(set(costs)) == [2.0, 499.0, 501.0]
    assert back == log


@pytest.mark.parametrize("sid", list(ScenarioId))
@pytest.mark.parametrize("fmt", ["xes", "csv"])
def test_scenarios_roundtrip_exactly(sid, fmt):
    log = generate(sid, 2, datetime(2021, 3, 1, tzinfo=timezone.utc)).training_log
    assert _roundtrip(log, fmt) == log


names = st.text(st.characters(blacklist_categories=("Cs", "Cc")), min_size=1, max_size=6)
values = st.one_of(
    names,
    st.floats(allow_nan=False, allow_infinity=False, width=64),
    st.integers(-(2**40), 2**40),
    st.booleans(),
    st.datetimes(min_value=datetime(1990, 1, 1), max_value=datetime(2100, 1, 1)),
)


@st.composite
def event_logs(draw):
    n = draw(st.integers(0, 5))
    attr_names = draw(st.lists(st.sampled_from(["org:resource", "cost", "x y", "ü"]), unique=True))
    kinds = {a: draw(values).__class__ for a in attr_names}
    stamped = draw(st.booleans())
    base = datetime(2020, 1, 1, tzinfo=timezone.utc)
    traces = []
    for i in range(n):
        k = draw(st.integers(1, 4))
        events = []
        for j in range(k):
            attrs = {}
            for a in attr_names:
                v = draw(values.filter(lambda v, a=a: v.__class__ is kinds[a]))
                if draw(st.booleans()):
                    attrs[a] = v
            ts = base + timedelta(hours=i, minutes=j, milliseconds=draw(st.integers(0, 999))) if stamped else None
            events.append(Event(draw(names), ts, attrs))
        traces.append(Trace(f"case {i}", tuple(events), {"prio": draw(st.integers(0, 9))}))
    return EventLog("h", tuple(traces))


@settings(max_examples=60, deadline=None)
@given(event_logs(), st.sampled_from(["xes", "csv"]))
def test_roundtrip_property(log, fmt):
    assert _roundtrip(log, fmt) == log


def test_mapping_accepts_bare_attribute_names():
    m = CsvMapping.from_dict({"case_column": "c", "activity_column": "a", "attribute_columns": ["res", ["cost", "numeric"]]})
    assert m.attribute_columns == (("res", "categorical"), ("cost", "numeric"))


@pytest.mark.parametrize(
    "doc",
    [{"case_column": "c"}, {"case_column": "c", "activity_column": "a", "attribute_columns": [["x", "numeric", 1]]}, []],
)
def test_malformed_mapping_is_config_error(doc):
    with pytest.raises(CsvConfigError):
        CsvMapping.from_dict(doc)


def test_mapping_load_bad_json(tmp_path):
    p = tmp_path / "m.json"
    p.write_text("{nope")
    with pytest.raises(CsvConfigError):
        CsvMapping.load(p)
