import math
from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ppm_audit.model import (
    Event,
    EventLog,
    TimestampOrderError,
    Trace,
    control_flow_key,
    enumerate_log_samples,
    log_from_sequences,
    make_prefix_samples,
)

from helpers import brute_prefixes

acts = st.sampled_from(["A", "B", "C", "D", "é", "C1"])
seqs = st.lists(acts, min_size=1, max_size=10)


def trace(*acts, case="c"):
    return Trace(case, tuple(Event(a) for a in acts))


def test_prefix_samples_unfold():
    samples = make_prefix_samples(trace("A", "B", "C"))
    assert [(s.key, s.label) for s in samples] == [(("A",), "B"), (("A", "B"), "C")]
    assert [s.prefix_length for s in samples] == [1, 2]


def test_length_one_trace_has_no_samples():
    assert make_prefix_samples(trace("A")) == []


def test_loop_trace_from_l3():
    samples = make_prefix_samples(trace("A", "B", "B", "C", "D"))
    assert len(samples) == 4
    assert (samples[-1].key, samples[-1].label) == (("A", "B", "B", "C"), "D")


def test_key_drops_attributes():
    prefix = (Event("A", attributes={"resource": "R1"}), Event("B", attributes={"resource": "R100"}))
    assert control_flow_key(prefix) == ("A", "B")
    assert control_flow_key(tuple(Event(a) for a in ("A", "B", "C1"))) == ("A", "B", "C1")


def test_keys_equal_across_costs():
    cheap = (Event("A", attributes={"cost": 2.0}), Event("B", attributes={"cost": 2.0}))
    dear = (Event("A", attributes={"cost": 499.0}), Event("B", attributes={"cost": 499.0}))
    assert control_flow_key(cheap) == control_flow_key(dear)


def test_empty_prefix_key_rejected():
    with pytest.raises(ValueError):
        control_flow_key(())


def test_enumerate_counts():
    assert len(enumerate_log_samples(log_from_sequences("x", [["A", "B", "C"]]))) == 2
    l3 = log_from_sequences("L3", [["A", "B", "C", "D"], ["A", "B", "B", "C", "D"]])
    assert len(enumerate_log_samples(l3)) == 7
    assert enumerate_log_samples(EventLog("empty")) == []


@given(st.lists(seqs, max_size=8))
def test_count_law_and_round_trip(sequences):
    log = log_from_sequences("h", sequences)
    samples = enumerate_log_samples(log)
    assert len(samples) == sum(len(s) - 1 for s in sequences)
    assert [(list(s.key), s.label) for s in samples] == brute_prefixes(sequences)
    for s in samples:
        full = [e.activity for e in log.traces[int(s.case_id.split("_")[1]) - 1].events]
        assert list(s.key) + [s.label] == full[: s.prefix_length + 1]


@given(seqs, st.lists(st.text(min_size=1, max_size=3), min_size=10, max_size=10))
def test_key_ignores_attributes(sequence, resources):
    plain = tuple(Event(a) for a in sequence)
    decorated = tuple(Event(a, attributes={"r": resources[i]}) for i, a in enumerate(sequence))
    assert control_flow_key(plain) == control_flow_key(decorated)


def test_event_validation():
    with pytest.raises(ValueError):
        Event("")
    with pytest.raises(ValueError):
        Event("A", attributes={"cost": math.nan})
    with pytest.raises(ValueError):
        Event("A", attributes={"cost": math.inf})


def test_timestamps_normalised_to_utc_ms():
    cet = timezone(timedelta(hours=1))
    e = Event("A", datetime(2022, 5, 1, 1, 0, 0, 123456, tzinfo=cet))
    assert e.timestamp == datetime(2022, 5, 1, 0, 0, 0, 123000, tzinfo=timezone.utc)


def test_trace_invariants():
    with pytest.raises(ValueError):
        Trace("c", ())
    t0 = datetime(2022, 1, 1, tzinfo=timezone.utc)
    with pytest.raises(TimestampOrderError):
        Trace("c", (Event("A", t0 + timedelta(1)), Event("B", t0)))
    # partially stamped traces are not order-checked
    Trace("c", (Event("A", t0 + timedelta(1)), Event("B")))


def test_log_rejects_duplicate_case_ids():
    with pytest.raises(ValueError, match="duplicate"):
        EventLog("x", (trace("A", case="1"), trace("B", case="1")))


def test_alphabet_is_union():
    log = log_from_sequences("x", [["A", "B"], ["C"], ["B", "D"]])
    assert log.activity_alphabet == {"A", "B", "C", "D"}


def test_attribute_kinds_are_distinct():
    assert Event("A", attributes={"x": 1}) != Event("A", attributes={"x": 1.0})
    assert Event("A", attributes={"x": True}) != Event("A", attributes={"x": 1})
