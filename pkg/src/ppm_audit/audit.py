"""Example leakage, accuracy limit and label-ambiguity statistics."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence, Union

from .model import ControlFlowKey, EventLog, PrefixSample, iter_keyed_samples

# audit functions accept full samples or bare (key, label) pairs
SampleLike = Union[PrefixSample, tuple]


def _pairs(samples: Iterable[SampleLike]) -> Iterator[tuple[ControlFlowKey, str]]:
    for s in samples:
        if isinstance(s, PrefixSample):
            yield s.key, s.label
        else:
            key, label = s
            yield tuple(key), label


class PrefixIndex:
    """Label counts per control-flow key.

    Building is a commutative fold: indexes over disjoint chunks can be
    combined with ``merge`` and give the same result as one pass.
    """

    __slots__ = ("counts", "n_samples")

    def __init__(self, counts: Mapping[ControlFlowKey, Mapping[str, int]] | None = None):
        self.counts: dict[ControlFlowKey, Counter] = {}
        self.n_samples = 0
        for key, labels in (counts or {}).items():
            for label, c in labels.items():
                if c <= 0:
                    raise ValueError("index counts must be strictly positive")
                self.counts.setdefault(tuple(key), Counter())[label] += c
                self.n_samples += c

    def add(self, key: ControlFlowKey, label: str, count: int = 1) -> None:
        self.counts.setdefault(key, Counter())[label] += count
        self.n_samples += count

    def merge(self, other: "PrefixIndex") -> "PrefixIndex":
        out = PrefixIndex()
        for idx in (self, other):
            for key, labels in idx.counts.items():
                bucket = out.counts.setdefault(key, Counter())
                bucket.update(labels)
            out.n_samples += idx.n_samples
        return out

    def __contains__(self, key) -> bool:
        return tuple(key) in self.counts

    def __len__(self) -> int:
        return len(self.counts)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PrefixIndex):
            return NotImplemented
        return self.counts == other.counts

    def labels(self, key: ControlFlowKey) -> Counter:
        return self.counts.get(tuple(key), Counter())

    def max_count(self, key: ControlFlowKey) -> int:
        labels = self.counts.get(key)
        return max(labels.values()) if labels else 0

    def majority(self, key: ControlFlowKey) -> str | None:
        """Most frequent label for ``key``; ties go to the smallest label."""
        labels = self.counts.get(key)
        if not labels:
            return None
        return min(labels.items(), key=lambda kv: (-kv[1], kv[0]))[0]

    def ambiguous_keys(self) -> list[ControlFlowKey]:
        return [k for k, labels in self.counts.items() if len(labels) > 1]


def build_index(samples: Iterable[SampleLike]) -> PrefixIndex:
    index = PrefixIndex()
    for key, label in _pairs(samples):
        index.add(key, label)
    return index


def index_log(log: EventLog) -> PrefixIndex:
    """Index a log directly from activity sequences (no event tuples built)."""
    return build_index(iter_keyed_samples(log))


@dataclass(frozen=True)
class LeakageReport:
    test_samples_total: int
    test_samples_leaked: int
    leakage_pct: float
    unique_test_keys_total: int
    unique_test_keys_leaked: int
    unique_leakage_pct: float
    empty: bool = False


@dataclass(frozen=True)
class AmbiguityReport:
    accuracy_limit: float
    ambiguous_sample_pct: float
    reference: str
    test_samples_total: int = 0
    test_samples_at_max: int = 0
    empty: bool = False


def _pct(part: int, whole: int) -> float:
    return 100.0 * part / whole if whole else 0.0


def compute_leakage(train_index: PrefixIndex, test_samples: Iterable[SampleLike]) -> LeakageReport:
    """Share of test prefixes whose control-flow also occurs in training."""
    total = leaked = 0
    keys: dict[ControlFlowKey, bool] = {}
    for key, _ in _pairs(test_samples):
        hit = keys.get(key)
        if hit is None:
            hit = keys[key] = key in train_index.counts
        total += 1
        leaked += hit
    unique_leaked = sum(keys.values())
    return LeakageReport(
        test_samples_total=total,
        test_samples_leaked=leaked,
        leakage_pct=_pct(leaked, total),
        unique_test_keys_total=len(keys),
        unique_test_keys_leaked=unique_leaked,
        unique_leakage_pct=_pct(unique_leaked, len(keys)),
        empty=total == 0,
    )


def compute_accuracy_limit(
    reference_index: PrefixIndex,
    test_samples: Iterable[SampleLike],
    reference: str = "test",
    count_ties: bool = False,
) -> AmbiguityReport:
    """Best accuracy a deterministic control-flow-only predictor can reach.

    Per key, the predictor may answer any label that is a majority label in
    ``reference_index``; the limit credits the choice that is right most
    often on the test samples. With ``reference="test"`` (index built from
    the same samples) this is sum of per-key maximum counts over the number
    of samples. Keys absent from the reference index never count.

    ``count_ties=True`` instead credits every sample whose label ties for
    the maximum, which can exceed what any single predictor achieves.
    """
    if reference not in ("test", "train"):
        raise ValueError(f"reference must be 'test' or 'train', got {reference!r}")
    per_key: dict[ControlFlowKey, Counter] = {}
    total = ambiguous = 0
    for key, label in _pairs(test_samples):
        total += 1
        per_key.setdefault(key, Counter())[label] += 1
    at_max = 0
    for key, test_labels in per_key.items():
        labels = reference_index.counts.get(key)
        if not labels:
            continue
        n = sum(test_labels.values())
        if len(labels) > 1:
            ambiguous += n
        top = max(labels.values())
        winners = [l for l, c in labels.items() if c == top]
        if count_ties:
            at_max += sum(test_labels[l] for l in winners)
        else:
            at_max += max(test_labels[l] for l in winners)
    return AmbiguityReport(
        accuracy_limit=at_max / total if total else 0.0,
        ambiguous_sample_pct=_pct(ambiguous, total),
        reference=reference,
        test_samples_total=total,
        test_samples_at_max=at_max,
        empty=total == 0,
    )


def audit_split(
    train: EventLog, test: EventLog, limit_reference: str = "test"
) -> tuple[LeakageReport, AmbiguityReport]:
    test_pairs: Sequence[tuple] = list(iter_keyed_samples(test))
    train_index = index_log(train)
    leakage = compute_leakage(train_index, test_pairs)
    ref_index = build_index(test_pairs) if limit_reference == "test" else train_index
    limit = compute_accuracy_limit(ref_index, test_pairs, reference=limit_reference)
    return leakage, limit
