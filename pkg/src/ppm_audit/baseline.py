"""Majority-label next-activity baseline with bigram and global fallbacks."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .audit import index_log
from .model import ControlFlowKey, Event, EventLog, PrefixSample, control_flow_key, enumerate_log_samples

PREFIX_LOOKUP = "prefix_lookup"
BIGRAM_FALLBACK = "bigram_fallback"
GLOBAL_FALLBACK = "global_fallback"
RULES = (PREFIX_LOOKUP, BIGRAM_FALLBACK, GLOBAL_FALLBACK)


def _argmax(counts: Mapping[str, int]) -> str:
    # highest count, then lexicographically smallest label
    return min(counts.items(), key=lambda kv: (-kv[1], kv[0]))[0]


@dataclass(frozen=True)
class BaselineModel:
    prefix_table: Mapping[ControlFlowKey, str]
    bigram_table: Mapping[str, str]
    global_majority: str
    n_samples: int
    n_unique_keys: int

    @property
    def training_stats(self) -> tuple[int, int]:
        return self.n_samples, self.n_unique_keys

    def to_dict(self) -> dict:
        return {
            "prefix_table": [[list(k), v] for k, v in sorted(self.prefix_table.items())],
            "bigram_table": [[k, v] for k, v in sorted(self.bigram_table.items())],
            "global_majority": self.global_majority,
            "training_stats": {"n_samples": self.n_samples, "n_unique_keys": self.n_unique_keys},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=1) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "BaselineModel":
        stats = d.get("training_stats", {})
        prefix_table = {tuple(k): v for k, v in d["prefix_table"]}
        return cls(
            prefix_table=prefix_table,
            bigram_table={k: v for k, v in d["bigram_table"]},
            global_majority=d["global_majority"],
            n_samples=stats.get("n_samples", 0),
            n_unique_keys=stats.get("n_unique_keys", len(prefix_table)),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "BaselineModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class PredictionRecord:
    sample: PrefixSample
    predicted: str
    rule_used: str

    @property
    def correct(self) -> bool:
        return self.predicted == self.sample.label


def train_baseline(train: EventLog) -> BaselineModel:
    index = index_log(train)
    if index.n_samples == 0:
        raise ValueError(
            f"log {train.name!r} yields no prefix samples (every trace has length 1)"
        )
    prefix_table = {key: _argmax(labels) for key, labels in index.counts.items()}

    successors: dict[str, Counter] = {}
    label_counts: Counter = Counter()
    for trace in train:
        acts = trace.activities
        for a, b in zip(acts, acts[1:]):
            successors.setdefault(a, Counter())[b] += 1
            label_counts[b] += 1
    return BaselineModel(
        prefix_table=prefix_table,
        bigram_table={a: _argmax(c) for a, c in successors.items()},
        global_majority=_argmax(label_counts),
        n_samples=index.n_samples,
        n_unique_keys=len(index),
    )


def predict_key(model: BaselineModel, key: ControlFlowKey) -> tuple[str, str]:
    hit = model.prefix_table.get(key)
    if hit is not None:
        return hit, PREFIX_LOOKUP
    hit = model.bigram_table.get(key[-1])
    if hit is not None:
        return hit, BIGRAM_FALLBACK
    return model.global_majority, GLOBAL_FALLBACK


def predict(model: BaselineModel, prefix: Sequence[Event]) -> tuple[str, str]:
    """Predict the next activity, returning (activity, rule used)."""
    return predict_key(model, control_flow_key(prefix))


def evaluate(model: BaselineModel, test: EventLog) -> tuple[float, list[PredictionRecord]]:
    samples = enumerate_log_samples(test)
    if not samples:
        raise ValueError(f"log {test.name!r} yields no prefix samples to evaluate")
    records = []
    for s in samples:
        label, rule = predict_key(model, s.key)
        records.append(PredictionRecord(s, label, rule))
    correct = sum(r.correct for r in records)
    return correct / len(records), records


def rule_usage(records: Sequence[PredictionRecord]) -> dict[str, int]:
    usage = dict.fromkeys(RULES, 0)
    for r in records:
        usage[r.rule_used] += 1
    return usage


def accuracy_on_log(model: BaselineModel, test: EventLog) -> tuple[float, dict[str, int], int]:
    """Accuracy and rule usage without materialising prediction records."""
    usage = dict.fromkeys(RULES, 0)
    total = correct = 0
    for trace in test:
        acts = trace.activities
        for p in range(1, len(acts)):
            label, rule = predict_key(model, acts[:p])
            usage[rule] += 1
            correct += label == acts[p]
            total += 1
    if total == 0:
        raise ValueError(f"log {test.name!r} yields no prefix samples to evaluate")
    return correct / total, usage, total
