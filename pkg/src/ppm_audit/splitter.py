"""Trace-level train/test splits and their JSON manifests.

Random splits shuffle the *sorted* case-ID list with SplitMix64 feeding an
unbiased Fisher-Yates shuffle, so a manifest can be reproduced from
(case IDs, fraction, seed) by any implementation of those two algorithms.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .model import EventLog

PRNG_NAME = "splitmix64+fisher-yates(rejection)"
SIZE_RULE = "max(1, floor(test_fraction * n_traces))"

_MASK64 = (1 << 64) - 1


class SplitError(ValueError):
    pass


class ManifestMismatchError(SplitError):
    """Manifest does not partition the log it is applied to."""


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound) by rejection sampling."""
        limit = (1 << 64) - ((1 << 64) % bound)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % bound


def seeded_shuffle(items: list, seed: int) -> list:
    out = list(items)
    rng = SplitMix64(seed)
    for i in range(len(out) - 1, 0, -1):
        j = rng.below(i + 1)
        out[i], out[j] = out[j], out[i]
    return out


@dataclass(frozen=True)
class SplitSpec:
    method: str
    test_fraction: float = 0.2
    seed: int | None = None

    def __post_init__(self):
        if self.method not in ("random", "temporal"):
            raise SplitError(f"unknown split method {self.method!r}")
        if not 0 < self.test_fraction < 1:
            raise SplitError(f"test_fraction must lie in (0, 1), got {self.test_fraction}")
        if self.method == "random":
            if self.seed is None or not 0 <= self.seed <= _MASK64:
                raise SplitError("random split needs a seed in [0, 2**64)")
        elif self.seed is not None:
            raise SplitError("temporal split takes no seed")

    @property
    def label(self) -> str:
        return f"random-seed{self.seed}" if self.method == "random" else "temporal"


@dataclass(frozen=True)
class SplitManifest:
    spec: SplitSpec
    train_case_ids: tuple[str, ...]
    test_case_ids: tuple[str, ...]
    source_log_name: str

    def __post_init__(self):
        train = tuple(sorted(self.train_case_ids))
        test = tuple(sorted(self.test_case_ids))
        if set(train) & set(test):
            raise SplitError("train and test case IDs overlap")
        object.__setattr__(self, "train_case_ids", train)
        object.__setattr__(self, "test_case_ids", test)

    def to_dict(self) -> dict:
        d = {
            "method": self.spec.method,
            "test_fraction": self.spec.test_fraction,
            "seed": self.spec.seed,
            "source_log_name": self.source_log_name,
            "train_case_ids": list(self.train_case_ids),
            "test_case_ids": list(self.test_case_ids),
        }
        if self.spec.method == "random":
            d["prng"] = PRNG_NAME
        d["size_rule"] = SIZE_RULE
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "SplitManifest":
        if d["method"] == "random" and d.get("prng", PRNG_NAME) != PRNG_NAME:
            raise SplitError(f"manifest uses unsupported PRNG {d['prng']!r}")
        return cls(
            SplitSpec(d["method"], d["test_fraction"], d.get("seed")),
            tuple(d["train_case_ids"]),
            tuple(d["test_case_ids"]),
            d["source_log_name"],
        )

    @classmethod
    def loads(cls, text: str) -> "SplitManifest":
        return cls.from_dict(json.loads(text))

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(self.dumps().encode("utf-8"))

    @classmethod
    def load(cls, path: str | Path) -> "SplitManifest":
        return cls.loads(Path(path).read_text(encoding="utf-8"))

    def swapped(self) -> "SplitManifest":
        return SplitManifest(self.spec, self.test_case_ids, self.train_case_ids, self.source_log_name)


def holdout_size(n_traces: int, test_fraction: float) -> int:
    return max(1, math.floor(test_fraction * n_traces))


def split_random(log: EventLog, test_fraction: float = 0.2, seed: int = 1) -> SplitManifest:
    spec = SplitSpec("random", test_fraction, seed)
    if len(log) < 2:
        raise SplitError(f"random split needs at least 2 traces, log has {len(log)}")
    ids = seeded_shuffle(sorted(log.case_ids), seed)
    k = holdout_size(len(ids), test_fraction)
    return SplitManifest(spec, tuple(ids[k:]), tuple(ids[:k]), log.name)


def split_temporal(log: EventLog, test_fraction: float = 0.2) -> SplitManifest:
    """Most recently started traces go to the test set; ties break on case ID."""
    spec = SplitSpec("temporal", test_fraction)
    if len(log) < 2:
        raise SplitError(f"temporal split needs at least 2 traces, log has {len(log)}")
    for trace in log:
        if trace.start_time is None:
            raise SplitError(f"case {trace.case_id!r} has no timestamp on its first event")
    ordered = sorted(log.traces, key=lambda t: (t.start_time, t.case_id))
    k = holdout_size(len(ordered), test_fraction)
    ids = [t.case_id for t in ordered]
    return SplitManifest(spec, tuple(ids[:-k]), tuple(ids[-k:]), log.name)


def self_split(log: EventLog) -> tuple[EventLog, EventLog]:
    """Train and test are both the full log (a 100%-leakage control)."""
    return log, log


def materialize(log: EventLog, manifest: SplitManifest) -> tuple[EventLog, EventLog]:
    train_ids = set(manifest.train_case_ids)
    test_ids = set(manifest.test_case_ids)
    known = set(log.case_ids)
    unknown = (train_ids | test_ids) - known
    if unknown:
        raise ManifestMismatchError(f"manifest names unknown case IDs: {sorted(unknown)[:10]}")
    uncovered = known - train_ids - test_ids
    if uncovered:
        raise ManifestMismatchError(f"manifest does not cover case IDs: {sorted(uncovered)[:10]}")
    train = tuple(t for t in log if t.case_id in train_ids)
    test = tuple(t for t in log if t.case_id in test_ids)
    return EventLog(f"{log.name}[train]", train), EventLog(f"{log.name}[test]", test)


def standard_split_suite(
    log: EventLog, seeds=(1, 2, 3, 4, 5), temporal: bool = True, test_fraction: float = 0.2
) -> list[SplitManifest]:
    """Five seeded random splits plus one temporal split."""
    manifests = [split_random(log, test_fraction, s) for s in seeds]
    if temporal:
        manifests.append(split_temporal(log, test_fraction))
    return manifests
