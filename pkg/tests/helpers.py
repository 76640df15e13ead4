"""Random logs and brute-force oracles shared by the test modules.

The oracles work on plain lists of activity strings and never call into
the package, so they stay independent of the code they check.
"""

from __future__ import annotations

import itertools
import random
from datetime import datetime, timedelta, timezone

from ppm_audit.model import Event, EventLog, Trace


def random_sequences(rng: random.Random, max_activities=8, max_traces=50, max_len=12, min_traces=1):
    n_act = rng.randint(1, max_activities)
    alphabet = [f"a{i}" for i in range(n_act)]
    n_traces = rng.randint(min_traces, max_traces)
    return [
        [rng.choice(alphabet) for _ in range(rng.randint(1, max_len))] for _ in range(n_traces)
    ]


def log_of(sequences, name="log", prefix="c", stamps=False, attrs=False, rng=None):
    base = datetime(2020, 1, 1, tzinfo=timezone.utc)
    traces = []
    for i, seq in enumerate(sequences):
        events = []
        for j, a in enumerate(seq):
            ts = base + timedelta(days=i, minutes=j) if stamps else None
            at = {"resource": f"R{(rng or random).randint(0, 5)}", "cost": float(j)} if attrs else {}
            events.append(Event(a, ts, at))
        traces.append(Trace(f"{prefix}{i}", tuple(events)))
    return EventLog(name, tuple(traces))


# ---------------------------------------------------------------- oracles


def brute_prefixes(sequences):
    """All (prefix list, label) pairs, by direct unfolding."""
    out = []
    for seq in sequences:
        for p in range(1, len(seq)):
            out.append((list(seq[:p]), seq[p]))
    return out


def _same(a, b):
    if len(a) != len(b):
        return False
    for x, y in zip(a, b):
        if x != y:
            return False
    return True


def brute_leakage(train_seqs, test_seqs):
    """(leaked instances, total instances, leaked unique, total unique) by nested loops."""
    train = [p for p, _ in brute_prefixes(train_seqs)]
    test = [p for p, _ in brute_prefixes(test_seqs)]
    leaked = 0
    for tp in test:
        for rp in train:
            if _same(tp, rp):
                leaked += 1
                break
    uniq = []
    for tp in test:
        if not any(_same(tp, u) for u in uniq):
            uniq.append(tp)
    uniq_leaked = sum(any(_same(u, rp) for rp in train) for u in uniq)
    return leaked, len(test), uniq_leaked, len(uniq)


def brute_limit(test_seqs):
    """Sum over distinct prefixes of the largest label count, found by linear scans."""
    pairs = brute_prefixes(test_seqs)
    if not pairs:
        return 0.0
    distinct = []
    for prefix, _ in pairs:
        if not any(_same(prefix, d) for d in distinct):
            distinct.append(prefix)
    hits = 0
    for d in distinct:
        counts = {}
        for p2, l2 in pairs:
            if _same(d, p2):
                counts[l2] = counts.get(l2, 0) + 1
        hits += max(counts.values())
    return hits / len(pairs)


def best_deterministic_accuracy(test_seqs):
    """Max accuracy over every function from seen keys to seen labels (exhaustive)."""
    pairs = [(tuple(p), l) for p, l in brute_prefixes(test_seqs)]
    keys = sorted({k for k, _ in pairs})
    labels = sorted({l for _, l in pairs})
    best = 0.0
    for assignment in itertools.product(labels, repeat=len(keys)):
        f = dict(zip(keys, assignment))
        acc = sum(f[k] == l for k, l in pairs) / len(pairs)
        best = max(best, acc)
    return best, len(labels) ** len(keys)
