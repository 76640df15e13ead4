"""Audit report documents and the figure-shaped summary tables."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import time
from pathlib import Path
from statistics import mean
from typing import Sequence

from . import __version__
from .audit import audit_split
from .baseline import RULES, accuracy_on_log, train_baseline
from .model import EventLog
from .splitter import SplitManifest, materialize

REPORT_VERSION = 1

SUMMARY_COLUMNS = [
    "log", "split", "method", "seed", "train_samples", "test_samples",
    "leakage_pct", "unique_leakage_pct", "accuracy_limit", "ambiguous_sample_pct",
    "baseline_accuracy",
]


def file_fingerprint(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def log_fingerprint(log: EventLog) -> str:
    """Content hash over case IDs and activity sequences."""
    h = hashlib.sha256()
    for t in log:
        h.update(json.dumps([t.case_id, list(t.activities)], ensure_ascii=False).encode("utf-8"))
        h.update(b"\n")
    return "sha256:" + h.hexdigest()


def canonical_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def compute_metrics(train: EventLog, test: EventLog, limit_reference: str = "test") -> dict:
    leakage, limit = audit_split(train, test, limit_reference)
    model = train_baseline(train)
    acc, usage, n_test = accuracy_on_log(model, test)
    return {
        "train_samples": model.n_samples,
        "test_samples": n_test,
        "leakage_pct": leakage.leakage_pct,
        "unique_leakage_pct": leakage.unique_leakage_pct,
        "unique_test_keys": leakage.unique_test_keys_total,
        "unique_test_keys_leaked": leakage.unique_test_keys_leaked,
        "accuracy_limit": limit.accuracy_limit,
        "limit_reference": limit.reference,
        "ambiguous_sample_pct": limit.ambiguous_sample_pct,
        "baseline_accuracy": acc,
        "baseline_rule_usage": {r: usage[r] for r in RULES},
    }


def build_report(
    log: EventLog,
    manifest: SplitManifest | None,
    *,
    log_path: str | Path | None = None,
    limit_reference: str = "test",
) -> dict:
    """Audit one split. ``manifest=None`` means train = test = the whole log."""
    t0 = time.perf_counter()
    if manifest is None:
        train, test = log, log
        split = {"method": "self", "label": "self"}
    else:
        train, test = materialize(log, manifest)
        split = {"label": manifest.spec.label, "manifest": manifest.to_dict()}
    t1 = time.perf_counter()
    metrics = compute_metrics(train, test, limit_reference)
    t2 = time.perf_counter()
    source = {
        "name": log.name,
        "traces": len(log),
        "events": log.n_events,
        "content_fingerprint": log_fingerprint(log),
    }
    if log_path is not None:
        source["path"] = str(log_path)
        source["file_fingerprint"] = file_fingerprint(log_path)
    return {
        "report_version": REPORT_VERSION,
        "tool_version": __version__,
        "log": source,
        "split": split,
        "metrics": metrics,
        "timing": {"split_seconds": t1 - t0, "metrics_seconds": t2 - t1},
    }


def summary_row(report: dict) -> dict:
    m = report["metrics"]
    manifest = report["split"].get("manifest", {})
    return {
        "log": report["log"]["name"],
        "split": report["split"]["label"],
        "method": manifest.get("method", report["split"].get("method")),
        "seed": "" if manifest.get("seed") is None else manifest["seed"],
        "train_samples": m["train_samples"],
        "test_samples": m["test_samples"],
        "leakage_pct": m["leakage_pct"],
        "unique_leakage_pct": m["unique_leakage_pct"],
        "accuracy_limit": m["accuracy_limit"],
        "ambiguous_sample_pct": m["ambiguous_sample_pct"],
        "baseline_accuracy": m["baseline_accuracy"],
    }


def write_csv(rows: Sequence[dict], columns: Sequence[str], path: str | Path) -> None:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({c: row.get(c, "") for c in columns})
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


class ReportVersionError(ValueError):
    pass


def load_reports(paths: Sequence[str | Path]) -> list[dict]:
    reports = []
    for p in paths:
        doc = json.loads(Path(p).read_text(encoding="utf-8"))
        if doc.get("report_version") != REPORT_VERSION:
            raise ReportVersionError(
                f"{p}: report_version {doc.get('report_version')!r}, expected {REPORT_VERSION}"
            )
        reports.append(doc)
    return reports


def leakage_table(reports: Sequence[dict]) -> list[dict]:
    """Mean leakage per log across its splits (one row per log)."""
    by_log: dict[str, list[dict]] = {}
    for r in reports:
        by_log.setdefault(r["log"]["name"], []).append(r["metrics"])
    return [
        {
            "log": name,
            "n_splits": len(ms),
            "mean_leakage_pct": mean(m["leakage_pct"] for m in ms),
            "mean_unique_leakage_pct": mean(m["unique_leakage_pct"] for m in ms),
        }
        for name, ms in by_log.items()
    ]


def accuracy_table(reports: Sequence[dict]) -> list[dict]:
    """Baseline accuracy and accuracy limit, one row per split."""
    return [
        {
            "log": r["log"]["name"],
            "split": r["split"]["label"],
            "baseline_accuracy": r["metrics"]["baseline_accuracy"],
            "accuracy_limit": r["metrics"]["accuracy_limit"],
            "limit_reference": r["metrics"]["limit_reference"],
        }
        for r in reports
    ]


LEAKAGE_COLUMNS = ["log", "n_splits", "mean_leakage_pct", "mean_unique_leakage_pct"]
ACCURACY_COLUMNS = ["log", "split", "baseline_accuracy", "accuracy_limit", "limit_reference"]
