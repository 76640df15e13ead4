"""Audit next-activity prediction setups on event logs.

Measures example leakage between train/test splits, the control-flow
accuracy limit, a majority/bigram baseline, and scores predictors on small
synthetic generalization scenarios.
"""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    ControlFlowKey,
    Event,
    EventLog,
    PrefixSample,
    Trace,
    control_flow_key,
    enumerate_log_samples,
    make_prefix_samples,
)
from .audit import (  # noqa: E402
    AmbiguityReport,
    LeakageReport,
    PrefixIndex,
    audit_split,
    build_index,
    compute_accuracy_limit,
    compute_leakage,
)
from .baseline import BaselineModel, evaluate, predict, train_baseline  # noqa: E402
from .splitter import SplitManifest, SplitSpec, materialize, split_random, split_temporal  # noqa: E402

__all__ = [
    "AmbiguityReport",
    "BaselineModel",
    "ControlFlowKey",
    "Event",
    "EventLog",
    "LeakageReport",
    "PrefixIndex",
    "PrefixSample",
    "SplitManifest",
    "SplitSpec",
    "Trace",
    "audit_split",
    "build_index",
    "compute_accuracy_limit",
    "compute_leakage",
    "control_flow_key",
    "enumerate_log_samples",
    "evaluate",
    "make_prefix_samples",
    "materialize",
    "predict",
    "split_random",
    "split_temporal",
    "train_baseline",
]
