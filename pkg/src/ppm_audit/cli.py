"""Command-line front end.

Exit codes: 0 ok, 2 usage, 3 ingest, 4 protocol / external predictor, 5 internal.
"""

from __future__ import annotations

import argparse
import logging
import shlex
import sys
from pathlib import Path

from . import __version__
from .baseline import BaselineModel, evaluate, predict_key, rule_usage, train_baseline
from .ingest import CsvMapping, IngestError, infer_csv_mapping, parse_timestamp, read_log, write_log
from .model import EventLog, control_flow_key
from .report import (
    ACCURACY_COLUMNS,
    LEAKAGE_COLUMNS,
    SUMMARY_COLUMNS,
    ReportVersionError,
    accuracy_table,
    build_report,
    canonical_json,
    leakage_table,
    load_reports,
    summary_row,
    write_csv,
)
from .scenarios import (
    ProtocolError,
    ScenarioId,
    export_probes,
    generate,
    import_probes,
    read_predictions,
    render_table,
    run_external_predictor,
    score,
    write_predictions,
)
from .splitter import SplitError, split_random, split_temporal

log = logging.getLogger("ppm_audit")

EXIT_OK, EXIT_USAGE, EXIT_INGEST, EXIT_PROTOCOL, EXIT_INTERNAL = 0, 2, 3, 4, 5

BASELINE_COMMAND = [sys.executable, "-m", "ppm_audit", "baseline", "protocol"]


class UsageError(Exception):
    pass


def _parse_seeds(text: str) -> list[int]:
    try:
        seeds = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers: {text!r}")
    if not seeds:
        raise argparse.ArgumentTypeError("empty seed list")
    return seeds


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _load_log(args) -> EventLog:
    mapping = CsvMapping.load(args.csv_map) if getattr(args, "csv_map", None) else None
    event_log, report = read_log(args.log, args.format, mapping)
    for where, msg in report.warnings[:20]:
        log.warning("%s: %s: %s", args.log, where, msg)
    if len(report.warnings) > 20:
        log.warning("%s: %d more warnings suppressed", args.log, len(report.warnings) - 20)
    log.info(
        "read %s: %d traces, %d events, %d skipped",
        args.log, report.traces_read, report.events_read, report.rows_skipped,
    )
    return event_log


def _require_samples(event_log: EventLog) -> None:
    if all(len(t) < 2 for t in event_log):
        raise UsageError(
            f"log {event_log.name!r} has no trace with two or more events, so it yields "
            "zero prefix samples; nothing to audit"
        )


# --------------------------------------------------------------------------
# audit / split


def cmd_audit(args) -> int:
    event_log = _load_log(args)
    _require_samples(event_log)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    plans: list = []
    if args.self_split:
        plans.append(None)
    seeds = args.seeds
    temporal = args.temporal
    if not args.self_split and seeds is None and not temporal:
        seeds, temporal = [1, 2, 3, 4, 5], True
    for s in seeds or []:
        plans.append(split_random(event_log, args.test_fraction, s))
    if temporal:
        plans.append(split_temporal(event_log, args.test_fraction))

    rows = []
    for manifest in plans:
        report = build_report(
            event_log, manifest, log_path=args.log, limit_reference=args.limit_reference
        )
        label = report["split"]["label"]
        if manifest is not None:
            manifest.save(out / f"{label}.manifest.json")
        (out / f"{label}.report.json").write_text(canonical_json(report), encoding="utf-8")
        row = summary_row(report)
        rows.append(row)
        print(
            f"{label:>16}  leakage {row['leakage_pct']:6.2f}%  limit {row['accuracy_limit']:.4f}"
            f"  baseline {row['baseline_accuracy']:.4f}"
        )
    write_csv(rows, SUMMARY_COLUMNS, out / "summary.csv")
    return EXIT_OK


def cmd_split(args) -> int:
    event_log = _load_log(args)
    if args.temporal:
        manifest = split_temporal(event_log, args.test_fraction)
    else:
        manifest = split_random(event_log, args.test_fraction, args.seed)
    if args.out:
        manifest.save(args.out)
    else:
        sys.stdout.write(manifest.dumps())
    return EXIT_OK


# --------------------------------------------------------------------------
# baseline


def cmd_baseline_train(args) -> int:
    event_log = _load_log(args)
    _require_samples(event_log)
    model = train_baseline(event_log)
    model.save(args.out)
    print(f"trained on {model.n_samples} samples, {model.n_unique_keys} unique prefixes -> {args.out}")
    return EXIT_OK


def cmd_baseline_dump(args) -> int:
    model = BaselineModel.load(args.model)
    sys.stdout.write(model.dumps())
    return EXIT_OK


def cmd_baseline_predict(args) -> int:
    model = BaselineModel.load(args.model)
    event_log = _load_log(args)
    _require_samples(event_log)
    acc, records = evaluate(model, event_log)
    usage = rule_usage(records)
    if args.out:
        rows = [
            {
                "case_id": r.sample.case_id,
                "prefix_length": r.sample.prefix_length,
                "label": r.sample.label,
                "predicted": r.predicted,
                "rule_used": r.rule_used,
                "correct": int(r.correct),
            }
            for r in records
        ]
        write_csv(rows, ["case_id", "prefix_length", "label", "predicted", "rule_used", "correct"], args.out)
    print(f"accuracy {acc:.6f} over {len(records)} samples; rules {usage}")
    return EXIT_OK


def cmd_baseline_protocol(args) -> int:
    """External-predictor entry point: TRAIN_LOG PROBES OUT."""
    event_log, _ = read_log(args.train_log)
    model = train_baseline(event_log)
    probes = import_probes(args.probes)
    predictions = {p.probe_id: predict_key(model, control_flow_key(p.prefix))[0] for p in probes}
    write_predictions(predictions, args.predictions)
    return EXIT_OK


# --------------------------------------------------------------------------
# scenarios


def _scenario_ids(text: str) -> list[ScenarioId]:
    if text.lower() == "all":
        return list(ScenarioId)
    try:
        return [ScenarioId.parse(t) for t in text.split(",")]
    except ValueError as exc:
        raise UsageError(str(exc))


def cmd_scenario_generate(args) -> int:
    base = parse_timestamp(args.base_timestamp) if args.base_timestamp else None
    out = Path(args.out)
    for sid in _scenario_ids(args.id):
        sc = generate(sid, args.replication, base)
        d = out / sid.value
        d.mkdir(parents=True, exist_ok=True)
        write_log(sc.training_log, "xes", d / "training.xes")
        write_log(sc.training_log, "csv", d / "training.csv")
        (d / "training.csv-map.json").write_text(
            canonical_json(infer_csv_mapping(sc.training_log).to_dict()), encoding="utf-8"
        )
        export_probes(sc, d / "probes.jsonl")
        (d / "table.txt").write_text(render_table(sc.training_log), encoding="utf-8")
        (d / "metadata.json").write_text(
            canonical_json({"scenario": sid.value, "replication": sc.replication, **sc.metadata}),
            encoding="utf-8",
        )
        print(f"{sid.value}: {len(sc.training_log)} traces, {len(sc.probes)} probes -> {d}")
    return EXIT_OK


def cmd_scenario_score(args) -> int:
    ids = _scenario_ids(args.id)
    if args.predictions and len(ids) != 1:
        raise UsageError("--predictions scores exactly one scenario")
    if args.baseline:
        command = BASELINE_COMMAND
    elif args.cmd:
        command = shlex.split(args.cmd)
    elif not args.predictions:
        raise UsageError("give --cmd, --baseline or --predictions")
    cards = []
    for sid in ids:
        sc = generate(sid, args.replication)
        if args.predictions:
            card = score(sc, read_predictions(args.predictions))
        else:
            card = run_external_predictor(sc, command, timeout=args.timeout_secs)
        cards.append(card)
        print(f"{sid.value}: {card.overall_rate:.3f} of {len(card.results)} probes satisfied")
    out = Path(args.out) if args.out else None
    if out is not None:
        if len(cards) == 1 and out.suffix == ".json":
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_text(cards[0].dumps(), encoding="utf-8")
        else:
            out.mkdir(parents=True, exist_ok=True)
            for card in cards:
                (out / f"{card.scenario}.scorecard.json").write_text(card.dumps(), encoding="utf-8")
    else:
        for card in cards:
            sys.stdout.write(card.dumps())
    return EXIT_OK


# --------------------------------------------------------------------------
# plot data


def cmd_plotdata(args) -> int:
    try:
        reports = load_reports(args.reports)
    except ReportVersionError as exc:
        raise UsageError(str(exc))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(leakage_table(reports), LEAKAGE_COLUMNS, out / "leakage_by_log.csv")
    write_csv(accuracy_table(reports), ACCURACY_COLUMNS, out / "accuracy_by_split.csv")
    print(f"wrote {out / 'leakage_by_log.csv'} and {out / 'accuracy_by_split.csv'}")
    return EXIT_OK


# --------------------------------------------------------------------------


def _add_log_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--log", required=True, help="event log (XES, optionally .gz, or CSV)")
    p.add_argument("--format", choices=["xes", "csv"], help="override format detection")
    p.add_argument("--csv-map", help="JSON column mapping for CSV input")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ppm-audit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("audit", help="leakage, accuracy limit and baseline per split")
    _add_log_args(p)
    p.add_argument("--seeds", type=_parse_seeds, help="random-split seeds, e.g. 1,2,3,4,5")
    p.add_argument("--temporal", action="store_true", help="add the temporal split")
    p.add_argument("--self-split", action="store_true", help="train = test = whole log")
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--limit-reference", choices=["test", "train"], default="test")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("split", help="write a split manifest")
    _add_log_args(p)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--seed", type=int)
    g.add_argument("--temporal", action="store_true")
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--out")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("baseline", help="majority/bigram baseline")
    bsub = p.add_subparsers(dest="baseline_command", required=True)
    b = bsub.add_parser("train")
    _add_log_args(b)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_baseline_train)
    b = bsub.add_parser("dump")
    b.add_argument("--model", required=True)
    b.set_defaults(func=cmd_baseline_dump)
    b = bsub.add_parser("predict")
    b.add_argument("--model", required=True)
    _add_log_args(b)
    b.add_argument("--out", help="per-sample prediction CSV")
    b.set_defaults(func=cmd_baseline_predict)
    b = bsub.add_parser("protocol", help="external-predictor entry: TRAIN PROBES OUT")
    b.add_argument("train_log")
    b.add_argument("probes")
    b.add_argument("predictions")
    b.set_defaults(func=cmd_baseline_protocol)

    p = sub.add_parser("scenario", help="synthetic generalization scenarios")
    ssub = p.add_subparsers(dest="scenario_command", required=True)
    s = ssub.add_parser("generate")
    s.add_argument("--id", default="all")
    s.add_argument("--replication", type=_positive_int, default=1)
    s.add_argument("--base-timestamp", help="ISO instant; stamps L1-L5 events")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_scenario_generate)
    s = ssub.add_parser("score")
    s.add_argument("--id", default="all")
    s.add_argument("--cmd", help="predictor command; receives TRAIN PROBES OUT")
    s.add_argument("--baseline", action="store_true", help="score the built-in baseline")
    s.add_argument("--predictions", help="score an existing prediction JSONL")
    s.add_argument("--replication", type=_positive_int, default=1)
    s.add_argument("--timeout-secs", type=float, default=300.0)
    s.add_argument("--out", help="scorecard .json file or directory")
    s.set_defaults(func=cmd_scenario_score)

    p = sub.add_parser("plotdata", help="figure-shaped CSV tables from audit reports")
    p.add_argument("reports", nargs="+")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plotdata)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
    )
    try:
        return args.func(args)
    except (UsageError, SplitError) as exc:
        print(f"ppm-audit: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IngestError, FileNotFoundError, UnicodeDecodeError) as exc:
        print(f"ppm-audit: ingest error: {exc}", file=sys.stderr)
        return EXIT_INGEST
    except ProtocolError as exc:
        print(f"ppm-audit: protocol error: {exc}", file=sys.stderr)
        stderr = getattr(exc, "stderr", "")
        if stderr:
            print(stderr.rstrip()[-2000:], file=sys.stderr)
        return EXIT_PROTOCOL
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"ppm-audit: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
