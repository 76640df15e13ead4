#!/usr/bin/env python3
"""Score a next-activity predictor on the six generalization scenarios.

    python3 scripts/run_scenarios.py                      # built-in baseline
    python3 scripts/run_scenarios.py --cmd "python3 my_model.py" --replication 10

The predictor is called as ``CMD TRAIN.xes PROBES.jsonl OUT.jsonl`` once per
scenario. Prints a probe-by-probe table and writes scorecards to --out.
"""

import argparse
import shlex
import sys
from pathlib import Path

from ppm_audit.cli import BASELINE_COMMAND
from ppm_audit.scenarios import ProtocolError, generate_all, run_external_predictor


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cmd", help="predictor command (default: the majority/bigram baseline)")
    ap.add_argument("--replication", type=int, default=1)
    ap.add_argument("--timeout", type=float, default=300.0)
    ap.add_argument("--out", type=Path, default=Path("scorecards"))
    args = ap.parse_args(argv)

    command = shlex.split(args.cmd) if args.cmd else BASELINE_COMMAND
    args.out.mkdir(parents=True, exist_ok=True)
    total = hits = 0
    for sc in generate_all(args.replication):
        try:
            card = run_external_predictor(sc, command, timeout=args.timeout)
        except ProtocolError as exc:
            print(f"{sc.id.value}: {exc}", file=sys.stderr)
            return 4
        (args.out / f"{card.scenario}.scorecard.json").write_text(card.dumps(), encoding="utf-8")
        for r in card.results:
            mark = "ok " if r.satisfied else "MISS"
            print(f"{mark} {r.probe_id:<6} predicted {r.prediction:<12} ({r.generalization_type})")
            hits += r.satisfied
            total += 1
    print(f"\n{hits}/{total} probes satisfied")
    return 0


if __name__ == "__main__":
    sys.exit(main())
