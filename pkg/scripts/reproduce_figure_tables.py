#!/usr/bin/env python3
"""Audit every XES log in a directory and build the two figure tables.

    python3 scripts/reproduce_figure_tables.py DATA_DIR --out results/

For each log this runs five seeded random 80/20 splits plus the temporal
split, then writes leakage_by_log.csv (mean leakage per log) and
accuracy_by_split.csv (baseline accuracy vs accuracy limit per split).
"""

import argparse
import sys
import time
from pathlib import Path

from ppm_audit.cli import main as cli


def find_logs(directory: Path) -> list[Path]:
    return sorted(p for p in directory.iterdir() if p.name.lower().endswith((".xes", ".xes.gz")))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("data_dir", type=Path)
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--limit-reference", choices=["test", "train"], default="test")
    args = ap.parse_args(argv)

    logs = find_logs(args.data_dir)
    if not logs:
        print(f"no .xes or .xes.gz files in {args.data_dir}", file=sys.stderr)
        return 2
    reports = []
    for path in logs:
        out = args.out / path.name.split(".")[0]
        t0 = time.perf_counter()
        rc = cli(["audit", "--log", str(path), "--limit-reference", args.limit_reference, "--out", str(out)])
        if rc:
            return rc
        print(f"{path.name}: {time.perf_counter() - t0:.1f}s")
        reports += sorted(str(p) for p in out.glob("*.report.json"))
    return cli(["plotdata", *reports, "--out", str(args.out)])


if __name__ == "__main__":
    sys.exit(main())
