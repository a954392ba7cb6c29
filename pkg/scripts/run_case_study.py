#!/usr/bin/env python3
"""Run the full scenario matrix on the bundled 48 h community fixture.

Writes the fixture CSVs, the baseline, all four objective x sharing
settlements, and per-hour traces into an output directory, and prints the
comparison tables. This is the end-to-end demonstration run; swap the
fixture for real data by pointing --config at your own community JSON.

Usage:
    python3 scripts/run_case_study.py --out results/
    python3 scripts/run_case_study.py --config path/to/community.json --out results/
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from lecopt.cli import main as cli_main
from lecopt.fixtures import write_fixture_files


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--out", required=True, help="output directory for reports and traces")
    parser.add_argument("--config", default=None, help="community config JSON (default: bundled 48 h fixture)")
    parser.add_argument("--hours", type=int, default=48, help="fixture horizon when no config is given")
    parser.add_argument("--window-hours", type=int, default=24, help="optimization window length")
    args = parser.parse_args(argv)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.config is not None:
        config = Path(args.config)
    else:
        config = write_fixture_files(out_dir / "fixture", hours=args.hours)
        print(f"fixture written to {config.parent}")

    return cli_main(
        [
            "optimize",
            "--config", str(config),
            "--objective", "both",
            "--sharing", "both",
            "--window-hours", str(args.window_hours),
            "--out", str(out_dir),
        ]
    )


if __name__ == "__main__":
    sys.exit(main())
