"""``verify``: run verification suites and write a CSV report."""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path

from .config import Config, ConfigError, load_config
from .report import exit_code, summary_table, write_csv
from .suites import SUITE_ORDER, CheckRecord, plan, run_task

SUITE_CHOICES = (*SUITE_ORDER, "all")


def run_suites(cfg: Config, suites=SUITE_ORDER, seed: int | None = None, jobs: int = 1) -> list[CheckRecord]:
    """Records of the requested suites in planned order, independent of ``jobs``."""
    seed = cfg.seed if seed is None else seed
    tasks = plan(cfg, suites)
    fn = partial(run_task, cfg=cfg, seed=seed)
    if jobs <= 1 or len(tasks) <= 1:
        chunks = [fn(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(fn, tasks))
    return [r for chunk in chunks for r in chunk]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="verify", description=__doc__)
    p.add_argument("--suite", choices=SUITE_CHOICES, default=None, action="append", dest="suites",
                   help="suite to run (repeatable; default all)")
    p.add_argument("--config", type=Path, default=None, help="instance file (default: the shipped grid)")
    p.add_argument("--seed", type=int, default=None, help="run seed (default: the config's seed)")
    p.add_argument("--out", type=Path, default=Path("verify_report.csv"), help="CSV report path")
    p.add_argument("--strict", action="store_true", help="also fail on STAGNATED, SKIPPED and INFORMATIONAL")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--timings", action="store_true", help="fill the seconds column (breaks byte-identity)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    requested = args.suites or ["all"]
    suites = SUITE_ORDER if "all" in requested else tuple(s for s in SUITE_ORDER if s in requested)
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    if args.jobs < 1:
        print("error: --jobs must be positive", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    records = run_suites(cfg, suites, args.seed, args.jobs)
    write_csv(records, args.out, timings=args.timings)
    summary = summary_table(records)
    print(summary)
    args.out.with_suffix(".summary.txt").write_text(summary + "\n")
    print(f"\nreport: {args.out}")
    return exit_code(records, args.strict)


if __name__ == "__main__":
    sys.exit(main())
