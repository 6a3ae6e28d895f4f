"""Command line entry point.

    loglab run CONFIG [CONFIG ...] [--out DIR] [--jobs N] [--seed K]
    loglab verify [--seed K] [--out DIR]
    loglab list-kinds
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import KINDS, SCHEMAS, ConfigError, default_scenario, load_config
from .scenarios import run_scenario

log = logging.getLogger("loglab")


def _run_one(path: str, out: str | None, seed: int | None, many: bool) -> tuple[str, int]:
    scen = load_config(path)
    if seed is not None:
        scen.params["seed"] = seed
    if out is not None:
        target = Path(out) / scen.name if many else Path(out)
    else:
        target = Path("runs") / scen.name
    status, _ = run_scenario(scen, target)
    return scen.name, status


def cmd_run(args) -> int:
    paths = args.configs
    # validate everything up front so a typo fails before any work starts
    try:
        for p in paths:
            load_config(p)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    many = len(paths) > 1
    if args.jobs > 1 and many:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [pool.submit(_run_one, p, args.out, args.seed, many) for p in paths]
            results = [f.result() for f in futures]
    else:
        results = [_run_one(p, args.out, args.seed, many) for p in paths]
    worst = 0
    for name, status in results:
        print(f"{name}: {['pass', 'FAIL', 'ERROR'][status]}")
        worst = max(worst, status)
    return worst


def cmd_verify(args) -> int:
    scen = default_scenario("verify", seed=args.seed, pairs=args.pairs)
    status, outcome = run_scenario(scen, args.out or Path("runs") / "verify")
    if outcome is not None:
        for key, c in outcome.checks.items():
            print(f"{key}: {'pass' if c.passed else 'FAIL'} (violations {int(c.value)}, {c.note})")
    return status


def cmd_list_kinds(args) -> int:
    for kind in KINDS:
        keys = ", ".join(SCHEMAS[kind])
        print(f"{kind}: {keys}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="loglab", description="logarithmic Schrodinger experiments")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run scenario files")
    run.add_argument("configs", nargs="+")
    run.add_argument("--out", default=None, help="output directory")
    run.add_argument("--jobs", type=int, default=1, help="scenarios to run concurrently")
    run.add_argument("--seed", type=int, default=None, help="override the seed key")
    run.set_defaults(func=cmd_run)

    ver = sub.add_parser("verify", help="run the inequality audits")
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--pairs", type=int, default=1_000_000)
    ver.add_argument("--out", default=None)
    ver.set_defaults(func=cmd_verify)

    lk = sub.add_parser("list-kinds", help="list scenario kinds and their keys")
    lk.set_defaults(func=cmd_list_kinds)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "jobs", 1) < 1:
        print("--jobs must be at least 1", file=sys.stderr)
        return 2
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
