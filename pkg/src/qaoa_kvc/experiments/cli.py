"""Command line entry point: ``qaoa-kvc <experiment> [--config FILE] [--seed S] [--out-dir DIR] [--threads T]``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from qaoa_kvc.errors import QAOAError
from qaoa_kvc.experiments.config import EXPERIMENT_KINDS, load_config
from qaoa_kvc.experiments.runners import run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qaoa-kvc", description="Run k-vertex-cover QAOA experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in EXPERIMENT_KINDS:
        p = sub.add_parser(kind)
        p.add_argument("--config", help="JSON config file; keys override the experiment defaults")
        p.add_argument("--seed", type=int, help="master seed (overrides the config)")
        p.add_argument("--out-dir", dest="out_dir", help="output directory (overrides the config)")
        p.add_argument("--threads", type=int, help="worker processes (does not change results)")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _fail(kind: str, message: str, code: int = 1) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.command, args.config, seed=args.seed, out_dir=args.out_dir, threads=args.threads)
        res, written = run_experiment(cfg)
    except QAOAError as e:
        return _fail(e.kind, str(e))
    except (OSError, MemoryError) as e:
        return _fail("resource-limit", str(e))
    for path in written:
        print(path)
    if cfg.kind == "verify" and not res.json["verify"]["passed"]:
        failed = [k for k, c in res.json["verify"]["checks"].items() if not c["passed"]]
        return _fail("verification-failed", f"failed checks: {', '.join(failed)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
