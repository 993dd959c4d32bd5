"""Command line: ``dnmembrane run <config>`` and ``dnmembrane list``.

Exit status: 0 all assertions pass, 1 an assertion failed, 2 the config is
unreadable or invalid, 3 a numerical failure stopped the run.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import EXPERIMENT_KINDS, load_config, required_keys
from .errors import ConfigError, DnMembraneError, NumericalError
from .experiments import DESCRIPTIONS, run_experiment
from .report import ExperimentReport, write_table_csv

EXIT_PASS, EXIT_ASSERT, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("dnmembrane")


def list_experiments() -> str:
    lines = []
    for kind in sorted(EXPERIMENT_KINDS):
        lines.append(f"{kind:12s} {DESCRIPTIONS[kind]}")
        lines.append(f"{'':12s} required: {', '.join(required_keys(kind))}")
    return "\n".join(lines) + "\n"


def _error_report(kind: str, path, exc, out_dir: Path | None, prefix: str) -> None:
    if out_dir is None:
        return
    rep = ExperimentReport(kind, config={"path": str(path)})
    rep.add_error(type(exc).__name__, str(exc))
    try:
        rep.write_json(out_dir / f"{prefix}.json")
    except OSError as werr:
        log.error("could not write error report: %s", werr)


def run(path, out_dir=None, seed=None, jobs: int = 1) -> int:
    """Run one config file and write its report; return the exit status."""
    out = Path(out_dir) if out_dir is not None else None
    try:
        cfg = load_config(path, seed=seed)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        _error_report("config", path, exc, out, Path(path).stem)
        return EXIT_CONFIG

    if out is None:
        out = Path(cfg.raw.get("output", {}).get("dir", "results"))
    try:
        rep, tables = run_experiment(cfg, jobs=jobs)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        _error_report(cfg.kind, path, exc, out, cfg.prefix)
        return EXIT_CONFIG
    except (NumericalError, DnMembraneError) as exc:
        log.error("numerical failure: %s", exc)
        _error_report(cfg.kind, path, exc, out, cfg.prefix)
        return EXIT_NUMERIC

    for suffix, schema, header, rows in tables:
        write_table_csv(out / f"{cfg.prefix}_{suffix}.csv", schema, header, rows)
    rep.write_json(out / f"{cfg.prefix}.json")

    failed = [k for k, ok in rep.all_assertions().items() if not ok]
    for k in failed:
        log.warning("assertion failed: %s", k)
    print(f"{cfg.name}: {'pass' if rep.verdict else 'fail'} ({len(rep.all_assertions())} assertions, report in {out})")
    return EXIT_PASS if rep.verdict else EXIT_ASSERT


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dnmembrane", description="D-N map experiments for prestressed membranes")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config", help="YAML config file")
    r.add_argument("--out-dir", default=None, help="output directory (default: config output.dir or ./results)")
    r.add_argument("--seed", type=int, default=None, help="override the probe seed")
    r.add_argument("--jobs", type=int, default=1, help="mesh levels run concurrently")
    sub.add_parser("list", help="list experiment kinds")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s")
    if args.command == "list":
        sys.stdout.write(list_experiments())
        return EXIT_PASS
    if args.jobs < 1:
        log.error("--jobs must be at least 1")
        return EXIT_CONFIG
    return run(args.config, args.out_dir, args.seed, args.jobs)


if __name__ == "__main__":
    sys.exit(main())
