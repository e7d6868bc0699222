"""Command-line interface: ``psfp validate|compile|run|report``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from psfp.errors import ScenarioError
from psfp.report import resummarize, summarize, write_outputs
from psfp.scenario import load_scenario, parse_time
from psfp.scheduler import format_report

log = logging.getLogger("psfp")


def _scenario_paths(target: str, batch: bool) -> list[Path]:
    p = Path(target)
    if batch:
        if not p.is_dir():
            raise SystemExit(f"--batch expects a directory, got {target}")
        return sorted(list(p.glob("*.yaml")) + list(p.glob("*.yml")))
    return [p]


def _load(path: Path, args):
    bin_ns = parse_time(args.bin) if getattr(args, "bin", None) else None
    return load_scenario(path, scale=args.scale, seed=args.seed, bin=bin_ns)


def _report_errors(err: ScenarioError):
    for d in err.diagnostics:
        print(d, file=sys.stderr)


def cmd_validate(args) -> int:
    status = 0
    for path in _scenario_paths(args.scenario, args.batch):
        try:
            sc = _load(path, args)
        except ScenarioError as err:
            _report_errors(err)
            status = 1
            continue
        except OSError as err:
            print(f"{path}: {err}", file=sys.stderr)
            status = 1
            continue
        print(f"{path}: OK ({sc.name}; {len(sc.filter_entries)} streams, "
              f"{sc.schedule.entry_count} gate entries)")
    return status


def cmd_compile(args) -> int:
    status = 0
    for path in _scenario_paths(args.scenario, args.batch):
        try:
            sc = _load(path, args)
        except ScenarioError as err:
            _report_errors(err)
            status = 1
            continue
        print(f"# {path}")
        print(format_report(sc.schedule))
    return status


def cmd_run(args) -> int:
    status = 0
    paths = _scenario_paths(args.scenario, args.batch)
    for path in paths:
        try:
            sc = _load(path, args)
        except ScenarioError as err:
            _report_errors(err)
            status = 1
            continue
        out = Path(args.out)
        if len(paths) > 1:
            out = out / path.stem
        sim = sc.build()
        metrics = sim.run()
        try:
            write_outputs(sim, metrics, out, sc)
        except OSError as err:
            print(f"{out}: {err}", file=sys.stderr)
            status = 1
            continue
        s = summarize(sim, metrics, sc)
        f = s["frames"]
        print(f"{path}: ingested {f['ingested']}, forwarded {f['forwarded']}, "
              f"best-effort {f['best_effort']}, dropped {sum(f['dropped'].values())} -> {out}")
    return status


def cmd_report(args) -> int:
    try:
        print(resummarize(args.out_dir))
    except OSError as err:
        print(f"{args.out_dir}: {err}", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="psfp", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("scenario", help="scenario file (or directory with --batch)")
        p.add_argument("--batch", action="store_true", help="process every scenario in a directory")
        p.add_argument("--scale", type=int, default=None, help="rate divisor (default: run.scale or 1000)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--bin", default=None, help="metrics bin width, e.g. 10ms")

    p = sub.add_parser("validate", help="static validation")
    common(p)
    p.set_defaults(func=cmd_validate)
    p = sub.add_parser("compile", help="print the compiled gate schedule")
    common(p)
    p.set_defaults(func=cmd_compile)
    p = sub.add_parser("run", help="run a scenario and write metrics")
    common(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("report", help="re-summarize the CSVs of a previous run")
    p.add_argument("out_dir")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
