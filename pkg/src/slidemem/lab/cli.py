"""Command-line front end: ``slidemem solve|multistart|sweep|verify|export|catalog``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..config import ConfigError
from . import catalog
from .report import ExportError, RunReport, export, run_scenario, verify
from .scenario import SWEEP_PARAMETERS, Scenario, Study, parse_values

EXIT_PASS, EXIT_FAIL, EXIT_NOT_CONVERGED, EXIT_USAGE, EXIT_IO = 0, 1, 2, 64, 74

log = logging.getLogger("slidemem")


def _load_scenario(ref: str) -> Scenario:
    if ref in catalog.CATALOG:
        return catalog.get(ref)
    path = Path(ref)
    if not path.exists():
        raise ConfigError(f"not a catalog name or readable file (catalog: {', '.join(catalog.names())})", source=ref)
    return Scenario.load(path)


def _print_checks(report: RunReport, stream=sys.stdout) -> None:
    for c in report.checks:
        margin = "" if c.margin is None else f" margin={c.margin:.3e}"
        tag = c.status if c.gating else f"{c.status} (informational)"
        print(f"  {c.name:<20} {tag}{margin}  {c.detail}", file=stream)


def _summarize(report: RunReport) -> None:
    print(f"scenario {report.name} seed={report.seed} solves={len(report.solves)}")
    ms = report.summary.get("multistart")
    if ms:
        for b in ms["buckets"]:
            print(f"  bucket {b['classification']:<15} members={b['members']:<4} s(0)={b['s_at_zero']:.6f}")
        print(f"  not converged: {ms['not_converged']}")
    elif len(report.solves) <= 12:
        for r in report.solves:
            print(
                f"  {r.label:<20} {r.classification:<15} iters={r.iterations:<3} "
                f"residual={r.residual_sup:.2e} s(0)={r.s_at_zero:.6f}"
            )
    _print_checks(report)


def _exit_code(report: RunReport) -> int:
    if not report.all_converged:
        return EXIT_NOT_CONVERGED
    return EXIT_PASS if report.passed else EXIT_FAIL


def _finish(report: RunReport, args) -> int:
    _summarize(report)
    if args.out is not None:
        for path in export(report, args.format, args.out):
            print(f"wrote {path}")
    return _exit_code(report)


def _prepare(args, study: Study | None = None) -> Scenario:
    scenario = _load_scenario(args.scenario)
    if args.seed is not None:
        scenario = scenario.with_seed(args.seed)
    if study is not None:
        scenario = scenario.with_study(study)
    return scenario


def cmd_solve(args) -> int:
    scenario = _prepare(args)
    return _finish(run_scenario(scenario, workers=args.workers), args)


def cmd_multistart(args) -> int:
    scenario = _prepare(args)
    kind = "washout" if scenario.study.kind == "washout" else "multistart"
    scenario = scenario.with_study(Study(kind, n_starts=args.n))
    return _finish(run_scenario(scenario, workers=args.workers), args)


def cmd_sweep(args) -> int:
    scenario = _prepare(args)
    study = Study("sweep", parameter=args.param, values=parse_values(args.values), guess=scenario.study.guess)
    return _finish(run_scenario(scenario.with_study(study), workers=args.workers), args)


def _report_or_run(ref: str, seed: int | None, workers: int) -> RunReport:
    path = Path(ref)
    if path.suffix == ".json" and path.exists():
        report = RunReport.load(path)
        report.checks = verify(report)
        return report
    scenario = _load_scenario(ref)
    if seed is not None:
        scenario = scenario.with_seed(seed)
    return run_scenario(scenario, workers=workers)


def cmd_verify(args) -> int:
    report = _report_or_run(args.scenario, args.seed, args.workers)
    return _finish(report, args)


def cmd_export(args) -> int:
    report = _report_or_run(args.scenario, args.seed, args.workers)
    if args.out is None:
        args.out = Path(".")
    return _finish(report, args)


def cmd_catalog(args) -> int:
    if args.show:
        print(catalog.get(args.show).to_text(), end="")
        return EXIT_PASS
    width = max(len(n) for n in catalog.names())
    for name in catalog.names():
        s = catalog.get(name)
        print(f"{name:<{width}}  {s.study.kind:<10}  {s.description}")
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slidemem",
        description="Periodic solutions of a chemostat with sliding-window fractional memory.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("scenario", help="catalog name or scenario config file")
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        p.add_argument("--out", type=Path, default=None, help="directory for exported files")
        p.add_argument("--format", default="csv,json,svg", help="comma-separated subset of csv,json,svg")
        p.add_argument("--workers", type=int, default=1, help="threads for independent solves")

    p = sub.add_parser("solve", help="run the scenario's study")
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("multistart", help="random-start study on the scenario")
    common(p)
    p.add_argument("--n", type=int, default=100, help="number of starts")
    p.set_defaults(func=cmd_multistart)

    p = sub.add_parser("sweep", help="one solve per parameter value")
    common(p)
    p.add_argument("--param", required=True, choices=SWEEP_PARAMETERS)
    p.add_argument("--values", required=True, help="start:stop:step (inclusive) or a list")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="check a saved report.json, or run and check a scenario")
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("export", help="write csv/json/svg for a report or scenario")
    common(p)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("catalog", help="list built-in scenarios")
    p.add_argument("--show", metavar="NAME", help="print one scenario as a config file")
    p.set_defaults(func=cmd_catalog)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, KeyError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"slidemem: error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except ExportError as exc:
        print(f"slidemem: error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
