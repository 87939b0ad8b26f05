"""Command-line front end.

Subcommands:
  run <cfg> --out <dir>   simulate a scenario file, write artifacts
  soc --out <dir>         simulate the bundled benchmark
  compare <cfg>           run triggered and baseline modes, print savings
  check <cfg>             verify declared objective bounds, print report

A run directory holds trace.csv, events.csv, metrics.json, and
config_echo (the parsed scenario re-serialized, with any random start
resolved). Mode "both" adds a baseline/ subdirectory with the reference
run and folds its broadcast counts into the main metrics.json.

Exit codes: 0 success, 1 usage, 2 bad config (parse or validation,
including unreadable files), 3 numerical divergence.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from .engine import (
    NumericalDivergenceError,
    SimConfig,
    run,
    run_baseline,
    write_events_csv,
    write_trace_csv,
)
from .metrics import build_report, communication_stats
from .objectives import check_assumptions
from .scenario import (
    ParseError,
    ValidationError,
    dump_scenario,
    load_scenario,
    soc_scenario,
)

__all__ = ["main"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="etdopt",
        description="Event-triggered distributed tracking of time-varying optima.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a scenario file")
    p_run.add_argument("config", help="scenario file path")
    p_run.add_argument("--out", required=True, help="output directory")

    p_soc = sub.add_parser("soc", help="simulate the bundled benchmark")
    p_soc.add_argument("--out", required=True, help="output directory")

    p_cmp = sub.add_parser("compare", help="triggered vs always-broadcast baseline")
    p_cmp.add_argument("config", help="scenario file path")

    p_chk = sub.add_parser("check", help="verify declared objective bounds")
    p_chk.add_argument("config", help="scenario file path")
    return parser


def _emit_run(cfg: SimConfig, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    baseline_trace = None
    if cfg.mode == "baseline":
        trace = run_baseline(cfg)
    else:
        trace = run(cfg)
        if cfg.mode == "both":
            baseline_trace = run_baseline(cfg)

    write_trace_csv(trace, out / "trace.csv")
    write_events_csv(trace, out / "events.csv")
    report = build_report(trace, cfg.objectives, cfg.gains, baseline=baseline_trace)
    report.write_json(out / "metrics.json")
    (out / "config_echo").write_text(dump_scenario(cfg))

    if baseline_trace is not None:
        bdir = out / "baseline"
        bdir.mkdir(exist_ok=True)
        write_trace_csv(baseline_trace, bdir / "trace.csv")
        write_events_csv(baseline_trace, bdir / "events.csv")
        base_report = build_report(baseline_trace, cfg.objectives, cfg.gains)
        base_report.write_json(bdir / "metrics.json")

    final = report.consensus_max[-1]
    print(f"wrote {out}: {trace.records} records, "
          f"{report.broadcast_total} broadcasts, final consensus {final:.3e}")


def _cmd_compare(cfg: SimConfig) -> int:
    triggered = run(cfg)
    baseline = run_baseline(cfg)
    stats = communication_stats(triggered, baseline)
    print("broadcasts per agent (triggered):", stats.per_agent_triggered)
    print("broadcasts per agent (baseline): ", stats.per_agent_baseline)
    print(f"totals: {stats.total_triggered} vs {stats.total_baseline}")
    print(f"broadcast ratio: {stats.ratio:.6f} (savings {stats.savings_percent:.2f}%)")
    for name, trace in (("triggered", triggered), ("baseline", baseline)):
        x = trace.x[-1]
        cons = float(np.linalg.norm(x - x.mean(axis=0), axis=1).max())
        print(f"final consensus error ({name}): {cons:.6f}")
    return 0


def _cmd_check(cfg: SimConfig) -> int:
    times = np.linspace(0.0, cfg.t_end, 34)
    points = [np.full(cfg.dim, v) for v in (-1.0, 0.0, 1.0)]
    grid = [(x, float(t)) for t in times for x in points]
    report = check_assumptions(cfg.objectives, grid)
    print(f"sampled {report.sample_count} (x, t) points")
    print(f"min Hessian eigenvalue: {report.min_hessian_eigenvalue:.6g} "
          f"(declared {report.declared_lambda_min:g})")
    print(f"max ||d/dt grad||: {report.max_grad_time_norm:.6g} "
          f"(declared {report.declared_fbar:g})")
    print(f"max Hessian deviation across agents: {report.max_hessian_deviation:.3g} "
          f"(tolerance {report.hessian_deviation_tol:g})")
    ok = cfg.gains.satisfies_gain_condition(
        report.declared_lambda_min, report.declared_fbar
    )
    rel = "<" if ok else ">="
    print(f"gain floor fbar/lambda_min = {report.gain_floor:g} {rel} k3 = "
          f"{cfg.gains.k3:g}: {'satisfied' if ok else 'VIOLATED'}")
    if report.violations:
        for v in report.violations:
            print(f"violation: {v}")
        return 2
    print("declared bounds hold on the sample grid")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    try:
        if args.command == "run":
            _emit_run(load_scenario(args.config), Path(args.out))
            return 0
        if args.command == "soc":
            _emit_run(soc_scenario(), Path(args.out))
            return 0
        if args.command == "compare":
            return _cmd_compare(load_scenario(args.config))
        if args.command == "check":
            return _cmd_check(load_scenario(args.config))
    except (ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalDivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
