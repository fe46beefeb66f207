"""Command-line interface.

Commands:

* ``lohelab simulate --config cfg.json [--out-dir DIR]`` -- run a scenario,
  write its trajectory CSV and verdict JSON; exits 0 iff every enabled
  assertion passed (``--no-assert`` always exits 0).
* ``lohelab check-ssp --config cfg.json`` -- splitting-consistency report
  for the configured flow/couplings (plus trajectory verification when the
  config asks for it).
* ``lohelab reduce-compare {kuramoto,sphere,lohe-matrix}`` -- side-by-side
  run of a native low-rank model against its tensor embedding.
* ``lohelab sweep --config cfg.json --axis path=lo:hi:count [--axis ...]``
  -- one- or two-axis grid, long-form verdict CSV.
* ``lohelab plot --csv run.csv --out run.svg [--log]`` -- static SVG.

LOHELAB_THREADS controls sweep parallelism (default 1, serial).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ConfigError, ScenarioConfig

__all__ = ["main"]


def _add_common(parser):
    parser.add_argument("--config", required=True, help="scenario config JSON")
    parser.add_argument("--out-dir", default="out", help="output directory")
    parser.add_argument("--seed-override", type=int, default=None)
    parser.add_argument(
        "--assert",
        dest="assert_checks",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="exit nonzero when an enabled check fails",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lohelab", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario and write CSV + verdict")
    _add_common(sim)

    ssp = sub.add_parser("check-ssp", help="splitting-consistency report")
    _add_common(ssp)

    red = sub.add_parser("reduce-compare", help="native model vs tensor embedding")
    red.add_argument("preset", choices=("kuramoto", "sphere", "lohe-matrix"))
    red.add_argument("--out-dir", default="out")
    red.add_argument("--seed-override", type=int, default=None)
    red.add_argument("--horizon", type=float, default=10.0)
    red.add_argument("--dt", type=float, default=1e-3)
    red.add_argument("--threshold", type=float, default=1e-6)
    red.add_argument(
        "--assert", dest="assert_checks", action=argparse.BooleanOptionalAction, default=True
    )

    swp = sub.add_parser("sweep", help="grid over one or two config paths")
    swp.add_argument("--config", required=True)
    swp.add_argument("--axis", action="append", required=True, help="path=lo:hi:count or path=v1,v2")
    swp.add_argument("--out", default="sweep.csv")
    swp.add_argument("--seed-override", type=int, default=None)

    plo = sub.add_parser("plot", help="SVG time series from a trajectory CSV")
    plo.add_argument("--csv", required=True)
    plo.add_argument("--out", required=True)
    plo.add_argument("--log", action="store_true", help="log-scale vertical axis")
    return parser


def _load_config(path, seed_override):
    cfg = ScenarioConfig.load(path)
    if seed_override is not None:
        cfg = cfg.replace(seed=seed_override)
    return cfg, Path(path).resolve().parent


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    from . import harness  # deferred: keeps plot-only usage light

    try:
        if args.command == "simulate":
            cfg, base = _load_config(args.config, args.seed_override)
            verdict, traj = harness.run_simulation(cfg, out_dir=args.out_dir, base_dir=base)
            print(f"{cfg.scenario_id}: {len(traj.records)} records, "
                  f"max norm drift {traj.max_norm_drift:.3e}")
            for name, res in verdict.checks.items():
                print(f"  {name}: {'PASS' if res.passed else 'FAIL'} "
                      f"(measured {res.measured:.3e}, threshold {res.threshold:.3e})")
            if verdict.classification is not None:
                cl = verdict.classification
                print(f"  classification: {cl['verdict']} "
                      f"(residual_max {cl['residual_max']:.3e}, R_final {cl['r_final']:.6f})")
            if verdict.decay is not None:
                print(f"  decay slope: {verdict.decay['slope']:.4f}")
            return 0 if (not args.assert_checks or verdict.all_passed) else 1

        if args.command == "check-ssp":
            cfg, base = _load_config(args.config, args.seed_override)
            report = harness.run_ssp(cfg, out_dir=args.out_dir, base_dir=base)
            for key, entry in sorted(report["couplings"].items()):
                print(f"  word {key or '(rank 0)'}: "
                      f"{'PASS' if entry['passed'] else 'FAIL'} "
                      f"(max residual {entry['max_residual']:.3e})")
            if "split_verify" in report:
                sv = report["split_verify"]
                print(f"  split trajectories: {'PASS' if sv['passed'] else 'FAIL'} "
                      f"(deviation {sv['deviation']:.3e})")
            return 0 if (not args.assert_checks or report["all_passed"]) else 1

        if args.command == "reduce-compare":
            report = harness.run_reduce_compare(
                args.preset,
                seed=args.seed_override or 0,
                horizon=args.horizon,
                dt=args.dt,
                threshold=args.threshold,
                out_dir=args.out_dir,
            )
            print(json.dumps(report, indent=2, sort_keys=True))
            return 0 if (not args.assert_checks or report["passed"]) else 1

        if args.command == "sweep":
            cfg, _ = _load_config(args.config, args.seed_override)
            out = harness.run_sweep(cfg, args.axis, args.out)
            print(f"wrote {out}")
            return 0

        if args.command == "plot":
            from . import plotting

            out = plotting.plot_timeseries(args.csv, args.out, logscale=args.log)
            print(f"wrote {out}")
            return 0
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
