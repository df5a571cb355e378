"""Command-line entry points: serve the interactive session, run the
headless metrics harness, or dump a one-shot plan."""

from __future__ import annotations

import argparse
import json
import sys

from .errors import HrcError
from .resources import DEFAULT_SUITE, DEFAULT_TABLE


def _add_serve(sub):
    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--scene", help="scene JSON file")
    p.add_argument("--table", help="stub template table file")
    p.add_argument("--seed", type=int)
    p.add_argument("--error-probability", type=float, dest="error_probability")
    p.add_argument("--realtime", action="store_true", default=None,
                   help="pace execution snapshots at wall-clock rate")
    p.add_argument("--override-dir", dest="override_dir",
                   help="persist/load learned overrides here")
    p.add_argument("--ui-dir", dest="ui_dir", help="static frontend directory")


def _add_run(sub):
    p = sub.add_parser("run", help="run an experiment suite headless")
    p.add_argument("--suite", default=str(DEFAULT_SUITE),
                   help="experiment suite file (JSON or TOML)")
    p.add_argument("--format", choices=("table", "csv"), default="table")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--override-dir", dest="override_dir",
                   help="load learned overrides before running")


def _add_plan(sub):
    p = sub.add_parser("plan", help="plan a command and print it")
    p.add_argument("command")
    p.add_argument("--table", default=str(DEFAULT_TABLE))
    p.add_argument("--error-probability", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true", help="print raw JSON")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="hrcbot")
    sub = parser.add_subparsers(dest="cmd", required=True)
    _add_serve(sub)
    _add_run(sub)
    _add_plan(sub)
    args = parser.parse_args(argv)
    try:
        if args.cmd == "serve":
            return _serve(args)
        if args.cmd == "run":
            return _run(args)
        return _plan(args)
    except HrcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    config = ServiceConfig.load(
        args.config,
        scene=args.scene, table=args.table, seed=args.seed,
        error_probability=args.error_probability,
        realtime=args.realtime, override_dir=args.override_dir,
        ui_dir=args.ui_dir, host=args.host, port=args.port,
    )
    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    return 0


def _run(args) -> int:
    from .correction import OverrideRegistry
    from .metrics import load_suite, render_report, run_suite

    overrides = None
    if args.override_dir:
        overrides = OverrideRegistry()
        overrides.load_dir(args.override_dir)
    rows = run_suite(load_suite(args.suite), overrides=overrides)
    report = render_report(rows, args.format)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(report)
    else:
        print(report, end="")
    return 0


def _plan(args) -> int:
    import numpy as np

    from .planning import StubBackend, build_plan, load_table

    backend = StubBackend(load_table(args.table), args.error_probability)
    plan = build_plan(args.command, backend,
                      rng=np.random.default_rng(args.seed))
    if args.json:
        print(json.dumps(plan.to_dict(), indent=2))
        return 0
    print(f"{plan.command}  [{plan.layer} layer, {plan.total_functions} functions]")
    for sub_ in plan.subtasks:
        if sub_.text is not None:
            print(f"  {sub_.text}:")
        for fn in sub_.functions:
            print(f"    {fn.text()}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
