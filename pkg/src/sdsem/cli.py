"""Command-line interface.

Subcommands: validate, simulate, observe, fit, implied-cov, generate.
Every run with file outputs also writes a JSON manifest next to them so
results are auditable and reproducible. Exit codes: 0 success, 1 domain
or validation error, 2 input parse error, 3 numerical divergence.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, engine, generate as gen, lisrel, measurement, metrics, model
from .errors import (DivergenceError, ExhaustedAttemptsError, ParseError,
                     SchemaError, SdsemError, ValidationError)

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_PARSE = 2
EXIT_DIVERGED = 3


def _manifest(command: str, inputs, options: dict, outputs, started) -> None:
    if not outputs:
        return
    doc = {
        "command": command,
        "inputs": [str(p) for p in inputs],
        "options": options,
        "outputs": [str(p) for p in outputs],
        "started": started.isoformat(),
        "finished": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "version": __version__,
    }
    anchor = Path(outputs[0])
    path = anchor.with_suffix(anchor.suffix + ".manifest.json")
    path.write_text(json.dumps(doc, indent=2) + "\n")


def _load(spec_arg: str) -> model.ModelSpec:
    return model.load_spec(model.resolve_spec_path(spec_arg))


def _write_plot_data(traj: engine.Trajectory, path) -> None:
    """Tidy long-format CSV (series, t, value) for external plotting tools."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["series", "t", "value"])
        for j in range(traj.m):
            for t, v in zip(traj.grid, traj.x[:, j]):
                writer.writerow([f"x_{j + 1}", repr(float(t)), repr(float(v))])
        for j in range(traj.n):
            for t, v in zip(traj.grid, traj.y[:, j]):
                writer.writerow([f"y_{j + 1}", repr(float(t)), repr(float(v))])


def cmd_validate(args) -> int:
    spec_path = model.resolve_spec_path(args.spec)
    try:
        model.load_spec(spec_path)
    except ValidationError as exc:
        for violation in exc.report:
            print(violation)
        return EXIT_DOMAIN
    print(f"{spec_path}: valid")
    return EXIT_OK


def _simulate(spec: model.ModelSpec, args) -> engine.Trajectory:
    if spec.dims.m == 0:
        return engine.static_table(spec)
    config = engine.IntegratorConfig(method=args.method, dt=args.dt)
    return engine.simulate(spec, config)


def cmd_simulate(args) -> int:
    started = datetime.datetime.now(datetime.timezone.utc)
    spec = _load(args.spec)
    traj = _simulate(spec, args)
    out = Path(args.out)
    traj.to_csv(out)
    outputs = [out]
    if args.plot_data:
        _write_plot_data(traj, args.plot_data)
        outputs.append(Path(args.plot_data))
    if args.plot:
        from . import plots
        outputs.append(plots.plot_trajectory(traj, args.plot, names=spec.names))
    _manifest("simulate", [args.spec],
              {"method": args.method, "dt": args.dt if args.dt is not None
               else engine.effective_dt(spec, engine.IntegratorConfig(dt=args.dt))},
              outputs, started)
    print(f"wrote {out} ({len(traj.grid)} grid points)")
    return EXIT_OK


def cmd_observe(args) -> int:
    started = datetime.datetime.now(datetime.timezone.utc)
    spec = _load(args.spec)
    if spec.dims.p == 0:
        print("model has no indicators (p = 0); nothing to observe", file=sys.stderr)
        return EXIT_DOMAIN
    traj = _simulate(spec, args)
    obs = measurement.observe(spec, traj, seed=args.seed)
    out = Path(args.out)
    obs.to_csv(out)
    outputs = [out]
    if args.plot:
        from . import plots
        outputs.append(plots.plot_observations(obs, args.plot))
    _manifest("observe", [args.spec],
              {"method": args.method, "dt": args.dt, "seed": args.seed},
              outputs, started)
    print(f"wrote {out} ({obs.p} indicators x {obs.q} times)")
    return EXIT_OK


def _parse_latent(text: str) -> tuple[str, int]:
    kind = text[0]
    if kind not in ("x", "y"):
        raise SchemaError(f"latent selector must start with x or y: {text!r}")
    try:
        index = int(text[1:].lstrip("_")) - 1
    except ValueError as exc:
        raise SchemaError(f"bad latent selector {text!r}") from exc
    if index < 0:
        raise SchemaError(f"latent indices are 1-based: {text!r}")
    return kind, index


def cmd_fit(args) -> int:
    started = datetime.datetime.now(datetime.timezone.utc)
    traj = engine.Trajectory.from_csv(args.sim_csv)
    obs = measurement.ObservationMatrix.from_csv(args.obs_csv)
    pair = metrics.align(traj, obs, indicator=args.indicator - 1,
                         latent=_parse_latent(args.latent))
    report = metrics.basic_fit(pair)
    print(report.to_text(), end="")
    outputs = []
    if args.out:
        report.to_csv(args.out)
        outputs.append(Path(args.out))
    if args.plot:
        from . import plots
        outputs.append(plots.plot_fit(pair, report, args.plot))
    _manifest("fit", [args.sim_csv, args.obs_csv],
              {"indicator": args.indicator, "latent": args.latent},
              outputs, started)
    return EXIT_OK


def cmd_implied_cov(args) -> int:
    started = datetime.datetime.now(datetime.timezone.utc)
    spec = _load(args.spec)
    l = lisrel.to_lisrel(spec)
    implied = lisrel.implied_covariance(l)
    outputs = []
    if args.out:
        lisrel.write_covariance_csv(implied.sigma, l.labels, args.out)
        outputs.append(Path(args.out))
        print(f"wrote {args.out}")
    else:
        np.set_printoptions(precision=6, suppress=True)
        print(implied.sigma)
    _manifest("implied-cov", [args.spec], {}, outputs, started)
    return EXIT_OK


def cmd_generate(args) -> int:
    started = datetime.datetime.now(datetime.timezone.utc)
    config = gen.GeneratorConfig.from_file(args.config) if args.config \
        else gen.GeneratorConfig()
    if args.seed is not None:
        config.seed = args.seed
    systems, summary = gen.batch(config, args.count)
    paths = gen.save_batch(systems, args.out_dir)
    _manifest("generate", [args.config or "<defaults>"],
              {"count": args.count, "seed": config.seed,
               "acceptance_rate": summary.acceptance_rate,
               "rejection_causes": summary.causes},
              [Path(args.out_dir) / "manifest.csv"] + paths, started)
    print(f"accepted {summary.accepted}/{args.count} "
          f"(acceptance rate {summary.acceptance_rate:.3f}) -> {args.out_dir}")
    if summary.failures:
        print(f"failed items: {summary.failures}", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdsem",
        description="Simulate, observe, and score coupled dynamic / static / "
                    "measurement models; compute implied covariances; sample "
                    "random systems.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a model spec file")
    p.add_argument("spec")
    p.set_defaults(func=cmd_validate)

    def add_sim_flags(p):
        p.add_argument("--method", choices=[engine.EULER, engine.RK4],
                       default=engine.RK4)
        p.add_argument("--dt", type=float, default=None)

    p = sub.add_parser("simulate", help="integrate a model over its horizon")
    p.add_argument("spec")
    add_sim_flags(p)
    p.add_argument("--out", default="trajectory.csv")
    p.add_argument("--plot-data", default=None,
                   help="also write tidy long-format CSV (series, t, value)")
    p.add_argument("--plot", default=None, help="also render a PNG figure")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("observe", help="simulate then synthesize indicator data")
    p.add_argument("spec")
    add_sim_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="observations.csv")
    p.add_argument("--plot", default=None, help="also render a PNG figure")
    p.set_defaults(func=cmd_observe)

    p = sub.add_parser("fit", help="score a trajectory against observations")
    p.add_argument("sim_csv")
    p.add_argument("obs_csv")
    p.add_argument("--indicator", type=int, default=1, help="1-based indicator column")
    p.add_argument("--latent", default="x1", help="latent selector, e.g. x1 or y3")
    p.add_argument("--out", default=None, help="write the report as CSV")
    p.add_argument("--plot", default=None, help="also render a PNG figure")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("implied-cov", help="implied indicator covariance of a "
                                           "stockless linear model")
    p.add_argument("spec")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_implied_cov)

    p = sub.add_parser("generate", help="sample random systems from distributions")
    p.add_argument("config", nargs="?", default=None,
                   help="generator config JSON (defaults used when omitted)")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", default="generated")
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except DivergenceError as exc:
        where = f" at t = {exc.time:g}" if exc.time is not None else ""
        print(f"simulation diverged{where}: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except ValidationError as exc:
        for violation in exc.report:
            print(violation, file=sys.stderr)
        return EXIT_DOMAIN
    except (SdsemError, ExhaustedAttemptsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
