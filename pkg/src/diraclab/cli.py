"""Command-line front end: ``diraclab simulate|classify|sweep|hjlimit|preset``."""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from . import scenarios
from .config import ConfigError, RunConfig, load_config, to_text, with_overrides
from .criteria import ClassifierTolerances, classify_initial
from .hjlimit import HJError, extinction_duration_bounds, hj_simulate
from .model import ConcavityConstants, ModelError
from .solver import SolverError, Trajectory, run

logger = logging.getLogger("diraclab")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

TRAJECTORY_HEADER = "t,rho,I,xbar,umax,J"


def _fmt(x) -> str:
    # shortest round-trip decimal, locale independent
    return repr(float(x))


def trajectory_csv(traj: Trajectory) -> str:
    cols = (traj.times, traj.rho, traj.I, traj.xbar, traj.umax, traj.J)
    rows = [TRAJECTORY_HEADER]
    rows += [",".join(map(_fmt, row)) for row in zip(*cols)]
    return "\n".join(rows) + "\n"


def snapshots_csv(traj: Trajectory, x: np.ndarray) -> str:
    rows = ["t,x,n"]
    for t, n in traj.snapshots:
        ts = _fmt(t)
        rows += [f"{ts},{_fmt(xi)},{_fmt(ni)}" for xi, ni in zip(x, n)]
    return "\n".join(rows) + "\n"


def write_atomic(files: dict[str, str]) -> None:
    """Write every ``path -> text`` pair, renaming into place only once all succeed."""
    staged = []
    try:
        for path, text in files.items():
            directory = os.path.dirname(os.path.abspath(path))
            os.makedirs(directory, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
            staged.append((tmp, path))
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        for tmp, path in staged:
            os.replace(tmp, path)
    finally:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)


def _out_dir(args, cfg: RunConfig) -> str:
    return args.out or cfg.out_dir or os.environ.get("DIRACLAB_OUT") or "."


def _load(args) -> RunConfig:
    if bool(args.config) == bool(args.preset):
        raise ConfigError("give exactly one of --config PATH or --preset ID")
    if args.preset:
        try:
            cfg = scenarios.preset(args.preset)
        except KeyError as exc:
            raise ConfigError(exc.args[0]) from None
        cfg = with_overrides(cfg, args.set)
    else:
        cfg = load_config(args.config, args.set)
    if getattr(args, "snapshots", None) is not None:
        if args.snapshots < 0:
            raise ConfigError("--snapshots must be >= 0")
        cfg = replace(cfg, solver=replace(cfg.solver, snapshot_stride=args.snapshots))
    return cfg


# commands -----------------------------------------------------------------

def cmd_simulate(args) -> int:
    cfg = _load(args)
    traj = run(cfg.solver, cfg.schedule, cfg.ic, renormalize=cfg.renormalize)
    out = _out_dir(args, cfg)
    files = {os.path.join(out, f"{cfg.name}.csv"): trajectory_csv(traj)}
    if traj.snapshots:
        files[os.path.join(out, f"{cfg.name}_snapshots.csv")] = snapshots_csv(traj, cfg.grid.x)
    write_atomic(files)
    for path in files:
        print(path)
    return EXIT_OK


def cmd_classify(args) -> int:
    cfg = _load(args)
    verdict = classify_initial(cfg.ic, cfg.model, cfg.solver.eps, cfg.grid,
                               ClassifierTolerances(margin=cfg.margin))
    print(json.dumps(verdict.to_dict()))
    return EXIT_OK


def burn_in_periods(cfg: RunConfig, period: float) -> int:
    by_time = math.ceil(cfg.sweep.min_burn_in_time / period - 1e-9)
    return max(cfg.sweep.burn_in_periods, by_time)


def sweep_member(cfg: RunConfig, period: float) -> tuple[float, float, float, bool]:
    """``(T, mean_rho, min_rho, extinct)`` for one switching period.

    The mean is taken over the last full period after burn-in; the minimum
    (and hence the extinction flag) over the whole run.
    """
    periods = burn_in_periods(cfg, period)
    member = scenarios.with_period(cfg, period, periods)
    traj = run(member.solver, member.schedule, member.ic, renormalize=cfg.renormalize)
    start = periods * period
    last = traj.times >= start - 1e-9 * period
    mean = float(np.trapezoid(traj.rho[last], traj.times[last]) / period)
    low = float(traj.rho[1:].min()) if len(traj) > 1 else float(traj.rho[0])
    threshold = cfg.sweep.extinct_below
    if threshold is None:
        threshold = cfg.solver.eps
    return period, mean, low, low < threshold


def _sweep_row(cfg: RunConfig, period: float):
    try:
        return sweep_member(cfg, period), None
    except (SolverError, ValueError, ModelError) as exc:
        return (period, math.nan, math.nan, None), str(exc)


def available_cores() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def sweep_csv(rows) -> str:
    lines = ["T,mean_rho,min_rho,extinct"]
    for T, mean, low, extinct in rows:
        flag = "nan" if extinct is None else ("true" if extinct else "false")
        lines.append(f"{_fmt(T)},{_fmt(mean)},{_fmt(low)},{flag}")
    return "\n".join(lines) + "\n"


def cmd_sweep(args) -> int:
    cfg = _load(args)
    if args.param != "T":
        raise ConfigError(f"--param {args.param}: only the period T can be swept")
    if cfg.schedule.period is None:
        raise ConfigError("[schedule] sweeps need a periodic schedule")
    if args.values:
        try:
            values = [float(v) for v in args.values.split(",") if v.strip()]
        except ValueError:
            raise ConfigError(f"--values {args.values!r}: expected comma-separated numbers") from None
    else:
        values = list(cfg.sweep.values)
    if not values or any(not v > 0 for v in values):
        raise ConfigError("sweep needs positive period values")
    jobs = args.jobs or available_cores()
    if jobs > 1 and len(values) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(values))) as pool:
            results = list(pool.map(_sweep_row, [cfg] * len(values), values))
    else:
        results = [_sweep_row(cfg, v) for v in values]
    failed = [(row[0], err) for row, err in results if err]
    for T, err in failed:
        print(f"sweep member T={T!r} failed: {err}", file=sys.stderr)
    path = os.path.join(_out_dir(args, cfg), f"{cfg.name}_sweep.csv")
    write_atomic({path: sweep_csv([row for row, _ in results])})
    print(path)
    return EXIT_NUMERIC if failed else EXIT_OK


def concavity_for(cfg: RunConfig, model, x0: float, x1: float) -> ConcavityConstants | None:
    """Curvature constants of ``R`` between ``x0`` and ``x1`` and of ``u0``."""
    xs = np.linspace(min(x0, x1), max(x0, x1), 201)
    half = -np.asarray(model.D2_R(xs), dtype=float) / 2 * np.ones_like(xs)
    if not half.min() > 0:
        return None
    L1 = cfg.hj.M0 / 2
    return ConcavityConstants(float(half.max()), float(half.min()), L1, L1)


def hj_report(cfg: RunConfig) -> tuple[dict, object]:
    hj = cfg.hj
    traj = hj_simulate(cfg.schedule, hj.x0, hj.M0, hj.t_end, hj.dt)
    model = cfg.model
    bounds = None
    if model.a(hj.x0) < 0:
        try:
            rough = extinction_duration_bounds(model, hj.x0, ConcavityConstants(1, 1, 1, 1))
            constants = concavity_for(cfg, model, hj.x0, rough.x_end)
            if constants is not None:
                b = extinction_duration_bounds(model, hj.x0, constants)
                bounds = {"lower": b.lower, "upper": b.upper, "A1": b.A1, "A2": b.A2,
                          "x_end": b.x_end}
        except HJError as exc:
            logger.info("no duration bounds: %s", exc)
    recovery = traj.first_event("recovery")
    closure = traj.first_event("closure_recovery")
    report = {
        "name": cfg.name,
        "x0": hj.x0,
        "M0": hj.M0,
        "T_bar": recovery["t"] if recovery else None,
        "closure_recovery_time": closure["t"] if closure else None,
        "bounds": bounds,
        "events": traj.events,
    }
    return report, traj


def hj_csv(traj, psi) -> str:
    lines = [TRAJECTORY_HEADER + ",source,M,phase"]
    for t, x, M, I, phase, w in zip(traj.t, traj.xbar, traj.M, traj.I, traj.phase, traj.w):
        rho = I / float(psi(np.array([x]))[0])
        lines.append(",".join([_fmt(t), _fmt(rho), _fmt(I), _fmt(x), _fmt(w), "nan",
                               "hj", _fmt(M), phase]))
    return "\n".join(lines) + "\n"


def cmd_hjlimit(args) -> int:
    cfg = _load(args)
    report, traj = hj_report(cfg)
    out = _out_dir(args, cfg)
    csv_path = os.path.join(out, f"{cfg.name}_hj.csv")
    json_path = os.path.join(out, f"{cfg.name}_hj.json")
    write_atomic({csv_path: hj_csv(traj, cfg.solver.psi),
                  json_path: json.dumps(report, indent=2) + "\n"})
    for event in traj.events:
        if event["kind"] == "switch":
            logger.warning("phase flip to %s at t = %r", event["phase"], event["t"])
    print(json.dumps(report))
    return EXIT_OK


def cmd_preset(args) -> int:
    if args.action == "list":
        for pid in scenarios.PRESET_IDS:
            print(pid)
        return EXIT_OK
    if not args.id:
        raise ConfigError("preset export needs an id")
    try:
        cfg = scenarios.preset(args.id)
    except KeyError as exc:
        raise ConfigError(exc.args[0]) from None
    text = to_text(with_overrides(cfg, args.set))
    if args.out:
        path = os.path.join(args.out, f"{args.id}.ini")
        write_atomic({path: text})
        print(path)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH")
    common.add_argument("--preset", metavar="ID")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config field, e.g. solver.t_end=2")
    common.add_argument("--out", metavar="DIR", help="output directory (default $DIRACLAB_OUT)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="diraclab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("simulate", parents=[common], help="run the PDE solver")
    p.add_argument("--snapshots", type=int, metavar="STRIDE")
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("classify", parents=[common], help="predict the asymptotic fate")
    p.set_defaults(func=cmd_classify)
    p = sub.add_parser("sweep", parents=[common], help="mean population size versus period")
    p.add_argument("--param", default="T")
    p.add_argument("--values", help="comma-separated periods")
    p.add_argument("--jobs", type=int, metavar="N")
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("hjlimit", parents=[common], help="integrate the limit dynamics")
    p.set_defaults(func=cmd_hjlimit)
    p = sub.add_parser("preset", help="list or export presets")
    p.add_argument("action", choices=["list", "export"])
    p.add_argument("id", nargs="?")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--out", metavar="DIR")
    p.set_defaults(func=cmd_preset, verbose=False)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ModelError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, HJError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
