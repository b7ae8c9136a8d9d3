"""Command-line front end.

    ksforced run <config>               single run: diagnostics.csv, snapshots/
    ksforced sweep <config>             critical-mass sweep: sweep.csv
    ksforced smalldata <config>         small-data decay: decay.csv, decay_summary.csv
    ksforced verify-ineq <config>       inequality audits: inequalities.csv
    ksforced verify-semigroup <config>  semigroup checks: semigroup.csv

Exit status: 0 on success, 2 on a configuration error, 3 when a check fails.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .config import ExperimentConfig, parse_config
from .errors import ConfigError, KSError
from .experiments import (
    CHECK_HEADER,
    FOUR_PI,
    INEQ_HEADER,
    STABILITY_HEADER,
    SWEEP_HEADER,
    fit_ratio,
    mass_sweep,
    run_experiment,
    semigroup_checks,
    small_data_experiment,
    verify_inequalities,
)
from .grid import write_snapshot
from .output import emit_csv, write_table

EXIT_OK, EXIT_CONFIG, EXIT_CHECK = 0, 2, 3
SUBCOMMAND_KINDS = {
    "run": "run",
    "sweep": "mass-sweep",
    "smalldata": "small-data",
    "verify-ineq": "verify-inequalities",
    "verify-semigroup": "verify-semigroup",
}
SMALL_DATA_STABILITY = 4.0

log = logging.getLogger("ksforced")


def _cmd_run(cfg: ExperimentConfig, out: Path) -> int:
    traj = run_experiment(cfg)
    emit_csv(traj.records, out / "diagnostics.csv")
    snap_dir = out / "snapshots"
    snap_dir.mkdir(parents=True, exist_ok=True)
    index = []
    for k, s in enumerate(traj.snapshots):
        write_snapshot(snap_dir / f"u_{k:04d}.ksf", s.u)
        write_snapshot(snap_dir / f"v_{k:04d}.ksf", s.v)
        index.append((k, s.t))
    write_table(snap_dir / "index.csv", ("index", "t"), index)
    write_table(
        out / "status.csv",
        ("status", "t_detect", "steps", "quality_warning"),
        [(traj.status, traj.t_detect, len(traj.dts), traj.quality_warning or "")],
    )
    print(f"status {traj.status}" + (f" at t={traj.t_detect:.6g}" if traj.t_detect is not None else ""))
    print(f"{len(traj.dts)} steps, {len(traj.snapshots)} snapshots -> {out}")
    if traj.quality_warning:
        print(f"warning: {traj.quality_warning}")
        return EXIT_CHECK
    return EXIT_OK


def _cmd_sweep(cfg: ExperimentConfig, out: Path) -> int:
    rows = mass_sweep(cfg)
    write_table(out / "sweep.csv", SWEEP_HEADER, [r.values() for r in rows])
    ok = True
    for r in rows:
        line = f"m = {r.mass_over_4pi:g}*4pi: {r.status}"
        if r.t_detect is not None:
            line += f" at t={r.t_detect:.6g}"
        if r.status == "error":
            line += f" ({r.error})"
        print(line)
        if r.status == "error":
            ok = False
        elif r.mass < FOUR_PI and not (r.status == "completed" and r.all_plateau and r.energy_monotone):
            ok = False
    return EXIT_OK if ok else EXIT_CHECK


def _cmd_smalldata(cfg: ExperimentConfig, out: Path) -> int:
    eps = cfg.decay.params.epsilon
    eps_list = [eps, eps / 2] if cfg.decay.compare_half and eps > 0 else [eps]
    reports = [small_data_experiment(cfg, e)[0] for e in eps_list]
    series, summary = [], []
    ok = True
    for rep in reports:
        if rep.completed:
            for t, gu, gv in zip(rep.fit_u.times, rep.fit_u.residuals, rep.fit_v.residuals):
                series.append((rep.epsilon, t, gu, gv))
            consts = (rep.fit_u.c_envelope, rep.fit_u.c_tail, rep.fit_v.c_envelope, rep.fit_v.c_tail)
            ok &= all(math.isfinite(c) for c in consts)
        else:
            consts = (None,) * 4
            ok = False
        summary.append((rep.epsilon, rep.status, rep.t_detect, *rep.norms, *consts))
        print(f"epsilon {rep.epsilon:g}: {rep.status}; C_u = {consts[0]}, C_v = {consts[2]}")
    if len(reports) == 2 and all(r.completed for r in reports):
        ratio = fit_ratio(reports[0].fit_u.c_envelope, reports[1].fit_u.c_envelope)
        print(f"C_u ratio under epsilon -> epsilon/2: {ratio:.4g}")
        ok &= ratio <= SMALL_DATA_STABILITY
    write_table(out / "decay.csv", ("epsilon", "t", "g_u", "g_v"), series)
    write_table(
        out / "decay_summary.csv",
        (
            "epsilon",
            "status",
            "t_detect",
            "u0_lq0",
            "grad_v0_ltheta",
            "f_sup_lq0",
            "c_u_envelope",
            "c_u_tail",
            "c_v_envelope",
            "c_v_tail",
        ),
        summary,
    )
    return EXIT_OK if ok else EXIT_CHECK


def _cmd_ineq(cfg: ExperimentConfig, out: Path) -> int:
    res = verify_inequalities(cfg)
    write_table(
        out / "inequalities.csv",
        INEQ_HEADER,
        [(r.name, r.samples, r.worst_ratio, r.violated) for r in res.reports],
    )
    write_table(out / "ineq_stability.csv", STABILITY_HEADER, res.stability)
    for r in res.reports:
        print(r.summary())
    for name, n, c, change, stable in res.stability:
        if change is not None:
            print(f"{name} at {n}^2: C = {c:.6g}, change {change:.3%} [{'stable' if stable else 'UNSTABLE'}]")
    return EXIT_OK if res.passed else EXIT_CHECK


def _cmd_semigroup(cfg: ExperimentConfig, out: Path) -> int:
    rows = semigroup_checks(cfg)
    write_table(out / "semigroup.csv", CHECK_HEADER, rows)
    ok = True
    for name, value, threshold, passed in rows:
        verdict = "" if passed is None else (" ok" if passed else " FAIL")
        print(f"{name}: {value:.6g}{verdict}")
        ok &= passed is not False
    return EXIT_OK if ok else EXIT_CHECK


COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "smalldata": _cmd_smalldata,
    "verify-ineq": _cmd_ineq,
    "verify-semigroup": _cmd_semigroup,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ksforced", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("config", type=Path)
        p.add_argument("--output-dir", type=Path, default=None, help="overrides output_dir in the config")
        p.add_argument("--seed", type=int, default=None, help="overrides seed in the config")
        p.add_argument("--threads", type=int, default=None, help="worker threads for sweep rows and audits")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def load(args) -> ExperimentConfig:
    cfg = parse_config(args.config)
    expected = SUBCOMMAND_KINDS[args.command]
    if cfg.kind is not None and cfg.kind != expected:
        raise ConfigError("kind", f"config is for {cfg.kind!r} but the {args.command!r} command was used")
    cfg = replace(cfg, kind=expected)
    if args.output_dir is not None:
        cfg = replace(cfg, output_dir=args.output_dir)
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError("--seed", "must be an unsigned 64-bit integer")
        cfg = replace(cfg, seed=args.seed)
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError("--threads", "must be >= 1")
        cfg = replace(cfg, threads=args.threads)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (KSError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
