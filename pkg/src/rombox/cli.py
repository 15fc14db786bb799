"""Command-line front end.

Subcommands mirror the pipeline stages:

* ``fom``    — run the full-order model, store labeled snapshots.
* ``pod``    — build a reduced basis from stored snapshots.
* ``rom``    — integrate a reduced (or coarse full-order) model and
               score it against the stored snapshots.
* ``sweep``  — grids of basis/integration experiments, one CSV row each.
* ``report`` — aggregate run summaries into a comparison table with
               pass/fail tolerance checks.

Every command exits non-zero with a one-line diagnostic on invalid
input; ``report`` additionally fails when required runs are missing or
a tolerance check does not hold.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import replace

from . import experiments as ex
from .basis import load_basis, projection_error, save_basis
from .config import (ExperimentConfig, load_config, preset_config,
                     preset_names)
from .errors import ConfigError, RomboxError
from .grids import Grid1D
from .metrics import energy_series, select_modes_by_threshold, write_csv
from .snapshots import SnapshotSet, load_snapshots, save_snapshots

SUMMARY_HEADER = ["name", "dof", "rank", "dt", "integrator", "seconds",
                  "replicas", "stable", "solution_error", "gradient_error"]

REPORT_METHODS = ("fom", "gpod", "lpod", "lopod", "coarse_fom")

# Default tolerance checks applied by ``report``: mean solution and
# gradient errors of the reference 2D case, as relative half-widths.
DEFAULT_TOLERANCES = (
    ("solution_error", "gpod", 0.267, 0.50),
    ("solution_error", "lpod", 0.0353, 0.30),
    ("solution_error", "lopod", 0.0354, 0.30),
    ("solution_error", "coarse_fom", 0.226, 0.30),
    ("gradient_error", "lpod", 0.213, 0.30),
    ("gradient_error", "lopod", 0.164, 0.30),
)


def _parse_counts(text: str) -> tuple[int, ...]:
    try:
        counts = tuple(int(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise ConfigError(f"bad subdomain counts {text!r}") from None
    if not counts:
        raise ConfigError("empty subdomain counts")
    return counts


def _load_case(args) -> ExperimentConfig | None:
    if getattr(args, "config", None):
        return load_config(args.config)
    if getattr(args, "preset", None):
        return preset_config(args.preset)
    return None


def _derived_config(snaps: SnapshotSet, c: float, nu: float) -> ExperimentConfig:
    """Reconstruct a case description from a stored snapshot set."""
    grid = snaps.grid
    times = snaps.times
    spacing = snaps.dt * snaps.stride
    train = snaps.times_of("train")
    val = snaps.times_of("validation")
    train_end = float(train.max()) if train.size else float(times[-1]) / 2.0
    val_end = float(val.max()) if val.size else float(times[-1])
    val_start = None
    if val.size and snaps.counts()["excluded"]:
        val_start = float(val.min()) - spacing / 2.0
    common = dict(dt=snaps.dt, t_end=float(times[-1]), stride=snaps.stride,
                  train_end=train_end, val_start=val_start, val_end=val_end,
                  c=c, nu=nu)
    if isinstance(grid, Grid1D):
        return ExperimentConfig(case="adv1d", n=grid.n, length=grid.length,
                                **common)
    return ExperimentConfig(case="adv2d", nx=grid.nx, ny=grid.ny,
                            lx=grid.lx, ly=grid.ly, **common)


def _case_for_snapshots(args, snaps: SnapshotSet) -> ExperimentConfig:
    config = _load_case(args)
    if config is None:
        return _derived_config(snaps, getattr(args, "c", 1.0),
                               getattr(args, "nu", 1.0e-3))
    expected = (snaps.grid.n,) if snaps.grid.ndim == 1 else (snaps.grid.nx,
                                                             snaps.grid.ny)
    given = (config.n,) if config.ndim == 1 else (config.nx, config.ny)
    if config.ndim != snaps.grid.ndim or expected != given:
        raise ConfigError(
            f"config grid {given} does not match snapshot grid {expected}")
    return config


def _outdir(args, config: ExperimentConfig | None) -> str:
    out = args.out or (config.outdir if config is not None else None)
    if out is None:
        raise ConfigError("no output directory: pass --out "
                          "or set [output] dir in the config")
    os.makedirs(out, exist_ok=True)
    return out


def _fom_model(config: ExperimentConfig):
    model, _ = ex.build_fom(config)
    return model


def _write_summary(path, rows):
    write_csv(path, SUMMARY_HEADER, rows)


def _summary_row(name, *, dof, rank="", dt, integrator, seconds, replicas,
                 stable, solution_error="", gradient_error=""):
    return [name, dof, rank, dt, integrator, seconds, replicas,
            int(stable), solution_error, gradient_error]


# ---------------------------------------------------------------------------
# Subcommands


def cmd_fom(args) -> int:
    config = _load_case(args)
    if config is None:
        raise ConfigError("fom needs --config FILE or --preset NAME")
    out = _outdir(args, config)
    replicas = args.replicas or config.rom.replicas
    run = ex.run_fom(config, replicas=replicas)
    snap_path = os.path.join(out, "snapshots.rsnp")
    save_snapshots(run.snapshots, snap_path)
    energy = energy_series(run.trajectory.states, run.model.grid)
    write_csv(os.path.join(out, "fom_metrics.csv"), ["time", "energy"],
              list(zip(run.trajectory.times, energy)))
    _write_summary(os.path.join(out, "summary.csv"), [_summary_row(
        "fom", dof=run.model.grid.size, dt=config.dt, integrator="rk4",
        seconds=run.seconds, replicas=replicas,
        stable=run.trajectory.stable)])
    counts = run.snapshots.counts()
    print(f"wrote {snap_path}: "
          + ", ".join(f"{v} {k}" for k, v in counts.items())
          + f"; stepping took {run.seconds:.3f} s (mean of {replicas})")
    return 0


def cmd_pod(args) -> int:
    snaps = load_snapshots(args.snapshots)
    config = _load_case(args)
    out = _outdir(args, config)
    subdomains = _parse_counts(args.subdomains) if args.subdomains else (
        config.rom.subdomains if config is not None else None)
    modes, rank = args.modes, args.rank
    if modes is None and rank is None and config is not None:
        modes, rank = config.rom.modes, config.rom.rank
    basis = ex.build_basis(snaps, args.method, subdomains, modes, rank)
    basis_path = os.path.join(out, "basis.rpod")
    save_basis(basis, basis_path)
    rows = []
    means = {}
    for split in ("train", "validation"):
        errors = projection_error(basis, snaps.columns(split))
        times = snaps.times_of(split)
        rows.extend([split, t, e]
                    for t, e in zip(times, errors.per_snapshot))
        means[split] = errors.mean
    write_csv(os.path.join(out, "projection_errors.csv"),
              ["split", "time", "projection_error"], rows)
    print(f"wrote {basis_path}: {basis.variant} r={basis.r}, "
          f"mean projection error train {means['train']:.3e} / "
          f"validation {means['validation']:.3e}")
    return 0


def _write_run_outputs(out, name, metrics, *, dof, rank, dt, integrator,
                       seconds, replicas):
    header, rows = metrics.table()
    write_csv(os.path.join(out, "metrics.csv"), header, rows)
    sol = metrics.mean_solution_error(0.0) if metrics.times.size > 1 else ""
    grad = ""
    if metrics.gradient_error is not None and metrics.times.size > 1:
        grad = metrics.mean_gradient_error(0.0)
    _write_summary(os.path.join(out, "summary.csv"), [_summary_row(
        name, dof=dof, rank=rank, dt=dt, integrator=integrator,
        seconds=seconds, replicas=replicas, stable=metrics.stable,
        solution_error=sol, gradient_error=grad)])
    flag = "" if metrics.stable else " [UNSTABLE]"
    sol_text = f"{sol:.4f}" if sol != "" else "n/a"
    print(f"{name}: mean solution error {sol_text}, "
          f"stepping {seconds:.3f} s (mean of {replicas}){flag}")


def cmd_rom(args) -> int:
    snaps = load_snapshots(args.snapshots)
    config = _case_for_snapshots(args, snaps)
    out = _outdir(args, config)
    spacing = ex.record_spacing(config)
    t_end = args.t_end or config.rom.t_end or float(snaps.times[-1])
    if args.coarse_factor is not None:
        dt = args.dt or config.coarse_dt or snaps.dt
        replicas = args.replicas or config.coarse_replicas or config.rom.replicas
        coarse = ex.run_coarse(replace(config, t_end=t_end), snaps.grid,
                               factor=args.coarse_factor, dt=dt,
                               replicas=replicas)
        metrics = ex.coarse_metrics(coarse, snaps)
        _write_run_outputs(out, "coarse_fom", metrics,
                           dof=coarse.run.model.grid.size, rank="", dt=dt,
                           integrator="rk4", seconds=coarse.seconds,
                           replicas=replicas)
        return 0
    if not args.basis:
        raise ConfigError("rom needs --basis FILE or --coarse-factor K")
    basis = load_basis(args.basis)
    dt = args.dt or config.rom.dt or snaps.dt
    replicas = args.replicas or config.rom.replicas
    integrator = args.integrator or config.rom.integrator
    model = ex.galerkin_project(basis, _fom_model(config))
    run = ex.run_reduced(basis, model.fom, snaps.initial_state(),
                         dt=dt, t_end=t_end, integrator=integrator,
                         stride=ex.stride_for(spacing, dt),
                         replicas=replicas, model=model)
    metrics = ex.rom_metrics(run, snaps)
    _write_run_outputs(out, basis.variant, metrics, dof=basis.r, rank=basis.r,
                       dt=dt, integrator=integrator, seconds=run.seconds,
                       replicas=replicas)
    return 0


def cmd_sweep(args) -> int:
    config = _load_case(args)
    if config is None:
        raise ConfigError("sweep needs --config FILE or --preset NAME")
    if config.sweep is None:
        raise ConfigError("configuration has no [sweep] section")
    out = _outdir(args, config)
    if args.snapshots:
        snaps = load_snapshots(args.snapshots)
        model = _fom_model(config)
    else:
        fom_run = ex.run_fom(config)
        snaps, model = fom_run.snapshots, fom_run.model
    header, rows = ex.run_sweep(config, snaps, model)
    if not rows:
        print("warning: empty sweep range, nothing to do", file=sys.stderr)
        return 0
    path = os.path.join(out, "sweep.csv")
    write_csv(path, header, rows)
    failed = sum(1 for row in rows if row[-2] != "ok")
    print(f"wrote {path}: {len(rows)} rows ({failed} failed)")
    if config.sweep.kind == "modes" and config.sweep.threshold is not None:
        by_method = {}
        for row in rows:
            if row[-2] == "ok":
                by_method.setdefault(row[0], []).append((row[2], row[6]))
        for method, pairs in sorted(by_method.items()):
            qs, errs = zip(*pairs)
            q_star = select_modes_by_threshold(qs, errs,
                                               config.sweep.threshold)
            print(f"{method}: smallest q with validation error "
                  f"< {config.sweep.threshold:g}: {q_star}")
    return 0


# ---------------------------------------------------------------------------
# Report


def _load_tolerances(path):
    checks = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].startswith("#") or row[0] == "metric":
                continue
            if len(row) != 4:
                raise ConfigError(
                    f"{path}: expected metric,method,target,rel_tol; got {row}")
            checks.append((row[0], row[1], float(row[2]), float(row[3])))
    return tuple(checks)


def _collect_summaries(root):
    rows = {}
    for dirpath, _, files in os.walk(root):
        if "summary.csv" not in files:
            continue
        with open(os.path.join(dirpath, "summary.csv"), newline="") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                rows[row["name"]] = row
    return rows


def cmd_report(args) -> int:
    rows = _collect_summaries(args.dir)
    missing = [name for name in REPORT_METHODS if name not in rows]
    out = args.out or args.dir
    os.makedirs(out, exist_ok=True)
    table = [[name] + [rows[name][k] for k in SUMMARY_HEADER[1:]]
             for name in REPORT_METHODS if name in rows]
    table_path = os.path.join(out, "table1.csv")
    write_csv(table_path, ["method"] + SUMMARY_HEADER[1:], table)
    print(f"wrote {table_path} ({len(table)} methods)")
    for line in table:
        print("  " + " ".join(str(v) for v in line))
    if missing:
        print("missing runs: " + ", ".join(missing), file=sys.stderr)
        return 1
    failures = 0
    checks = (_load_tolerances(args.tolerances) if args.tolerances
              else DEFAULT_TOLERANCES)
    for metric, method, target, rel in checks:
        raw = rows[method].get(metric, "")
        if raw == "":
            print(f"FAIL {method} {metric}: value missing")
            failures += 1
            continue
        value = float(raw)
        ok = abs(value - target) <= rel * target
        print(f"{'PASS' if ok else 'FAIL'} {method} {metric}: "
              f"{value:.4g} vs {target:g} +/- {100 * rel:.0f}%")
        failures += 0 if ok else 1
    chain = ("gpod", "lpod", "lopod", "coarse_fom", "fom")
    secs = [float(rows[name]["seconds"]) for name in chain]
    ordered = all(a < b for a, b in zip(secs, secs[1:]))
    print(f"{'PASS' if ordered else 'FAIL'} timing ordering: expected "
          "gpod < lpod < lopod < coarse_fom < fom, measured "
          + " , ".join(f"{name}={s:.3f}s" for name, s in zip(chain, secs)))
    failures += 0 if ordered else 1
    grad_pair_ok = True
    if rows["lopod"].get("gradient_error") and rows["lpod"].get("gradient_error"):
        grad_pair_ok = (float(rows["lopod"]["gradient_error"])
                        < float(rows["lpod"]["gradient_error"]))
        print(f"{'PASS' if grad_pair_ok else 'FAIL'} "
              "gradient error lopod < lpod")
        failures += 0 if grad_pair_ok else 1
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rombox",
        description="Energy-conserving space-local POD-Galerkin "
                    "reduced-order models for advection problems.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_case(p):
        p.add_argument("--config", help="INI experiment description")
        p.add_argument("--preset", choices=preset_names(),
                       help="built-in experiment description")

    p_fom = sub.add_parser("fom", help="run the full-order model")
    add_case(p_fom)
    p_fom.add_argument("--out", help="output directory")
    p_fom.add_argument("--replicas", type=int,
                       help="timing replicas (default: config)")
    p_fom.set_defaults(func=cmd_fom)

    p_pod = sub.add_parser("pod", help="build a reduced basis")
    p_pod.add_argument("--snapshots", required=True, help="RSNP file")
    p_pod.add_argument("--method", required=True,
                       choices=("gpod", "lpod", "lopod"))
    p_pod.add_argument("--subdomains",
                       help="count I (1D) or Ix,Iy (2D) for local methods")
    p_pod.add_argument("--modes", type=int, help="modes per subdomain")
    p_pod.add_argument("--rank", type=int, help="total basis size")
    add_case(p_pod)
    p_pod.add_argument("--out", help="output directory")
    p_pod.set_defaults(func=cmd_pod)

    p_rom = sub.add_parser("rom", help="integrate a reduced model")
    p_rom.add_argument("--basis", help="RPOD file")
    p_rom.add_argument("--snapshots", required=True, help="RSNP reference")
    p_rom.add_argument("--coarse-factor", type=int,
                       help="run a coarsened full-order model instead")
    p_rom.add_argument("--dt", type=float, help="time step (default: config)")
    p_rom.add_argument("--t-end", type=float, dest="t_end",
                       help="final time (default: snapshot horizon)")
    p_rom.add_argument("--integrator", choices=("rk4", "crank_nicolson", "cn"))
    p_rom.add_argument("--replicas", type=int,
                       help="timing replicas (default: config)")
    p_rom.add_argument("--c", type=float, default=1.0,
                       help="advection speed when no config is given")
    p_rom.add_argument("--nu", type=float, default=1.0e-3,
                       help="diffusivity when no config is given")
    add_case(p_rom)
    p_rom.add_argument("--out", help="output directory")
    p_rom.set_defaults(func=cmd_rom)

    p_sweep = sub.add_parser("sweep", help="run a configured parameter sweep")
    add_case(p_sweep)
    p_sweep.add_argument("--snapshots",
                         help="reuse stored snapshots instead of re-running")
    p_sweep.add_argument("--out", help="output directory")
    p_sweep.set_defaults(func=cmd_sweep)

    p_rep = sub.add_parser("report", help="aggregate run summaries")
    p_rep.add_argument("--dir", required=True,
                       help="directory tree holding summary.csv files")
    p_rep.add_argument("--tolerances",
                       help="CSV of metric,method,target,rel_tol overrides")
    p_rep.add_argument("--out", help="output directory (default: --dir)")
    p_rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "integrator", None) == "cn":
        args.integrator = "crank_nicolson"
    try:
        return args.func(args)
    except RomboxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
