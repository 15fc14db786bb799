"""End-to-end experiment drivers shared by the CLI and the test suite.

Each driver returns plain dataclasses/arrays so callers can either dump
them to CSV (command line) or assert on them (tests).  Wall-clock times
are measured around the time-stepping loop only — basis construction
and I/O are excluded — and averaged over the requested replicas.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .basis import (PodBasis, SvdResult, build_gpod, build_lopod, build_lpod,
                    projection_error, truncated_svd)
from .config import ExperimentConfig
from .errors import ConfigError, RomboxError
from .fom import FomModel, fom_1d, fom_2d, gaussian_ic_1d, three_gaussian_ic_2d
from .grids import grid_1d, grid_2d
from .integrators import IntegratorSpec, StateVector, Trajectory, integrate
from .kernels import kernel_for
from .metrics import (energy_rate_relative, energy_series, error_series,
                      gradient_error_series, interp_periodic, match_times,
                      window_mean)
from .rom import RomModel, galerkin_project, reconstruct_trajectory, run_rom
from .snapshots import (SnapshotSet, assemble_local, assemble_local_overlap,
                        build_layout, snapshot_set_from_trajectory)

LOCAL_METHODS = ("lpod", "lopod")


def _timed(run, replicas: int):
    """Call ``run`` ``replicas`` times; (last result, mean seconds)."""
    total = 0.0
    result = None
    for _ in range(max(1, replicas)):
        start = time.perf_counter()
        result = run()
        total += time.perf_counter() - start
    return result, total / max(1, replicas)


def _worker_count(n_jobs: int) -> int:
    env = os.environ.get("ROMBOX_THREADS", "").strip()
    if env:
        return max(1, min(n_jobs, int(env)))
    return max(1, min(n_jobs, os.cpu_count() or 1))


# ---------------------------------------------------------------------------
# Full-order runs


@dataclass
class FomRun:
    """A timed full-order solve plus its labeled snapshot set."""

    model: FomModel
    trajectory: Trajectory
    snapshots: SnapshotSet
    seconds: float
    replicas: int


def build_fom(config: ExperimentConfig) -> tuple[FomModel, StateVector]:
    """Instantiate the configured full-order model and initial state."""
    if config.case == "adv1d":
        grid = grid_1d(config.n, config.length)
        return fom_1d(grid, c=config.c), gaussian_ic_1d(grid)
    grid = grid_2d(config.nx, config.ny, config.lx, config.ly)
    return fom_2d(grid, nu=config.nu), three_gaussian_ic_2d(grid)


def run_fom(config: ExperimentConfig, replicas: int = 1) -> FomRun:
    """Run the full-order model and label snapshots by split window."""
    model, ic = build_fom(config)
    spec = IntegratorSpec(dt=config.dt, t_end=config.t_end, scheme="rk4",
                          snapshot_stride=config.stride)
    traj, seconds = _timed(lambda: integrate(model.rhs_matrix, ic, spec),
                           replicas)
    snaps = snapshot_set_from_trajectory(
        traj, model.grid, config.dt, config.stride,
        train_end=config.train_end, val_end=config.val_end,
        val_start=config.val_start)
    return FomRun(model=model, trajectory=traj, snapshots=snaps,
                  seconds=seconds, replicas=replicas)


def record_spacing(config: ExperimentConfig) -> float:
    """Time between stored snapshot columns."""
    return config.dt * config.stride


def stride_for(spacing: float, dt: float) -> int:
    """Recording stride that lands steps of ``dt`` on snapshot times.

    Either ``dt`` divides the snapshot spacing (record every
    spacing/dt-th step) or it is a whole multiple of it (record every
    step; comparisons then use every dt/spacing-th snapshot).
    """
    ratio = spacing / dt
    stride = int(round(ratio))
    if stride >= 1 and abs(ratio - stride) <= 1.0e-9 * ratio:
        return stride
    inverse = int(round(1.0 / ratio))
    if inverse >= 1 and abs(1.0 / ratio - inverse) <= 1.0e-9 * inverse:
        return 1
    raise ConfigError(
        f"step size {dt} is incommensurate with snapshot spacing {spacing}")


# ---------------------------------------------------------------------------
# Basis construction


def resolve_modes(method: str, subdomains, modes, rank):
    """Per-subdomain mode count from either ``modes`` or a total ``rank``."""
    if method == "gpod":
        return None
    if modes is not None:
        return modes
    if rank is None:
        raise ConfigError(f"method {method!r} needs 'modes' or 'rank'")
    n_sub = int(np.prod(subdomains))
    if rank % n_sub:
        raise ConfigError(
            f"rank {rank} is not a multiple of the {n_sub} subdomains")
    return rank // n_sub


def build_basis(snapshots: SnapshotSet, method: str, subdomains=None,
                modes: int | None = None, rank: int | None = None,
                svd: SvdResult | None = None) -> PodBasis:
    """Build the requested basis variant from the training split."""
    X = snapshots.columns("train")
    grid = snapshots.grid
    if method == "gpod":
        return build_gpod(X, X.shape[1] if rank is None else rank, grid)
    if method not in LOCAL_METHODS:
        raise ConfigError(f"unknown basis method {method!r}")
    if subdomains is None:
        raise ConfigError(f"method {method!r} needs subdomain counts")
    q = resolve_modes(method, subdomains, modes, rank)
    if method == "lpod":
        layout = build_layout(grid, subdomains, "nonoverlap")
        local = assemble_local(X, layout)
        return build_lpod(local, q, svd=svd)
    layout = build_layout(grid, subdomains, "overlap")
    local = assemble_local_overlap(X, layout, kernel_for(layout))
    return build_lopod(local, q, kernel=kernel_for(layout), svd=svd)


# ---------------------------------------------------------------------------
# Reduced runs and their metrics


@dataclass
class RomRun:
    """A timed reduced solve with reconstructed full states (rows)."""

    model: RomModel
    trajectory: Trajectory
    states: np.ndarray
    seconds: float
    replicas: int

    @property
    def times(self) -> np.ndarray:
        return self.trajectory.times

    @property
    def stable(self) -> bool:
        return self.trajectory.stable


def run_reduced(basis: PodBasis, fom: FomModel, state0: StateVector, *,
                dt: float, t_end: float, integrator: str = "rk4",
                stride: int = 1, replicas: int = 1,
                model: RomModel | None = None) -> RomRun:
    """Project, integrate and reconstruct; timing covers stepping only."""
    if model is None:
        model = galerkin_project(basis, fom)
    spec = IntegratorSpec(dt=dt, t_end=t_end, scheme=integrator,
                          snapshot_stride=stride)
    traj, seconds = _timed(lambda: run_rom(model, state0, spec), replicas)
    states = reconstruct_trajectory(model, traj)
    return RomRun(model=model, trajectory=traj, states=states,
                  seconds=seconds, replicas=replicas)


@dataclass
class RunMetrics:
    """Per-snapshot-time diagnostics of a reduced run vs the reference."""

    times: np.ndarray
    solution_error: np.ndarray
    rom_error: np.ndarray
    projection_error: np.ndarray
    energy: np.ndarray
    energy_rate: np.ndarray
    gradient_error: np.ndarray | None
    stable: bool

    def table(self):
        header = ["time", "solution_error", "rom_error", "projection_error",
                  "energy", "energy_rate"]
        columns = [self.times, self.solution_error, self.rom_error,
                   self.projection_error, self.energy, self.energy_rate]
        if self.gradient_error is not None:
            header.append("gradient_error")
            columns.append(self.gradient_error)
        header.append("stable")
        columns.append(np.full(self.times.size, int(self.stable)))
        rows = list(zip(*columns)) if self.times.size else []
        return header, rows

    def mean_solution_error(self, t_min=None, t_max=None) -> float:
        return window_mean(self.times, self.solution_error, t_min, t_max)

    def mean_gradient_error(self, t_min=None, t_max=None) -> float:
        if self.gradient_error is None:
            raise ConfigError("gradient error is only defined on 2D grids")
        return window_mean(self.times, self.gradient_error, t_min, t_max)


def rom_metrics(run: RomRun, snapshots: SnapshotSet) -> RunMetrics:
    """Error decomposition, energy and (2D) gradient error per time."""
    ia, ib = match_times(run.times, snapshots.times)
    times = run.times[ia]
    states = run.states[ia]
    reference = snapshots.data[:, ib].T
    errors = error_series(run.model.basis, times, states, reference)
    energy = energy_series(run.trajectory.states[ia], run.model.basis.grid,
                           gram_matrix=run.model.basis.gram_matrix)
    rate = np.array([energy_rate_relative(run.model.rhs_matrix, a)
                     for a in run.trajectory.states[ia]])
    gradient = None
    if snapshots.grid.ndim == 2:
        gradient = gradient_error_series(states, reference, snapshots.grid)
    return RunMetrics(times=times, solution_error=errors.solution,
                      rom_error=errors.rom, projection_error=errors.projection,
                      energy=energy, energy_rate=rate,
                      gradient_error=gradient, stable=run.stable)


# ---------------------------------------------------------------------------
# Coarse full-order comparison


@dataclass
class CoarseRun:
    """A coarse full-order solve prolonged onto the reference grid."""

    run: FomRun
    states: np.ndarray
    seconds: float

    @property
    def times(self) -> np.ndarray:
        return self.run.trajectory.times

    @property
    def stable(self) -> bool:
        return self.run.trajectory.stable


def coarse_config(config: ExperimentConfig, factor: int,
                  dt: float) -> ExperimentConfig:
    """The same case on a ``factor``-times coarser grid and new ``dt``."""
    if factor < 2:
        raise ConfigError("coarsening factor must be at least 2")
    updates = {"dt": dt, "stride": stride_for(record_spacing(config), dt)}
    if config.case == "adv1d":
        if config.n % factor:
            raise ConfigError(f"n={config.n} not divisible by factor {factor}")
        updates["n"] = config.n // factor
    else:
        if config.nx % factor or config.ny % factor:
            raise ConfigError(
                f"{config.nx}x{config.ny} not divisible by factor {factor}")
        updates["nx"] = config.nx // factor
        updates["ny"] = config.ny // factor
    return replace(config, **updates)


def run_coarse(config: ExperimentConfig, fine_grid, factor: int | None = None,
               dt: float | None = None, replicas: int = 1) -> CoarseRun:
    """Solve on the coarser grid and interpolate states to ``fine_grid``."""
    factor = config.coarse_factor if factor is None else factor
    dt = (config.coarse_dt or config.dt) if dt is None else dt
    if factor is None:
        raise ConfigError("no coarsening factor configured")
    run = run_fom(coarse_config(config, factor, dt), replicas=replicas)
    states = np.array([interp_periodic(s, run.model.grid, fine_grid)
                       for s in run.trajectory.states])
    return CoarseRun(run=run, states=states, seconds=run.seconds)


def coarse_metrics(coarse: CoarseRun, snapshots: SnapshotSet) -> RunMetrics:
    """Fine-grid error/energy series of a prolonged coarse run.

    There is no basis here, so the rom/projection decomposition and the
    energy rate are reported as zero; solution error, energy and (2D)
    gradient error are the meaningful columns.
    """
    ia, ib = match_times(coarse.times, snapshots.times)
    times = coarse.times[ia]
    states = coarse.states[ia]
    reference = snapshots.data[:, ib].T
    norms = np.linalg.norm(reference, axis=1)
    solution = np.linalg.norm(states - reference, axis=1) / norms
    energy = energy_series(states, snapshots.grid)
    gradient = None
    if snapshots.grid.ndim == 2:
        gradient = gradient_error_series(states, reference, snapshots.grid)
    zero = np.zeros_like(solution)
    return RunMetrics(times=times, solution_error=solution, rom_error=zero,
                      projection_error=zero, energy=energy, energy_rate=zero,
                      gradient_error=gradient, stable=coarse.stable)


# ---------------------------------------------------------------------------
# Sweeps


def _sweep_parallel(jobs, worker):
    """Run ``worker`` over ``jobs`` concurrently, keeping job order."""
    if len(jobs) <= 1 or _worker_count(len(jobs)) == 1:
        return [worker(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=_worker_count(len(jobs))) as pool:
        return list(pool.map(worker, jobs))


SWEEP_HEADER = ["method", "subdomains", "modes", "rank", "dt",
                "train_error", "validation_error", "solution_error",
                "stable", "status", "detail"]


def _sweep_row(method, subdomains="", modes="", rank="", dt="",
               train_error="", validation_error="", solution_error="",
               stable="", status="ok", detail=""):
    return [method, subdomains, modes, rank, dt, train_error,
            validation_error, solution_error, stable, status, detail]


def _format_counts(subdomains) -> str:
    if subdomains is None:
        return ""
    if np.isscalar(subdomains):
        return str(int(subdomains))
    return "x".join(str(int(c)) for c in subdomains)


def _projection_rows(snapshots, method, counts, mode_values):
    """Train/validation projection errors for one (method, layout) pair.

    The singular value decomposition is computed once at the largest
    requested mode count and sliced for the smaller ones.
    """
    X_train = snapshots.columns("train")
    X_val = snapshots.columns("validation")
    grid = snapshots.grid
    rows = []
    try:
        if method == "lpod":
            layout = build_layout(grid, counts, "nonoverlap")
            local = assemble_local(X_train, layout)
        else:
            layout = build_layout(grid, counts, "overlap")
            local = assemble_local_overlap(X_train, layout, kernel_for(layout))
        svd = truncated_svd(local.values, min(max(mode_values),
                                              *local.values.shape))
    except RomboxError as exc:
        return [_sweep_row(method, _format_counts(counts), q,
                           status="error", detail=str(exc))
                for q in mode_values]
    for q in mode_values:
        try:
            if method == "lpod":
                basis = build_lpod(local, q, svd=svd)
            else:
                basis = build_lopod(local, q, kernel=kernel_for(layout),
                                    svd=svd)
            train = projection_error(basis, X_train).mean
            val = projection_error(basis, X_val).mean
            rows.append(_sweep_row(method, _format_counts(counts), q,
                                   basis.r, train_error=train,
                                   validation_error=val))
        except RomboxError as exc:
            rows.append(_sweep_row(method, _format_counts(counts), q,
                                   status="error", detail=str(exc)))
    return rows


def sweep_subdomains(config: ExperimentConfig,
                     snapshots: SnapshotSet) -> list[list]:
    """Projection-error grid over subdomain counts and mode counts."""
    sweep = config.sweep
    methods = sweep.methods or LOCAL_METHODS
    mode_values = sweep.modes or (config.rom.modes,)
    jobs = [(m, (i,) * config.ndim) for m in methods for i in sweep.subdomains]
    results = _sweep_parallel(
        jobs, lambda job: _projection_rows(snapshots, job[0], job[1],
                                           mode_values))
    return [row for rows in results for row in rows]


def sweep_modes(config: ExperimentConfig,
                snapshots: SnapshotSet) -> list[list]:
    """Projection-error grid over mode counts at the configured layout."""
    sweep = config.sweep
    methods = sweep.methods or LOCAL_METHODS
    counts = config.rom.subdomains
    if counts is None:
        raise ConfigError("mode sweep needs rom.subdomains")
    results = _sweep_parallel(
        list(methods),
        lambda method: _projection_rows(snapshots, method, counts,
                                        sweep.modes))
    return [row for rows in results for row in rows]


def sweep_dt(config: ExperimentConfig, snapshots: SnapshotSet,
             fom: FomModel) -> list[list]:
    """Reduced-run stability/error grid over time-step sizes."""
    sweep = config.sweep
    methods = sweep.methods or (config.rom.method,)
    state0 = snapshots.initial_state()
    spacing = record_spacing(config)
    t_end = config.rom.t_end or config.t_end
    rows = []
    for method in methods:
        try:
            basis = build_basis(snapshots, method, config.rom.subdomains,
                                config.rom.modes, config.rom.rank)
            model = galerkin_project(basis, fom)
        except RomboxError as exc:
            rows.extend(_sweep_row(method, dt=dt, status="error",
                                   detail=str(exc)) for dt in sweep.dts)
            continue
        for dt in sweep.dts:
            try:
                run = run_reduced(basis, fom, state0, dt=dt, t_end=t_end,
                                  integrator=config.rom.integrator,
                                  stride=stride_for(spacing, dt), model=model)
                metrics = rom_metrics(run, snapshots)
                err = (metrics.mean_solution_error()
                       if metrics.times.size else float("nan"))
                local = method in LOCAL_METHODS
                rows.append(_sweep_row(
                    method,
                    _format_counts(config.rom.subdomains) if local else "",
                    (config.rom.modes or "") if local else "", basis.r, dt,
                    solution_error=err, stable=int(run.stable)))
            except RomboxError as exc:
                rows.append(_sweep_row(method, dt=dt, status="error",
                                       detail=str(exc)))
    return rows


def run_sweep(config: ExperimentConfig, snapshots: SnapshotSet,
              fom: FomModel | None = None) -> tuple[list[str], list[list]]:
    """Dispatch on the configured sweep kind; (header, rows)."""
    if config.sweep is None:
        raise ConfigError("configuration has no [sweep] section")
    kind = config.sweep.kind
    if kind == "subdomains":
        return SWEEP_HEADER, sweep_subdomains(config, snapshots)
    if kind == "modes":
        return SWEEP_HEADER, sweep_modes(config, snapshots)
    if fom is None:
        raise ConfigError("dt sweep needs the full-order model")
    return SWEEP_HEADER, sweep_dt(config, snapshots, fom)
