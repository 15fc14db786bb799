"""Error, energy, and gradient diagnostics plus small CSV helpers.

Relative errors are plain L2 column ratios.  The solution error of a
reduced run splits exactly (as vectors) into the projection error of the
reference onto the basis span and the in-span integration error; both
parts are reported so basis quality and time-stepping quality can be
told apart.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .basis import PodBasis, projector_apply
from .errors import DimensionError, EmptySelectionError, UndefinedMetricError

_TIME_TOL = 1.0e-9


def relative_error(u: np.ndarray, ref: np.ndarray) -> float:
    """||u - ref|| / ||ref||; undefined for a zero reference."""
    ref = np.asarray(ref, dtype=float)
    den = float(np.linalg.norm(ref))
    if den == 0.0:
        raise UndefinedMetricError("relative error against a zero-norm reference")
    return float(np.linalg.norm(np.asarray(u, dtype=float) - ref)) / den


@dataclass
class ErrorSeries:
    """Per-time relative errors of a reduced run against a reference."""

    times: np.ndarray
    solution: np.ndarray
    rom: np.ndarray
    projection: np.ndarray


def match_times(times_a, times_b, tol: float = _TIME_TOL):
    """Index pairs (ia, ib) where the two sorted time arrays coincide."""
    times_a = np.asarray(times_a, dtype=float)
    times_b = np.asarray(times_b, dtype=float)
    pos = np.searchsorted(times_b, times_a)
    ia, ib = [], []
    for i, p in enumerate(pos):
        for j in (p - 1, p):
            if 0 <= j < times_b.size and abs(times_a[i] - times_b[j]) <= tol:
                ia.append(i)
                ib.append(j)
                break
    return np.asarray(ia, dtype=int), np.asarray(ib, dtype=int)


def error_series(basis: PodBasis, times, states: np.ndarray,
                 reference: np.ndarray) -> ErrorSeries:
    """Decomposed errors of reconstructed states against references.

    ``states`` and ``reference`` hold one full-order state per row, at
    the same times.
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    reference = np.atleast_2d(np.asarray(reference, dtype=float))
    if states.shape != reference.shape:
        raise DimensionError(
            f"state shapes differ: {states.shape} vs {reference.shape}"
        )
    ref_norms = np.linalg.norm(reference, axis=1)
    if np.any(ref_norms == 0.0):
        raise UndefinedMetricError("zero-norm reference state in error series")
    projected = projector_apply(basis, reference.T).T
    solution = np.linalg.norm(states - reference, axis=1) / ref_norms
    projection = np.linalg.norm(projected - reference, axis=1) / ref_norms
    rom = np.linalg.norm(states - projected, axis=1) / ref_norms
    return ErrorSeries(times=np.asarray(times, dtype=float), solution=solution,
                       rom=rom, projection=projection)


def window_mean(times, values, t_min: float | None = None,
                t_max: float | None = None) -> float:
    """Mean over the half-open window (t_min, t_max]; NaNs are dropped."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    mask = np.isfinite(values)
    if t_min is not None:
        mask &= times > t_min + _TIME_TOL
    if t_max is not None:
        mask &= times <= t_max + _TIME_TOL
    if not mask.any():
        raise EmptySelectionError(
            f"no samples in window ({t_min}, {t_max}]"
        )
    return float(values[mask].mean())


# ---------------------------------------------------------------------------
# Energy


def energy_series(states: np.ndarray, grid, gram_matrix=None) -> np.ndarray:
    """Discrete energy per row; reduced rows need the basis Gram matrix."""
    states = np.atleast_2d(np.asarray(states, dtype=float))
    if gram_matrix is None:
        quad = np.einsum("ij,ij->i", states, states)
    else:
        quad = np.einsum("ij,ij->i", states, states @ gram_matrix)
    return 0.5 * grid.cell_volume * quad


def energy_drift(energies: np.ndarray) -> float:
    """Largest relative deviation from the initial energy."""
    energies = np.asarray(energies, dtype=float)
    if energies[0] == 0.0:
        raise UndefinedMetricError("energy drift with zero initial energy")
    return float(np.max(np.abs(energies - energies[0])) / abs(energies[0]))


def energy_rate_relative(rhs_matrix, a: np.ndarray) -> float:
    """Instantaneous energy production |a' B a|, normalized by |a||Ba|.

    For the reduced system G a' = B a the energy (1/2) a' G a changes at
    rate a' B a regardless of G, so no Gram solve is needed.  Zero for a
    skew-symmetric ``rhs_matrix`` up to round-off; the normalization
    measures how completely the two quadratic forms cancel.
    """
    a = np.asarray(a, dtype=float)
    Ba = rhs_matrix @ a
    scale = float(np.linalg.norm(a) * np.linalg.norm(Ba))
    if scale == 0.0:
        return 0.0
    return abs(float(a @ Ba)) / scale


# ---------------------------------------------------------------------------
# Gradients


def gradient_stack(u: np.ndarray, grid) -> np.ndarray:
    """Forward-difference gradient components, stacked into one vector."""
    u = np.asarray(u, dtype=float)
    if grid.ndim == 1:
        return (np.roll(u, -1) - u) / grid.h
    f = u.reshape(grid.ny, grid.nx)
    gx = (np.roll(f, -1, axis=1) - f) / grid.hx
    gy = (np.roll(f, -1, axis=0) - f) / grid.hy
    return np.concatenate([gx.ravel(), gy.ravel()])


def gradient_error(u: np.ndarray, ref: np.ndarray, grid) -> float:
    """Relative L2 error of the discrete gradient."""
    return relative_error(gradient_stack(u, grid), gradient_stack(ref, grid))


def gradient_error_series(states: np.ndarray, reference: np.ndarray,
                          grid) -> np.ndarray:
    states = np.atleast_2d(states)
    reference = np.atleast_2d(reference)
    return np.array([gradient_error(s, f, grid)
                     for s, f in zip(states, reference)])


# ---------------------------------------------------------------------------
# Sweep fits and mode selection


def select_modes_by_threshold(qs, errors, threshold: float):
    """Smallest q whose error falls strictly below the threshold, or None."""
    order = np.argsort(qs)
    qs = np.asarray(qs)[order]
    errors = np.asarray(errors, dtype=float)[order]
    hits = np.nonzero(errors < threshold)[0]
    return int(qs[hits[0]]) if hits.size else None


def fit_loglog(x, y):
    """Least-squares slope and constant of y ~ const * x**slope."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise DimensionError("log-log fit needs at least two points")
    slope, intercept = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope), float(np.exp(intercept))


# ---------------------------------------------------------------------------
# Transfer between uniform periodic grids


def _interp_axis(values: np.ndarray, x0: float, h: float, n: int,
                 xq: np.ndarray, axis: int) -> np.ndarray:
    s = np.mod((np.asarray(xq, dtype=float) - x0) / h, n)
    i0 = np.floor(s).astype(int) % n
    w = s - np.floor(s)
    i1 = (i0 + 1) % n
    lo = np.take(values, i0, axis=axis)
    hi = np.take(values, i1, axis=axis)
    shape = [1] * values.ndim
    shape[axis] = w.size
    w = w.reshape(shape)
    return (1.0 - w) * lo + w * hi


def interp_periodic(values: np.ndarray, src_grid, dst_grid) -> np.ndarray:
    """Periodic (bi)linear interpolation between cell-centered grids.

    Works in both directions: fine -> coarse restriction samples the
    fine field at coarse centers, coarse -> fine prolongation the other
    way around.  Domains must coincide.
    """
    if src_grid.ndim != dst_grid.ndim:
        raise DimensionError("grids have different dimensionality")
    values = np.asarray(values, dtype=float)
    if values.shape[-1] != src_grid.size and values.size == src_grid.size:
        values = values.ravel()
    if src_grid.ndim == 1:
        if abs(src_grid.length - dst_grid.length) > 1e-12 * src_grid.length:
            raise DimensionError("grids cover different domains")
        return _interp_axis(values, src_grid.centers[0], src_grid.h, src_grid.n,
                            dst_grid.centers, axis=-1)
    if (abs(src_grid.lx - dst_grid.lx) > 1e-12 * src_grid.lx
            or abs(src_grid.ly - dst_grid.ly) > 1e-12 * src_grid.ly):
        raise DimensionError("grids cover different domains")
    f = values.reshape(src_grid.ny, src_grid.nx)
    f = _interp_axis(f, src_grid.x[0], src_grid.hx, src_grid.nx, dst_grid.x, axis=1)
    f = _interp_axis(f, src_grid.y[0], src_grid.hy, src_grid.ny, dst_grid.y, axis=0)
    return f.ravel()


# ---------------------------------------------------------------------------
# CSV output (17 significant digits, so reruns are byte-comparable)


def format_value(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    return str(v)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])


def read_csv(path):
    """Header list plus one dict of strings per row."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [dict(zip(header, row)) for row in reader]
    return header, rows
