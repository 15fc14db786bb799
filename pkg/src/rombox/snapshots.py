"""Snapshot sets, train/validation splits, and subdomain layouts.

A snapshot set stores states as columns together with their times and a
per-column split label.  Subdomain layouts partition the grid into equal
boxes -- contiguous and disjoint ("nonoverlap"), or twice as wide and
shifted by half a box ("overlap", every point covered exactly twice per
axis).  Local snapshot matrices stack the restrictions of all snapshots
to every subdomain side by side, optionally weighted by a blending
kernel evaluated at the subdomain's own cell centers.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (DimensionError, EmptySelectionError, FormatError, LayoutError,
                     SplitError)
from .grids import Grid1D, Grid2D, grid_1d, grid_2d
from .integrators import StateVector

SPLIT_TRAIN = 0
SPLIT_VALIDATION = 1
SPLIT_EXTRAPOLATION = 2
SPLIT_EXCLUDED = 3

SPLIT_NAMES = {
    SPLIT_TRAIN: "train",
    SPLIT_VALIDATION: "validation",
    SPLIT_EXTRAPOLATION: "extrapolation",
    SPLIT_EXCLUDED: "excluded",
}
_SPLIT_CODES = {name: code for code, name in SPLIT_NAMES.items()}
_SPLIT_CODES["val"] = SPLIT_VALIDATION
_SPLIT_CODES["extrap"] = SPLIT_EXTRAPOLATION

_TIME_TOL = 1.0e-9


def split_code(split) -> int:
    """Normalize a split given by name or integer code."""
    if isinstance(split, str):
        try:
            return _SPLIT_CODES[split]
        except KeyError:
            raise SplitError(f"unknown split {split!r}, expected one of "
                             f"{sorted(_SPLIT_CODES)}") from None
    code = int(split)
    if code not in SPLIT_NAMES:
        raise SplitError(f"unknown split code {code}")
    return code


def label_splits(times, train_end: float, val_end: float,
                 val_start: float | None = None) -> np.ndarray:
    """Label each time as train / validation / extrapolation / excluded.

    Training covers t <= train_end, validation (val_start, val_end] (with
    val_start defaulting to train_end), extrapolation everything later.
    Times in the gap (train_end, val_start] are excluded.  Comparisons
    carry a small absolute tolerance so recorded times hit their nominal
    window boundaries.
    """
    times = np.asarray(times, dtype=float)
    if val_start is None:
        val_start = train_end
    if not (train_end <= val_start < val_end):
        raise SplitError(
            f"need train_end <= val_start < val_end, got "
            f"{train_end}, {val_start}, {val_end}"
        )
    labels = np.full(times.shape, SPLIT_EXTRAPOLATION, dtype=np.uint8)
    labels[times <= val_end + _TIME_TOL] = SPLIT_VALIDATION
    labels[times <= val_start + _TIME_TOL] = SPLIT_EXCLUDED
    labels[times <= train_end + _TIME_TOL] = SPLIT_TRAIN
    return labels


@dataclass
class SnapshotSet:
    """States as columns of ``data`` with per-column times and splits."""

    data: np.ndarray
    times: np.ndarray
    split: np.ndarray
    grid: Grid1D | Grid2D
    dt: float
    stride: int = 1

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        self.times = np.asarray(self.times, dtype=float)
        self.split = np.asarray(self.split, dtype=np.uint8)
        if self.data.ndim != 2:
            raise DimensionError(f"snapshot data must be 2D, got {self.data.shape}")
        n, s = self.data.shape
        if n != self.grid.size:
            raise DimensionError(
                f"snapshot rows {n} do not match grid size {self.grid.size}"
            )
        if self.times.shape != (s,) or self.split.shape != (s,):
            raise DimensionError(
                f"times/split lengths {self.times.shape}/{self.split.shape} "
                f"do not match {s} snapshots"
            )

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def n_snapshots(self) -> int:
        return self.data.shape[1]

    def mask(self, split=None) -> np.ndarray:
        if split is None:
            return np.ones(self.n_snapshots, dtype=bool)
        return self.split == split_code(split)

    def columns(self, split=None) -> np.ndarray:
        """Snapshot columns of one split (or all); errors if empty."""
        m = self.mask(split)
        if not m.any():
            name = "any split" if split is None else repr(split)
            raise EmptySelectionError(f"no snapshots in {name}")
        return self.data[:, m]

    def times_of(self, split=None) -> np.ndarray:
        return self.times[self.mask(split)]

    def counts(self) -> dict:
        return {name: int(np.sum(self.split == code))
                for code, name in SPLIT_NAMES.items()}

    def initial_state(self) -> StateVector:
        if self.n_snapshots == 0:
            raise EmptySelectionError("snapshot set is empty")
        return StateVector(self.data[:, 0].copy(), float(self.times[0]))


def snapshot_set_from_trajectory(traj, grid, dt: float, stride: int,
                                 train_end: float, val_end: float,
                                 val_start: float | None = None) -> SnapshotSet:
    """Wrap a trajectory as a labeled snapshot set."""
    labels = label_splits(traj.times, train_end, val_end, val_start)
    return SnapshotSet(data=traj.state_matrix().copy(), times=traj.times.copy(),
                       split=labels, grid=grid, dt=dt, stride=stride)


# ---------------------------------------------------------------------------
# Subdomain layouts


@dataclass(frozen=True)
class SubdomainLayout:
    """Equal-box decomposition of a periodic grid.

    ``indices[s]`` lists the flattened grid indices of subdomain ``s``
    (2D subdomains are numbered ``s = iy * Ix + ix``, their points
    ordered row-major in local (y, x)).  ``origins`` holds the lower
    corner coordinate of each box per axis; ``widths`` its extent.
    """

    grid: Grid1D | Grid2D
    mode: str
    counts: tuple[int, ...]
    box_shape: tuple[int, ...]
    indices: np.ndarray = field(repr=False)
    origins: tuple[np.ndarray, ...] = field(repr=False)
    widths: tuple[float, ...] = ()

    @property
    def n_subdomains(self) -> int:
        return int(np.prod(self.counts))

    @property
    def points_per_subdomain(self) -> int:
        return int(np.prod(self.box_shape))

    @property
    def overlapping(self) -> bool:
        return self.mode == "overlap"

    def origin(self, s: int) -> tuple[float, ...]:
        if self.grid.ndim == 1:
            return (float(self.origins[0][s]),)
        iy, ix = divmod(s, self.counts[0])
        return (float(self.origins[0][ix]), float(self.origins[1][iy]))


def _axis_starts(n_cells: int, n_sub: int, mode: str, axis_name: str) -> tuple:
    if n_sub < 1:
        raise LayoutError(f"subdomain count along {axis_name} must be >= 1, got {n_sub}")
    if n_cells % n_sub != 0:
        raise LayoutError(
            f"{n_cells} cells along {axis_name} not divisible into {n_sub} subdomains"
        )
    step = n_cells // n_sub
    if mode == "nonoverlap":
        box = step
    elif mode == "overlap":
        if n_sub < 2:
            raise LayoutError("overlapping layouts need at least 2 subdomains per axis")
        box = 2 * step
    else:
        raise LayoutError(f"unknown layout mode {mode!r}")
    starts = np.arange(n_sub) * step
    return starts, box, step


def build_layout(grid, subdomains, mode: str = "nonoverlap") -> SubdomainLayout:
    """Build an equal-box layout; counts must divide the cells per axis."""
    if grid.ndim == 1:
        if not np.isscalar(subdomains):
            (subdomains,) = subdomains
        n_sub = int(subdomains)
        starts, box, step = _axis_starts(grid.n, n_sub, mode, "x")
        offs = np.arange(box)
        indices = ((starts[:, None] + offs[None, :]) % grid.n).astype(np.int32)
        factor = 2.0 if mode == "overlap" else 1.0
        origins = (starts * grid.h,)
        widths = (factor * grid.length / n_sub,)
        return SubdomainLayout(grid=grid, mode=mode, counts=(n_sub,),
                               box_shape=(box,), indices=indices,
                               origins=origins, widths=widths)

    if np.isscalar(subdomains):
        ix = iy = int(subdomains)
    else:
        ix, iy = (int(v) for v in subdomains)
    sx, bx, _ = _axis_starts(grid.nx, ix, mode, "x")
    sy, by, _ = _axis_starts(grid.ny, iy, mode, "y")
    cols = (sx[:, None] + np.arange(bx)[None, :]) % grid.nx  # (Ix, Jx)
    rows = (sy[:, None] + np.arange(by)[None, :]) % grid.ny  # (Iy, Jy)
    indices = np.empty((ix * iy, bx * by), dtype=np.int32)
    for jy in range(iy):
        row_block = rows[jy][:, None] * grid.nx  # (Jy, 1)
        for jx in range(ix):
            indices[jy * ix + jx] = (row_block + cols[jx][None, :]).ravel()
    factor = 2.0 if mode == "overlap" else 1.0
    origins = (grid.x0 + sx * grid.hx, grid.y0 + sy * grid.hy)
    widths = (factor * grid.lx / ix, factor * grid.ly / iy)
    return SubdomainLayout(grid=grid, mode=mode, counts=(ix, iy),
                           box_shape=(bx, by), indices=indices,
                           origins=origins, widths=widths)


@dataclass
class LocalSnapshotMatrix:
    """Subdomain-stacked snapshot matrix (J rows, one column block per box)."""

    values: np.ndarray
    layout: SubdomainLayout
    weighted: bool = False


def assemble_local(X: np.ndarray, layout: SubdomainLayout) -> LocalSnapshotMatrix:
    """Stack each subdomain's restriction of every snapshot column."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != layout.grid.size:
        raise DimensionError(
            f"snapshot matrix shape {X.shape} does not match grid "
            f"size {layout.grid.size}"
        )
    if X.shape[1] == 0:
        raise EmptySelectionError("cannot assemble a local matrix from 0 snapshots")
    blocks = X[layout.indices]  # (I, J, s)
    stacked = np.swapaxes(blocks, 0, 1).reshape(layout.points_per_subdomain, -1)
    return LocalSnapshotMatrix(values=np.ascontiguousarray(stacked), layout=layout,
                               weighted=False)


def assemble_local_overlap(X: np.ndarray, layout: SubdomainLayout,
                           kernel) -> LocalSnapshotMatrix:
    """Like :func:`assemble_local`, but kernel-weighted (midpoint sampling).

    Every subdomain sees the same weight vector -- the kernel evaluated
    at its own cell centers -- so the weighting is a row scaling of the
    stacked matrix.
    """
    from .kernels import local_weights

    if not layout.overlapping:
        raise LayoutError("kernel weighting requires an overlapping layout")
    local = assemble_local(X, layout)
    w = local_weights(layout, kernel)
    local.values *= w[:, None]
    local.weighted = True
    return local


# ---------------------------------------------------------------------------
# Binary snapshot files

_MAGIC = b"RSNP"
_VERSION = 1


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.off = 0

    def take(self, n: int, what: str) -> bytes:
        if self.off + n > len(self.buf):
            raise FormatError(f"truncated while reading {what}", offset=self.off)
        out = self.buf[self.off:self.off + n]
        self.off += n
        return out

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]

    def f64(self, what: str) -> float:
        return struct.unpack("<d", self.take(8, what))[0]

    def array(self, dtype, count: int, what: str) -> np.ndarray:
        raw = self.take(int(count) * np.dtype(dtype).itemsize, what)
        return np.frombuffer(raw, dtype=dtype).copy()

    def done(self):
        if self.off != len(self.buf):
            raise FormatError(
                f"{len(self.buf) - self.off} trailing bytes after payload",
                offset=self.off,
            )


def save_snapshots(snaps: SnapshotSet, path) -> None:
    """Write a snapshot set to the binary RSNP format (little-endian)."""
    grid = snaps.grid
    parts = [_MAGIC, struct.pack("<II", _VERSION, grid.ndim)]
    if grid.ndim == 1:
        parts.append(struct.pack("<I", grid.n))
    else:
        parts.append(struct.pack("<II", grid.nx, grid.ny))
    parts.append(struct.pack("<I", snaps.n_snapshots))
    if grid.ndim == 1:
        parts.append(struct.pack("<d", grid.length))
    else:
        parts.append(struct.pack("<dd", grid.lx, grid.ly))
    parts.append(struct.pack("<dI", snaps.dt, snaps.stride))
    parts.append(snaps.times.astype("<f8").tobytes())
    parts.append(np.asfortranarray(snaps.data, dtype="<f8").tobytes(order="F"))
    parts.append(snaps.split.astype(np.uint8).tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def load_snapshots(path) -> SnapshotSet:
    """Read a snapshot set written by :func:`save_snapshots`."""
    with open(path, "rb") as fh:
        rd = _Reader(fh.read())
    magic = rd.take(4, "magic")
    if magic != _MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {_MAGIC!r}", offset=0)
    version = rd.u32("version")
    if version != _VERSION:
        raise FormatError(f"unsupported version {version}", offset=4)
    ndim = rd.u32("dimensionality")
    if ndim == 1:
        n = rd.u32("cell count")
        s = rd.u32("snapshot count")
        length = rd.f64("domain length")
        grid = grid_1d(n, length)
    elif ndim == 2:
        nx = rd.u32("x cell count")
        ny = rd.u32("y cell count")
        s = rd.u32("snapshot count")
        lx = rd.f64("x extent")
        ly = rd.f64("y extent")
        grid = grid_2d(nx, ny, lx, ly)
    else:
        raise FormatError(f"unsupported dimensionality {ndim}", offset=8)
    dt = rd.f64("dt")
    stride = rd.u32("stride")
    times = rd.array("<f8", s, "times")
    data = rd.array("<f8", grid.size * s, "snapshot data")
    split = rd.array(np.uint8, s, "split labels")
    rd.done()
    if not np.all(np.isin(split, list(SPLIT_NAMES))):
        raise FormatError("invalid split label in file")
    data = np.ascontiguousarray(data.reshape((grid.size, s), order="F"))
    return SnapshotSet(data=data, times=times, split=split, grid=grid,
                       dt=dt, stride=int(stride))
