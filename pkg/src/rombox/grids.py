"""Periodic cell-centered grids in one and two dimensions.

All fields live at cell centers; 2D face coordinates are provided for
staggered velocity sampling.  The 1D domain is [0, length), the 2D domain
is centered at the origin: [-lx/2, lx/2) x [-ly/2, ly/2).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Grid1D:
    """Uniform periodic 1D grid with ``n`` cells on [0, length)."""

    n: int
    length: float
    h: float
    centers: np.ndarray = field(repr=False)

    @property
    def ndim(self) -> int:
        return 1

    @property
    def size(self) -> int:
        return self.n

    @property
    def cell_volume(self) -> float:
        return self.h


@dataclass(frozen=True)
class Grid2D:
    """Uniform periodic 2D grid, cell-centered, origin-centered domain.

    Flattened fields use row-major (y, x) ordering: global index
    ``g = iy * nx + ix``.  ``xf``/``yf`` hold the east/north face
    coordinates of each cell column/row.
    """

    nx: int
    ny: int
    lx: float
    ly: float
    hx: float
    hy: float
    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    xf: np.ndarray = field(repr=False)
    yf: np.ndarray = field(repr=False)

    @property
    def ndim(self) -> int:
        return 2

    @property
    def size(self) -> int:
        return self.nx * self.ny

    @property
    def cell_volume(self) -> float:
        return self.hx * self.hy

    @property
    def x0(self) -> float:
        """Left domain edge along x."""
        return -0.5 * self.lx

    @property
    def y0(self) -> float:
        """Bottom domain edge along y."""
        return -0.5 * self.ly

    def meshgrid(self):
        """Cell-center coordinate arrays of shape (ny, nx)."""
        return np.meshgrid(self.x, self.y)


def grid_1d(n: int, length: float = TWO_PI) -> Grid1D:
    """Build a periodic 1D grid with cell centers at (i + 1/2) * h."""
    if n < 3:
        raise GridError(f"1D grid needs at least 3 cells, got n={n}")
    if not np.isfinite(length) or length <= 0.0:
        raise GridError(f"domain length must be positive, got {length}")
    h = length / n
    centers = (np.arange(n) + 0.5) * h
    return Grid1D(n=n, length=length, h=h, centers=centers)


def grid_2d(nx: int, ny: int, lx: float = TWO_PI, ly: float = TWO_PI) -> Grid2D:
    """Build a periodic 2D grid on [-lx/2, lx/2) x [-ly/2, ly/2)."""
    if nx < 3 or ny < 3:
        raise GridError(f"2D grid needs at least 3 cells per axis, got {nx}x{ny}")
    if not (np.isfinite(lx) and np.isfinite(ly)) or lx <= 0.0 or ly <= 0.0:
        raise GridError(f"domain extents must be positive, got lx={lx}, ly={ly}")
    hx = lx / nx
    hy = ly / ny
    x0, y0 = -0.5 * lx, -0.5 * ly
    x = x0 + (np.arange(nx) + 0.5) * hx
    y = y0 + (np.arange(ny) + 0.5) * hy
    xf = x0 + (np.arange(nx) + 1.0) * hx
    yf = y0 + (np.arange(ny) + 1.0) * hy
    return Grid2D(nx=nx, ny=ny, lx=lx, ly=ly, hx=hx, hy=hy, x=x, y=y, xf=xf, yf=yf)
