"""Blending kernels for overlapping subdomain layouts.

Each kernel is supported on one subdomain box and the family forms a
partition of unity: at every grid point the kernels of the (two per
axis) covering subdomains sum to one.  Two families are provided:

* ``sin2`` -- sin^2 ramp over the box, used on 1D layouts;
* ``bump`` -- normalized C-infinity bump (per axis, tensorized), used on
  2D layouts.  The normalization psi(t) = w(t) / (w(t) + w(1 - |t|))
  with w(t) = exp(-1 / (1 - |t|)) makes psi(t) + psi(t - 1) = 1 on the
  shared half of two neighbors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import KernelError
from .snapshots import SubdomainLayout

_FAMILIES = ("sin2", "bump")


@dataclass(frozen=True)
class KernelSpec:
    family: str

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise KernelError(f"unknown kernel family {self.family!r}, "
                              f"expected one of {_FAMILIES}")


def kernel_for(layout: SubdomainLayout) -> KernelSpec:
    """Default kernel family for a layout: sin2 in 1D, bump in 2D."""
    if not layout.overlapping:
        raise KernelError("blending kernels apply to overlapping layouts only")
    return KernelSpec("sin2" if layout.grid.ndim == 1 else "bump")


def _as_spec(kernel) -> KernelSpec:
    if isinstance(kernel, KernelSpec):
        return kernel
    return KernelSpec(str(kernel))


def _sin2_profile(t):
    """sin^2 ramp on normalized box coordinate t in [0, 1), zero outside."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = (t >= 0.0) & (t < 1.0)
    out[inside] = np.sin(np.pi * t[inside]) ** 2
    return out


def _bump_raw(t):
    t = np.abs(np.asarray(t, dtype=float))
    out = np.zeros_like(t)
    inside = t < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - t[inside]))
    return out


def _bump_profile(t):
    """Normalized bump on t in [0, 1) (box coordinate), zero outside.

    Internally uses the symmetric coordinate 2t - 1 in (-1, 1); the
    denominator never vanishes because w(s) and w(1 - |s|) cannot both
    underflow.
    """
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = (t >= 0.0) & (t < 1.0)
    s = 2.0 * t[inside] - 1.0
    num = _bump_raw(s)
    den = num + _bump_raw(1.0 - np.abs(s))
    out[inside] = num / den
    return out


def _profile(spec: KernelSpec):
    return _sin2_profile if spec.family == "sin2" else _bump_profile


def kernel_value(layout: SubdomainLayout, kernel, s: int, *coords) -> np.ndarray:
    """Evaluate subdomain ``s``'s kernel at arbitrary coordinates.

    Coordinates are wrapped periodically into the subdomain's box before
    applying the profile, so boxes crossing the domain seam work too.
    1D call: ``kernel_value(layout, kernel, s, x)``; 2D adds ``y``.
    """
    spec = _as_spec(kernel)
    if not layout.overlapping:
        raise KernelError("blending kernels apply to overlapping layouts only")
    prof = _profile(spec)
    grid = layout.grid
    origin = layout.origin(s)
    if grid.ndim == 1:
        (x,) = coords
        rel = np.mod(np.asarray(x, dtype=float) - origin[0], grid.length)
        return prof(rel / layout.widths[0])
    x, y = coords
    rel_x = np.mod(np.asarray(x, dtype=float) - origin[0], grid.lx)
    rel_y = np.mod(np.asarray(y, dtype=float) - origin[1], grid.ly)
    return prof(rel_x / layout.widths[0]) * prof(rel_y / layout.widths[1])


def local_weights(layout: SubdomainLayout, kernel) -> np.ndarray:
    """Kernel evaluated at a subdomain's own cell centers (J values).

    The layout is uniform, so every subdomain shares this vector; the
    normalized cell-center coordinate along an axis with J points is
    (j + 1/2) / J, which keeps the partition-of-unity pairing exact to
    round-off.
    """
    spec = _as_spec(kernel)
    if not layout.overlapping:
        raise KernelError("blending kernels apply to overlapping layouts only")
    prof = _profile(spec)
    axes = [prof((np.arange(j) + 0.5) / j) for j in layout.box_shape]
    if layout.grid.ndim == 1:
        return axes[0]
    wx, wy = axes
    return (wy[:, None] * wx[None, :]).ravel()


def verify_partition_of_unity(layout: SubdomainLayout, kernel=None) -> float:
    """Max deviation of sum_s k_s from 1 over all grid cell centers."""
    spec = _as_spec(kernel) if kernel is not None else kernel_for(layout)
    grid = layout.grid
    if grid.ndim == 1:
        total = np.zeros(grid.n)
        for s in range(layout.n_subdomains):
            total += kernel_value(layout, spec, s, grid.centers)
    else:
        X, Y = grid.meshgrid()
        total = np.zeros(grid.size)
        for s in range(layout.n_subdomains):
            total += kernel_value(layout, spec, s, X.ravel(), Y.ravel())
    return float(np.max(np.abs(total - 1.0)))
