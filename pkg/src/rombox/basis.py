"""Proper-orthogonal bases: global, subdomain-local, and kernel-blended.

The global variant ("gpod") keeps the leading left singular vectors of
the training snapshot matrix.  The local variants share one block of
modes across all subdomains: "lpod" extracts them from the stacked
restrictions of the training snapshots to a disjoint layout, "lopod"
from kernel-weighted restrictions to an overlapping layout.  Scattering
the shared block into every subdomain's rows yields the tall assembled
operator; for "lopod" the columns overlap, so projections go through
the (SPD) Gram matrix.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import (DegenerateBasisError, DimensionError, FactorizationError,
                     FormatError)
from .grids import Grid1D, Grid2D, grid_1d, grid_2d
from .kernels import KernelSpec, kernel_for
from .snapshots import LocalSnapshotMatrix, SubdomainLayout, build_layout


@dataclass
class SvdResult:
    """Leading left singular vectors plus the full singular spectrum."""

    left: np.ndarray
    singular_values: np.ndarray


def truncated_svd(X: np.ndarray, k: int) -> SvdResult:
    """Leading ``k`` left singular vectors with a deterministic sign.

    Each vector is flipped so its largest-magnitude entry (lowest index
    on ties) is positive.  Raises if ``k`` exceeds either matrix
    dimension or if a retained singular value is exactly zero.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionError(f"expected a matrix, got shape {X.shape}")
    if not 1 <= k <= min(X.shape):
        raise DimensionError(
            f"cannot keep {k} modes of a {X.shape[0]}x{X.shape[1]} matrix"
        )
    u, s, _ = np.linalg.svd(X, full_matrices=False)
    if s[k - 1] == 0.0:
        raise DegenerateBasisError(
            f"singular value {k} of the snapshot matrix is exactly zero"
        )
    u = u[:, :k].copy()
    peaks = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[peaks, np.arange(k)])
    u *= signs[None, :]
    return SvdResult(left=u, singular_values=s)


class GramSolver:
    """Solve with a fixed SPD Gram matrix; the identity short-circuits."""

    def __init__(self, matrix: np.ndarray | None = None):
        if matrix is None:
            self.trivial = True
            self.cholesky_lower = None
            return
        self.trivial = False
        dense = np.asarray(matrix, dtype=float)
        if dense.ndim != 2 or dense.shape[0] != dense.shape[1]:
            raise DimensionError(f"Gram matrix must be square, got {dense.shape}")
        try:
            c, _ = scipy.linalg.cho_factor(dense, lower=True)
        except scipy.linalg.LinAlgError as exc:
            raise FactorizationError(f"Gram matrix is not SPD: {exc}") from None
        self.cholesky_lower = np.asfortranarray(c)

    def solve(self, y: np.ndarray) -> np.ndarray:
        if self.trivial:
            return np.array(y, dtype=float, copy=True)
        return scipy.linalg.cho_solve((self.cholesky_lower, True), y)


@dataclass
class PodBasis:
    """Assembled reduced basis of ``r`` columns on ``grid``.

    ``operator`` is the tall (n, r) basis matrix; for the local variants
    it scatters the shared (J, q) ``local_modes`` block into each
    subdomain's rows.  ``gram`` solves with the basis Gram matrix
    (identity unless columns overlap).
    """

    variant: str
    grid: Grid1D | Grid2D
    operator: sp.csr_matrix = field(repr=False)
    singular_values: np.ndarray = field(repr=False)
    layout: SubdomainLayout | None = None
    local_modes: np.ndarray | None = field(default=None, repr=False)
    kernel: KernelSpec | None = None
    q: int | None = None
    gram: GramSolver = field(default_factory=GramSolver, repr=False)
    gram_matrix: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.operator.shape[0]

    @property
    def r(self) -> int:
        return self.operator.shape[1]


def _scatter_modes(layout: SubdomainLayout, modes: np.ndarray) -> sp.csr_matrix:
    """Place the shared mode block into every subdomain's rows."""
    n_sub = layout.n_subdomains
    n_loc, q = modes.shape
    rows = np.repeat(layout.indices.ravel(), q)
    col_block = np.tile(np.arange(q, dtype=np.int64), n_loc)
    cols = (np.arange(n_sub, dtype=np.int64)[:, None] * q + col_block[None, :]).ravel()
    vals = np.tile(modes.ravel(), n_sub)
    return sp.csr_matrix((vals, (rows, cols)),
                         shape=(layout.grid.size, n_sub * q))


def build_gpod(X: np.ndarray, r: int, grid) -> PodBasis:
    """Global basis: leading ``r`` left singular vectors of ``X``."""
    X = np.asarray(X, dtype=float)
    if X.shape[0] != grid.size:
        raise DimensionError(
            f"snapshot rows {X.shape[0]} do not match grid size {grid.size}"
        )
    svd = truncated_svd(X, r)
    return PodBasis(variant="gpod", grid=grid,
                    operator=sp.csr_matrix(svd.left),
                    singular_values=svd.singular_values)


def identity_basis(grid) -> PodBasis:
    """Trivial full-rank basis (no reduction); useful as a reference."""
    n = grid.size
    return PodBasis(variant="gpod", grid=grid,
                    operator=sp.identity(n, format="csr"),
                    singular_values=np.ones(n))


def build_lpod(local: LocalSnapshotMatrix, q: int,
               svd: SvdResult | None = None) -> PodBasis:
    """Local basis on a disjoint layout; assembled columns stay orthonormal."""
    layout = local.layout
    if layout.overlapping:
        raise DimensionError("disjoint layout expected; use build_lopod for overlap")
    if svd is None:
        svd = truncated_svd(local.values, q)
    elif svd.left.shape[1] < q:
        raise DimensionError(f"precomputed SVD holds {svd.left.shape[1]} modes, "
                             f"need {q}")
    modes = svd.left[:, :q]
    return PodBasis(variant="lpod", grid=layout.grid,
                    operator=_scatter_modes(layout, modes),
                    singular_values=svd.singular_values,
                    layout=layout, local_modes=np.ascontiguousarray(modes), q=q)


def build_lopod(local: LocalSnapshotMatrix, q: int,
                kernel: KernelSpec | None = None,
                svd: SvdResult | None = None) -> PodBasis:
    """Kernel-blended local basis on an overlapping layout.

    ``local`` must be the kernel-weighted stacked matrix; overlapping
    columns make the Gram matrix non-trivial, so it is factored here
    (failure to be SPD signals degenerate modes).
    """
    layout = local.layout
    if not layout.overlapping:
        raise DimensionError("overlapping layout expected; use build_lpod otherwise")
    if not local.weighted:
        raise DimensionError("lopod needs the kernel-weighted local matrix")
    if kernel is None:
        kernel = kernel_for(layout)
    if svd is None:
        svd = truncated_svd(local.values, q)
    elif svd.left.shape[1] < q:
        raise DimensionError(f"precomputed SVD holds {svd.left.shape[1]} modes, "
                             f"need {q}")
    modes = svd.left[:, :q]
    operator = _scatter_modes(layout, modes)
    gram_matrix = (operator.T @ operator).toarray()
    gram = GramSolver(gram_matrix)
    return PodBasis(variant="lopod", grid=layout.grid, operator=operator,
                    singular_values=svd.singular_values, layout=layout,
                    local_modes=np.ascontiguousarray(modes), kernel=kernel, q=q,
                    gram=gram, gram_matrix=gram_matrix)


def project(basis: PodBasis, u: np.ndarray) -> np.ndarray:
    """Reduced coordinates of a state (least squares when columns overlap)."""
    u = np.asarray(u, dtype=float)
    if u.shape[0] != basis.n:
        raise DimensionError(f"state size {u.shape[0]} does not match basis "
                             f"rows {basis.n}")
    return basis.gram.solve(basis.operator.T @ u)


def reconstruct(basis: PodBasis, a: np.ndarray) -> np.ndarray:
    """Full state from reduced coordinates."""
    a = np.asarray(a, dtype=float)
    if a.shape[0] != basis.r:
        raise DimensionError(f"coefficient size {a.shape[0]} does not match basis "
                             f"columns {basis.r}")
    return basis.operator @ a


def projector_apply(basis: PodBasis, u: np.ndarray) -> np.ndarray:
    """Orthogonal projection of a state onto the basis span."""
    return reconstruct(basis, project(basis, u))


@dataclass
class ProjectionErrors:
    """Relative projection error per snapshot plus two aggregates."""

    per_snapshot: np.ndarray
    mean: float
    frobenius: float


def projection_error(basis: PodBasis, X: np.ndarray) -> ProjectionErrors:
    """Relative L2 projection error of each column of ``X``.

    Zero-norm columns are skipped (with a warning) and reported as NaN;
    the aggregates run over the remaining columns.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    diff = projector_apply(basis, X) - X
    diff_norms = np.linalg.norm(diff, axis=0)
    ref_norms = np.linalg.norm(X, axis=0)
    ok = ref_norms > 0.0
    if not ok.all():
        warnings.warn(f"skipping {int((~ok).sum())} zero-norm snapshot(s) "
                      "in projection error", stacklevel=2)
    per = np.full(X.shape[1], np.nan)
    per[ok] = diff_norms[ok] / ref_norms[ok]
    frob_den = float(np.linalg.norm(ref_norms[ok]))
    return ProjectionErrors(
        per_snapshot=per,
        mean=float(per[ok].mean()) if ok.any() else float("nan"),
        frobenius=float(np.linalg.norm(diff_norms[ok]) / frob_den) if ok.any()
        else float("nan"),
    )


def tail_energy_fraction(singular_values: np.ndarray, r: int) -> float:
    """Relative Frobenius error of the rank-r truncation of the snapshots:
    sqrt(sum of squared discarded singular values / total)."""
    s2 = np.asarray(singular_values, dtype=float) ** 2
    total = s2.sum()
    if total == 0.0:
        raise DegenerateBasisError("all singular values are zero")
    return float(np.sqrt(s2[r:].sum() / total))


# ---------------------------------------------------------------------------
# Binary basis files

_MAGIC = b"RPOD"
_VERSION = 1
_VARIANT_CODES = {"gpod": 0, "lpod": 1, "lopod": 2}
_VARIANT_NAMES = {v: k for k, v in _VARIANT_CODES.items()}


def save_basis(basis: PodBasis, path) -> None:
    """Write a basis to the binary RPOD format (little-endian)."""
    grid = basis.grid
    parts = [_MAGIC, struct.pack("<IBI", _VERSION, _VARIANT_CODES[basis.variant],
                                 grid.ndim)]
    if grid.ndim == 1:
        parts.append(struct.pack("<Id", grid.n, grid.length))
    else:
        parts.append(struct.pack("<IIdd", grid.nx, grid.ny, grid.lx, grid.ly))
    if basis.variant == "gpod":
        parts.append(struct.pack("<BI", 0, basis.r))
        payload = basis.operator.toarray()
    else:
        layout = basis.layout
        counts = layout.counts if grid.ndim == 2 else (layout.counts[0],)
        parts.append(struct.pack("<B", 1 if layout.overlapping else 0))
        parts.append(struct.pack(f"<{len(counts)}I", *counts))
        parts.append(struct.pack("<I", basis.q))
        payload = basis.local_modes
    parts.append(np.asfortranarray(payload, dtype="<f8").tobytes(order="F"))
    sigma = np.asarray(basis.singular_values, dtype="<f8")
    parts.append(struct.pack("<I", sigma.size))
    parts.append(sigma.tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def load_basis(path) -> PodBasis:
    """Read a basis written by :func:`save_basis`, rebuilding derived parts."""
    from .snapshots import _Reader  # same little binary reader

    with open(path, "rb") as fh:
        rd = _Reader(fh.read())
    magic = rd.take(4, "magic")
    if magic != _MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {_MAGIC!r}", offset=0)
    version = rd.u32("version")
    if version != _VERSION:
        raise FormatError(f"unsupported version {version}", offset=4)
    vcode = rd.take(1, "variant")[0]
    if vcode not in _VARIANT_NAMES:
        raise FormatError(f"unknown variant code {vcode}", offset=8)
    variant = _VARIANT_NAMES[vcode]
    ndim = rd.u32("dimensionality")
    if ndim == 1:
        n = rd.u32("cell count")
        length = rd.f64("domain length")
        grid = grid_1d(n, length)
    elif ndim == 2:
        nx = rd.u32("x cell count")
        ny = rd.u32("y cell count")
        lx = rd.f64("x extent")
        ly = rd.f64("y extent")
        grid = grid_2d(nx, ny, lx, ly)
    else:
        raise FormatError(f"unsupported dimensionality {ndim}", offset=9)

    if variant == "gpod":
        rd.take(1, "layout mode")
        r = rd.u32("rank")
        flat = rd.array("<f8", grid.size * r, "basis payload")
        sigma = rd.array("<f8", rd.u32("singular value count"), "singular values")
        rd.done()
        phi = np.ascontiguousarray(flat.reshape((grid.size, r), order="F"))
        return PodBasis(variant="gpod", grid=grid, operator=sp.csr_matrix(phi),
                        singular_values=sigma)

    mode = "overlap" if rd.take(1, "layout mode")[0] else "nonoverlap"
    counts = tuple(rd.u32("subdomain count") for _ in range(ndim))
    q = rd.u32("modes per subdomain")
    layout = build_layout(grid, counts if ndim == 2 else counts[0], mode)
    n_loc = layout.points_per_subdomain
    flat = rd.array("<f8", n_loc * q, "local modes")
    sigma = rd.array("<f8", rd.u32("singular value count"), "singular values")
    rd.done()
    modes = np.ascontiguousarray(flat.reshape((n_loc, q), order="F"))
    operator = _scatter_modes(layout, modes)
    if variant == "lpod":
        return PodBasis(variant="lpod", grid=grid, operator=operator,
                        singular_values=sigma, layout=layout, local_modes=modes, q=q)
    gram_matrix = (operator.T @ operator).toarray()
    return PodBasis(variant="lopod", grid=grid, operator=operator,
                    singular_values=sigma, layout=layout, local_modes=modes,
                    kernel=kernel_for(layout), q=q, gram=GramSolver(gram_matrix),
                    gram_matrix=gram_matrix)
