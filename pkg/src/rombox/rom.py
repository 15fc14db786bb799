"""Galerkin projection of the full-order operators onto a POD basis.

The reduced advection matrix inherits skew-symmetry (up to round-off)
from the full operator, which is what keeps the reduced energy constant
under pure advection.  For local bases the triple product is block
sparse -- only subdomains coupled through the stencil interact -- and
tiny round-off entries outside those blocks are pruned so sparsity
structure stays exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .basis import PodBasis, project
from .errors import DimensionError
from .fom import FomModel
from .integrators import (IntegratorSpec, StateVector, Trajectory,
                          crank_nicolson_prepare, integrate)

PRUNE_REL = 1.0e-14


def prune_small(matrix: sp.spmatrix, rel: float = PRUNE_REL) -> sp.csr_matrix:
    """Drop entries at or below ``rel`` times the largest magnitude."""
    m = matrix.tocsr().copy()
    if m.nnz:
        cut = rel * float(np.max(np.abs(m.data)))
        m.data[np.abs(m.data) <= cut] = 0.0
        m.eliminate_zeros()
    return m


@dataclass
class RomModel:
    """Reduced system gram(a') = rhs_matrix @ a obtained by projection."""

    basis: PodBasis
    fom: FomModel
    reduced_advection: sp.csr_matrix = field(repr=False)
    reduced_diffusion: sp.csr_matrix | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.fom.grid.ndim == 1:
            rhs = (-self.fom.c) * self.reduced_advection
        else:
            rhs = -self.reduced_advection
            if self.reduced_diffusion is not None and self.fom.nu != 0.0:
                rhs = rhs + self.fom.nu * self.reduced_diffusion
        self.rhs_matrix = rhs.tocsr()

    @property
    def r(self) -> int:
        return self.basis.r

    @property
    def gram(self):
        return self.basis.gram

    def rhs(self, a: np.ndarray) -> np.ndarray:
        return self.gram.solve(self.rhs_matrix @ a)


def galerkin_project(basis: PodBasis, fom: FomModel,
                     prune_rel: float | None = PRUNE_REL) -> RomModel:
    """Project the full operators: reduced = basis' @ operator @ basis.

    ``prune_rel`` drops product entries at or below that relative magnitude;
    pass ``None`` to keep the raw product structure.
    """
    if basis.n != fom.grid.size:
        raise DimensionError(
            f"basis rows {basis.n} do not match model grid size {fom.grid.size}"
        )
    op = basis.operator

    def _maybe_prune(m: sp.spmatrix) -> sp.csr_matrix:
        return prune_small(m, prune_rel) if prune_rel is not None else m.tocsr()

    advection = _maybe_prune(op.T @ (fom.advection @ op))
    diffusion = None
    if fom.diffusion is not None:
        diffusion = _maybe_prune(op.T @ (fom.diffusion @ op))
    return RomModel(basis=basis, fom=fom, reduced_advection=advection,
                    reduced_diffusion=diffusion)


def run_rom(model: RomModel, state0: StateVector, spec: IntegratorSpec) -> Trajectory:
    """Integrate the reduced system from the projection of a full state.

    Returns the trajectory in reduced coordinates; reconstruct with
    :func:`reconstruct_trajectory`.
    """
    a0 = project(model.basis, np.asarray(state0.values, dtype=float))
    start = StateVector(a0, state0.time)
    if spec.scheme == "rk4":
        return integrate(model.rhs_matrix, start, spec, gram=model.gram)
    stepper = crank_nicolson_prepare(model.rhs_matrix, spec.dt,
                                     gram_matrix=model.basis.gram_matrix)
    return stepper.integrate(start, spec)


def reconstruct_trajectory(model: RomModel, traj: Trajectory) -> np.ndarray:
    """Full states (one row per recorded time) from a reduced trajectory."""
    return (model.basis.operator @ traj.states.T).T


def nnz_stats(model: RomModel, rel: float = PRUNE_REL) -> dict:
    """Sparsity summary of the reduced right-hand-side operator.

    ``nnz`` counts entries above ``rel`` times the largest magnitude.
    For local bases the q x q block pattern is summarized by the set of
    circular subdomain offsets that carry a non-empty block.
    """
    m = model.rhs_matrix.tocoo()
    r = model.r
    stats = {"r": r, "dense": r * r}
    if m.nnz == 0:
        stats["nnz"] = 0
        return stats
    cut = rel * float(np.max(np.abs(m.data)))
    keep = np.abs(m.data) > cut
    stats["nnz"] = int(keep.sum())
    basis = model.basis
    if basis.layout is not None and basis.q:
        q = basis.q
        bi = m.row[keep] // q
        bj = m.col[keep] // q
        counts = basis.layout.counts
        if basis.grid.ndim == 1:
            (n_sub,) = counts
            offsets = sorted({_signed_offset(int(d), n_sub)
                              for d in (bj - bi) % n_sub})
        else:
            ix, _ = counts
            n_sub = basis.layout.n_subdomains
            dx = (bj % ix) - (bi % ix)
            dy = (bj // ix) - (bi // ix)
            offsets = sorted({(_signed_offset(int(a) % ix, ix),
                               _signed_offset(int(b) % (n_sub // ix), n_sub // ix))
                              for a, b in zip(dx, dy)})
        stats["block_offsets"] = offsets
        stats["blocks"] = len(offsets) * basis.layout.n_subdomains
    return stats


def _signed_offset(d: int, n: int) -> int:
    """Map a circular offset in [0, n) to the signed range (-n/2, n/2]."""
    return d - n if d > n // 2 else d


def rom_spectrum(model: RomModel) -> np.ndarray:
    """Eigenvalues of the reduced generator, sorted by |eigenvalue| desc.

    Solves the generalized problem when the basis Gram matrix is
    non-trivial.
    """
    dense = model.rhs_matrix.toarray()
    if model.basis.gram_matrix is None:
        vals = scipy.linalg.eigvals(dense)
    else:
        vals = scipy.linalg.eigvals(dense, model.basis.gram_matrix)
    return vals[np.argsort(-np.abs(vals))]


def spectral_radius(model: RomModel) -> float:
    return float(np.abs(rom_spectrum(model)[0]))
