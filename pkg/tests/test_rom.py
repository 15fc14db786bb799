"""Galerkin reduction: projected operators, sparsity, reduced dynamics."""

import numpy as np
import pytest
import scipy.sparse as sp

from rombox import (IntegratorSpec, assemble_local, assemble_local_overlap,
                    build_gpod, build_layout, build_lopod, build_lpod, fom_1d,
                    galerkin_project, gaussian_ic_1d, grid_1d, identity_basis,
                    integrate, kernel_for, nnz_stats, prune_small,
                    reconstruct_trajectory, rom_spectrum, run_rom,
                    spectral_radius)
from rombox.errors import DimensionError
from rombox.metrics import energy_rate_relative


def snapshots_1d(n=64, s=12, seed=0):
    grid = grid_1d(n)
    rng = np.random.default_rng(seed)
    return grid, rng.standard_normal((n, s))


def all_bases(grid, X, n_sub=4, q=2, rank=8):
    layout_n = build_layout(grid, n_sub, "nonoverlap")
    layout_o = build_layout(grid, n_sub, "overlap")
    kernel = kernel_for(layout_o)
    return {
        "gpod": build_gpod(X, rank, grid),
        "lpod": build_lpod(assemble_local(X, layout_n), q),
        "lopod": build_lopod(assemble_local_overlap(X, layout_o, kernel), q,
                             kernel=kernel),
    }


def test_galerkin_rejects_mismatched_grid():
    grid, X = snapshots_1d()
    basis = build_gpod(X, 4, grid)
    with pytest.raises(DimensionError):
        galerkin_project(basis, fom_1d(grid_1d(32)))


def test_reduced_advection_stays_skew():
    grid, X = snapshots_1d(n=100, s=16)
    fom = fom_1d(grid)
    for basis in all_bases(grid, X).values():
        A = galerkin_project(basis, fom).reduced_advection
        asym = np.max(np.abs((A + A.T).toarray()))
        assert asym < 1e-12 * np.max(np.abs(A.toarray()))


def test_reduced_energy_rate_vanishes_for_random_states():
    grid, X = snapshots_1d(n=120, s=16, seed=4)
    fom = fom_1d(grid)
    rng = np.random.default_rng(11)
    for basis in all_bases(grid, X, n_sub=6).values():
        model = galerkin_project(basis, fom)
        for _ in range(20):
            a = rng.standard_normal(model.r)
            assert energy_rate_relative(model.rhs_matrix, a) < 1e-11


def test_prune_small_drops_only_tiny_entries():
    m = sp.csr_matrix(np.array([[1.0, 1e-20, 0.0], [0.0, -2.0, 1e-3]]))
    pruned = prune_small(m, rel=1e-14)
    assert pruned.nnz == 3
    assert pruned[0, 0] == 1.0 and pruned[1, 2] == 1e-3
    loose = prune_small(m, rel=0.5)
    assert loose.nnz == 1  # only the dominant entry survives


def test_block_structure_nonoverlap_is_tridiagonal():
    grid, X = snapshots_1d(n=80, s=16, seed=2)
    model = galerkin_project(all_bases(grid, X, n_sub=8, q=2)["lpod"],
                             fom_1d(grid))
    stats = nnz_stats(model)
    assert stats["block_offsets"] == [-1, 0, 1]
    assert stats["nnz"] <= 3 * 2 * 2 * 8


def test_block_structure_overlap_reaches_two_hops():
    grid, X = snapshots_1d(n=80, s=16, seed=2)
    model = galerkin_project(all_bases(grid, X, n_sub=8, q=2)["lopod"],
                             fom_1d(grid))
    stats = nnz_stats(model)
    assert stats["block_offsets"] == [-2, -1, 0, 1, 2]
    assert stats["nnz"] <= 5 * 2 * 2 * 8


def test_identity_basis_reproduces_the_full_model():
    grid = grid_1d(50)
    fom = fom_1d(grid)
    spec = IntegratorSpec(dt=0.01, t_end=0.5, scheme="rk4", snapshot_stride=10)
    start = gaussian_ic_1d(grid)
    full = integrate(fom.rhs_matrix, start, spec)
    model = galerkin_project(identity_basis(grid), fom)
    reduced = run_rom(model, start, spec)
    assert np.array_equal(reconstruct_trajectory(model, reduced), full.states)


def test_crank_nicolson_agrees_with_rk4_at_small_dt():
    grid, X = snapshots_1d(n=100, s=16, seed=6)
    model = galerkin_project(all_bases(grid, X, rank=10)["gpod"], fom_1d(grid))
    start = gaussian_ic_1d(grid)
    t_end = 0.2
    rk = run_rom(model, start, IntegratorSpec(dt=1e-3, t_end=t_end, scheme="rk4"))
    cn = run_rom(model, start,
                 IntegratorSpec(dt=1e-3, t_end=t_end, scheme="crank_nicolson"))
    gap = np.linalg.norm(rk.states[-1] - cn.states[-1])
    assert gap < 1e-6 * np.linalg.norm(rk.states[-1])


def test_lopod_dynamics_respect_the_gram_matrix():
    grid, X = snapshots_1d(n=90, s=14, seed=7)
    layout = build_layout(grid, 6, "overlap")
    kernel = kernel_for(layout)
    basis = build_lopod(assemble_local_overlap(X, layout, kernel), 2,
                        kernel=kernel)
    model = galerkin_project(basis, fom_1d(grid))
    rng = np.random.default_rng(3)
    a = rng.standard_normal(model.r)
    expected = np.linalg.solve(basis.gram_matrix, model.rhs_matrix @ a)
    assert np.allclose(model.rhs(a), expected, atol=1e-12)


def test_spectrum_of_skew_generator_is_imaginary():
    grid, X = snapshots_1d(n=100, s=16, seed=8)
    model = galerkin_project(all_bases(grid, X, rank=10)["gpod"], fom_1d(grid))
    vals = rom_spectrum(model)
    assert vals.shape == (10,)
    assert np.max(np.abs(vals.real)) < 1e-10 * np.max(np.abs(vals))
    assert spectral_radius(model) == pytest.approx(np.abs(vals[0]))


def test_spectrum_solves_the_generalized_problem():
    # with a non-trivial Gram matrix the generator is S^{-1} B
    grid, X = snapshots_1d(n=90, s=14, seed=7)
    layout = build_layout(grid, 6, "overlap")
    kernel = kernel_for(layout)
    basis = build_lopod(assemble_local_overlap(X, layout, kernel), 2,
                        kernel=kernel)
    model = galerkin_project(basis, fom_1d(grid))
    direct = np.linalg.eigvals(
        np.linalg.solve(basis.gram_matrix, model.rhs_matrix.toarray()))
    assert np.allclose(sorted(np.abs(rom_spectrum(model))),
                       sorted(np.abs(direct)), rtol=1e-8)


def test_reconstruct_trajectory_shape():
    grid, X = snapshots_1d()
    model = galerkin_project(build_gpod(X, 4, grid), fom_1d(grid))
    traj = run_rom(model, gaussian_ic_1d(grid),
                   IntegratorSpec(dt=0.01, t_end=0.1, scheme="rk4",
                                  snapshot_stride=5))
    full = reconstruct_trajectory(model, traj)
    assert full.shape == (len(traj.times), grid.size)
