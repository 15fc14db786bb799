"""Shared fixtures: the two reference cases, built once per session."""

import pytest

from rombox import experiments as ex
from rombox.basis import truncated_svd
from rombox.config import preset_config
from rombox.kernels import kernel_for
from rombox.snapshots import assemble_local, assemble_local_overlap, build_layout


@pytest.fixture(scope="session")
def fom1d_run():
    """Full 1D reference solve: N=1000, dt=0.01, t in [0, 5]."""
    return ex.run_fom(preset_config("1d-paper"))


@pytest.fixture(scope="session")
def bases1d(fom1d_run):
    """The three r=60 bases of the 1D case (I=10, q=6)."""
    snaps = fom1d_run.snapshots
    return {
        "gpod": ex.build_basis(snaps, "gpod", rank=60),
        "lpod": ex.build_basis(snaps, "lpod", (10,), modes=6),
        "lopod": ex.build_basis(snaps, "lopod", (10,), modes=6),
    }


@pytest.fixture(scope="session")
def fom2d_run():
    """Full 2D reference solve: 256^2, dt=0.025, stride 16, t in [0, 40]."""
    return ex.run_fom(preset_config("2d-paper"))


@pytest.fixture(scope="session")
def local2d(fom2d_run):
    """2D local snapshot matrices on the 8x8 layouts plus their SVDs.

    The decompositions retain 30 modes so every consumer (basis builds,
    mode sweeps) can slice instead of recomputing.
    """
    snaps = fom2d_run.snapshots
    X = snaps.columns("train")
    grid = snaps.grid
    layout_n = build_layout(grid, (8, 8), "nonoverlap")
    local_n = assemble_local(X, layout_n)
    layout_o = build_layout(grid, (8, 8), "overlap")
    kernel = kernel_for(layout_o)
    local_o = assemble_local_overlap(X, layout_o, kernel)
    return {
        "lpod": (local_n, truncated_svd(local_n.values, 30)),
        "lopod": (local_o, truncated_svd(local_o.values, 30)),
        "kernel": kernel,
    }
