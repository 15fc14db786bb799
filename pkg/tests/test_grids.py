"""Uniform periodic grid construction and validation."""

import numpy as np
import pytest

from rombox import grid_1d, grid_2d
from rombox.errors import GridError


def test_grid_1d_centers_cover_period():
    g = grid_1d(8, length=2.0)
    assert g.h == pytest.approx(0.25)
    assert g.centers[0] == pytest.approx(0.125)
    assert g.centers[-1] == pytest.approx(2.0 - 0.125)
    assert np.allclose(np.diff(g.centers), g.h)
    assert g.size == 8
    assert g.ndim == 1
    assert g.cell_volume == pytest.approx(0.25)


def test_grid_1d_rejects_degenerate_input():
    with pytest.raises(GridError):
        grid_1d(2)
    with pytest.raises(GridError):
        grid_1d(10, length=0.0)
    with pytest.raises(GridError):
        grid_1d(10, length=-1.0)


def test_grid_2d_is_origin_centered():
    g = grid_2d(4, 8)
    assert g.x0 == pytest.approx(-np.pi)
    assert g.y0 == pytest.approx(-np.pi)
    assert g.x[0] == pytest.approx(-np.pi + g.hx / 2)
    assert g.y[-1] == pytest.approx(np.pi - g.hy / 2)
    assert g.size == 32
    assert g.cell_volume == pytest.approx(g.hx * g.hy)


def test_grid_2d_flattening_is_row_major_in_y():
    g = grid_2d(4, 3)
    X, Y = g.meshgrid()
    # index g = iy * nx + ix: x varies fastest along the flattened vector
    assert X.ravel()[1] == pytest.approx(g.x[1])
    assert X.ravel()[0] == pytest.approx(g.x[0])
    assert Y.ravel()[g.nx] == pytest.approx(g.y[1])


def test_grid_2d_rejects_degenerate_input():
    with pytest.raises(GridError):
        grid_2d(2, 8)
    with pytest.raises(GridError):
        grid_2d(8, 8, lx=0.0)
